"""Exact two-qubit state algebra.

Pauli (Bloch) representation, Hilbert-Schmidt random states, marginals,
PPT separability, local unitaries, and one-way SLOCC canonicalization.
All operations are pure functions over immutable numpy arrays; RNG state
is always passed explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ValidationError",
    "SingularMarginalError",
    "NonPhysicalThetaError",
    "PAULI",
    "PauliRep",
    "LocalUnitary",
    "validate_density_matrix",
    "validate_local_state",
    "pauli_decompose",
    "pauli_compose",
    "random_state",
    "partial_trace",
    "ppt_is_separable",
    "slocc_canonicalize",
    "apply_local_unitaries",
    "random_local_unitary",
]

HERM_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
PURITY_THRESHOLD = 1e-6

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)

#: Pauli basis (identity first), shape (4, 2, 2).
PAULI = np.stack([_I2, _SX, _SY, _SZ])


class ValidationError(ValueError):
    """An operator failed a structural invariant (hermiticity, trace, PSD)."""


class SingularMarginalError(ValidationError):
    """A marginal is too close to pure for the inverse-square-root transform."""


class NonPhysicalThetaError(ValidationError):
    """A Pauli representation does not correspond to a positive operator."""


@dataclass(frozen=True)
class PauliRep:
    """Real 4x4 correlation matrix of a two-qubit state.

    Block layout ``[[1, b^T], [a, T]]`` with ``a`` Alice's Bloch vector,
    ``b`` Bob's Bloch vector and ``T`` the 3x3 correlation matrix.
    """

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (4, 4):
            raise ValidationError(f"theta must be 4x4, got {theta.shape}")
        if theta[0, 0] != 1.0:
            raise ValidationError(f"theta[0,0] must be exactly 1, got {theta[0, 0]!r}")
        object.__setattr__(self, "theta", theta)

    @property
    def a(self) -> np.ndarray:
        return self.theta[1:, 0]

    @property
    def b(self) -> np.ndarray:
        return self.theta[0, 1:]

    @property
    def T(self) -> np.ndarray:
        return self.theta[1:, 1:]


@dataclass(frozen=True)
class LocalUnitary:
    """A 2x2 unitary together with the SO(3) rotation it induces on Bloch vectors."""

    entries: np.ndarray
    bloch_rotation: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        u = np.asarray(self.entries, dtype=complex)
        if u.shape != (2, 2):
            raise ValidationError(f"unitary must be 2x2, got {u.shape}")
        if np.max(np.abs(u @ u.conj().T - _I2)) > 1e-12:
            raise ValidationError("matrix is not unitary within 1e-12")
        object.__setattr__(self, "entries", u)
        rot = self.bloch_rotation
        if rot is None:
            rot = bloch_rotation_of(u)
        else:
            rot = np.asarray(rot, dtype=float)
        if np.max(np.abs(rot @ rot.T - np.eye(3))) > 1e-10:
            raise ValidationError("Bloch rotation is not orthogonal within 1e-10")
        if abs(np.linalg.det(rot) - 1.0) > 1e-10:
            raise ValidationError("Bloch rotation must have det +1")
        object.__setattr__(self, "bloch_rotation", rot)


def bloch_rotation_of(u: np.ndarray) -> np.ndarray:
    """SO(3) action of a 2x2 unitary on Bloch vectors: O_ij = Tr(s_i U s_j U^dag)/2."""
    conj = np.einsum("ab,jbc,dc->jad", u, PAULI[1:], u.conj())
    return np.real(np.einsum("iab,jba->ij", PAULI[1:], conj)) / 2.0


def validate_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Check hermiticity, unit trace and positivity of a 4x4 density matrix.

    Returns the matrix as a complex array; raises ValidationError otherwise.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValidationError(f"density matrix must be 4x4, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERM_TOL:
        raise ValidationError("density matrix is not Hermitian within 1e-12")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
        raise ValidationError("density matrix trace differs from 1 beyond 1e-12")
    if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
        raise ValidationError("density matrix has an eigenvalue below -1e-10")
    return rho


def validate_local_state(rho: np.ndarray) -> np.ndarray:
    """Same checks as validate_density_matrix for a single-qubit state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValidationError(f"local state must be 2x2, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERM_TOL:
        raise ValidationError("local state is not Hermitian within 1e-12")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
        raise ValidationError("local state trace differs from 1 beyond 1e-12")
    if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
        raise ValidationError("local state has an eigenvalue below -1e-10")
    return rho


def pauli_decompose(rho: np.ndarray) -> PauliRep:
    """Correlation matrix Theta_ij = Tr(rho s_i x s_j) of a two-qubit state."""
    rho = validate_density_matrix(rho)
    basis = np.einsum("iab,jcd->ijacbd", PAULI, PAULI).reshape(4, 4, 4, 4)
    theta = np.einsum("ijab,ba->ij", basis, rho)
    if np.max(np.abs(theta.imag)) > 1e-12:
        raise ValidationError("correlation matrix has imaginary parts beyond 1e-12")
    theta = theta.real.copy()
    theta[0, 0] = 1.0
    return PauliRep(theta)


def pauli_compose(rep: PauliRep) -> np.ndarray:
    """Inverse of pauli_decompose: rho = sum_ij Theta_ij s_i x s_j / 4.

    Raises NonPhysicalThetaError when the reconstruction is not PSD.
    """
    theta = rep.theta if isinstance(rep, PauliRep) else PauliRep(np.asarray(rep)).theta
    basis = np.einsum("iab,jcd->ijacbd", PAULI, PAULI).reshape(4, 4, 4, 4)
    rho = np.einsum("ij,ijab->ab", theta, basis) / 4.0
    if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
        raise NonPhysicalThetaError("theta reconstructs to a non-physical operator")
    return rho


def random_state(rng: np.random.Generator) -> np.ndarray:
    """Hilbert-Schmidt random two-qubit state, rho = GG^dag / Tr(GG^dag).

    G is a 4x4 Ginibre matrix of independent standard complex Gaussians.
    """
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    w = g @ g.conj().T
    rho = w / np.trace(w).real
    # enforce exact hermiticity against rounding
    return (rho + rho.conj().T) / 2.0


def partial_trace(rho: np.ndarray, side: str) -> np.ndarray:
    """Trace out the named subsystem; side='A' leaves Bob's state and vice versa."""
    rho = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if side == "A":
        return np.einsum("abad->bd", rho)
    if side == "B":
        return np.einsum("abcb->ac", rho)
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def _partial_transpose_b(rho: np.ndarray) -> np.ndarray:
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    return r.transpose(0, 3, 2, 1).reshape(4, 4)


def ppt_is_separable(rho: np.ndarray) -> bool:
    """Exact two-qubit separability: positivity of the partial transpose on Bob."""
    return bool(np.linalg.eigvalsh(_partial_transpose_b(rho))[0] >= -PSD_TOL)


def _inv_sqrt_2x2(h: np.ndarray, threshold: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(h)
    if vals[0] < threshold:
        raise SingularMarginalError(
            f"marginal eigenvalue {vals[0]:.3e} below threshold {threshold:.0e}; "
            "inverse square root undefined"
        )
    return (vecs * (1.0 / np.sqrt(vals))) @ vecs.conj().T


def slocc_canonicalize(
    rho: np.ndarray, side: str, purity_threshold: float = PURITY_THRESHOLD
) -> np.ndarray:
    """One-way SLOCC making the named side's marginal maximally mixed.

    side='B' applies I x (rho_B)^{-1/2}, side='A' the mirrored transform.
    The output is renormalized to unit trace.  Raises SingularMarginalError
    when the marginal is too close to pure.
    """
    rho = np.asarray(rho, dtype=complex)
    marg = partial_trace(rho, "A" if side == "B" else "B")
    k = _inv_sqrt_2x2(marg, purity_threshold)
    op = np.kron(_I2, k) if side == "B" else np.kron(k, _I2)
    out = op @ rho @ op.conj().T
    out = out / np.trace(out).real
    return (out + out.conj().T) / 2.0


def apply_local_unitaries(
    rho: np.ndarray, ua: LocalUnitary, ub: LocalUnitary
) -> np.ndarray:
    """(U_A x U_B) rho (U_A x U_B)^dag."""
    if not isinstance(ua, LocalUnitary):
        ua = LocalUnitary(np.asarray(ua))
    if not isinstance(ub, LocalUnitary):
        ub = LocalUnitary(np.asarray(ub))
    op = np.kron(ua.entries, ub.entries)
    out = op @ np.asarray(rho, dtype=complex) @ op.conj().T
    return (out + out.conj().T) / 2.0


def random_local_unitary(rng: np.random.Generator) -> LocalUnitary:
    """Haar-distributed 2x2 unitary with its induced Bloch rotation."""
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return LocalUnitary(q)
