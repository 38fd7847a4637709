"""Steering-ellipsoid computations and the five feature encoders.

Schemes
-------
General15   the 15 nontrivial entries of the correlation matrix Theta
Slocc12     (a, T) of the canonical state with Bob maximally mixed
EllA9       Alice's ellipsoid: upper triangle of Q_A = T~ T~^T plus center
EllB9       Bob's ellipsoid, from the mirrored canonicalization on Alice
LutA6       diagonalized canonical T plus the co-rotated center
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import (
    ValidationError,
    partial_trace,
    pauli_decompose,
    slocc_canonicalize,
)

__all__ = [
    "SCHEMES",
    "Ellipsoid",
    "FeatureVector",
    "ellipsoid",
    "encode",
    "bob_measurement_image",
    "write_features",
    "read_features",
]

#: scheme name -> feature length
SCHEMES = {
    "General15": 15,
    "Slocc12": 12,
    "EllA9": 9,
    "EllB9": 9,
    "LutA6": 6,
}


@dataclass(frozen=True)
class Ellipsoid:
    """Steering ellipsoid: symmetric PSD matrix Q and center c in the Bloch ball."""

    Q: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.Q, dtype=float)
        c = np.asarray(self.center, dtype=float)
        if np.max(np.abs(q - q.T)) > 1e-12:
            raise ValidationError("ellipsoid matrix must be symmetric within 1e-12")
        eigs = np.linalg.eigvalsh(q)
        if eigs[0] < -1e-10:
            raise ValidationError("ellipsoid matrix must be PSD within 1e-10")
        if eigs[-1] > 1.0 + 1e-8:
            raise ValidationError("ellipsoid semiaxes exceed the Bloch ball")
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "center", c)


@dataclass(frozen=True)
class FeatureVector:
    scheme: str
    values: np.ndarray

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (SCHEMES[self.scheme],):
            raise ValidationError(
                f"{self.scheme} expects length {SCHEMES[self.scheme]}, got {v.shape}"
            )
        object.__setattr__(self, "values", v)


def ellipsoid(rho: np.ndarray, side: str) -> Ellipsoid:
    """Steering ellipsoid of the named side.

    Side A: canonicalize on Bob and read Q_A = T~ T~^T with center a~.
    Side B is the mirrored construction with the transform acting on Alice.
    """
    if side == "A":
        rep = pauli_decompose(slocc_canonicalize(rho, "B"))
        t = rep.T
        return Ellipsoid(t @ t.T, rep.a.copy())
    if side == "B":
        rep = pauli_decompose(slocc_canonicalize(rho, "A"))
        t = rep.T
        return Ellipsoid(t.T @ t, rep.b.copy())
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def _upper_triangle(q: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(3)
    return q[iu]


def _luta_parameters(rho: np.ndarray) -> np.ndarray:
    """Diagonalized canonical correlation matrix and co-rotated center.

    The SVD factors are corrected to proper rotations; the diagonal is
    magnitude-descending with the sign of det(T~) carried on the smallest
    entry, so the gauge is reachable by local unitaries.  Non-unique for
    degenerate singular values (documented; invariance holds away from
    degeneracy).
    """
    rep = pauli_decompose(slocc_canonicalize(rho, "B"))
    t = rep.T
    u, s, vt = np.linalg.svd(t)
    s = s.copy()
    if np.linalg.det(u) < 0:
        u = u.copy()
        u[:, 2] *= -1.0
        s[2] *= -1.0
    if np.linalg.det(vt) < 0:
        vt = vt.copy()
        vt[2, :] *= -1.0
        s[2] *= -1.0
    a_rot = u.T @ rep.a
    # residual gauge: singular-vector pairs may flip sign in pairs (a pi
    # rotation); fix it by making the first two center components
    # nonnegative and carrying the parity on the third.
    e1 = -1.0 if a_rot[0] < 0 else 1.0
    e2 = -1.0 if a_rot[1] < 0 else 1.0
    a_rot = np.array([e1 * a_rot[0], e2 * a_rot[1], e1 * e2 * a_rot[2]])
    return np.concatenate([s, a_rot])


def encode(rho: np.ndarray, scheme: str) -> FeatureVector:
    """Encode a two-qubit state under the named feature scheme."""
    if scheme == "General15":
        theta = pauli_decompose(rho).theta
        return FeatureVector(scheme, theta.ravel()[1:])
    if scheme == "Slocc12":
        rep = pauli_decompose(slocc_canonicalize(rho, "B"))
        return FeatureVector(scheme, np.concatenate([rep.a, rep.T.ravel()]))
    if scheme == "EllA9":
        ell = ellipsoid(rho, "A")
        return FeatureVector(scheme, np.concatenate([_upper_triangle(ell.Q), ell.center]))
    if scheme == "EllB9":
        ell = ellipsoid(rho, "B")
        return FeatureVector(scheme, np.concatenate([_upper_triangle(ell.Q), ell.center]))
    if scheme == "LutA6":
        return FeatureVector(scheme, _luta_parameters(rho))
    raise ValidationError(f"unknown scheme {scheme!r}")


def bob_measurement_image(rho: np.ndarray, x_vec: np.ndarray):
    """Alice's steered local state when Bob measures E = sum_j X_j sigma_j / 2.

    Returns (normalized 2x2 state, probability).  The subnormalized Bloch
    4-vector is Theta X / 2 and the probability is (1 + b.X)/2.
    """
    x_vec = np.asarray(x_vec, dtype=float)
    if x_vec.shape != (4,) or x_vec[0] != 1.0 or np.linalg.norm(x_vec[1:]) > 1.0 + 1e-12:
        raise ValidationError("X must be (1, x) with |x| <= 1")
    rep = pauli_decompose(rho)
    w = rep.theta @ x_vec
    prob = w[0] / 2.0
    if prob < 1e-12:
        raise ValidationError("degenerate measurement: outcome probability ~ 0")
    bloch = w[1:] / w[0]
    state = np.array(
        [
            [1.0 + bloch[2], bloch[0] - 1j * bloch[1]],
            [bloch[0] + 1j * bloch[1], 1.0 - bloch[2]],
        ],
        dtype=complex,
    ) / 2.0
    return state, float(prob)


# --------------------------------------------------------------------------
# optional feature-cache file
# --------------------------------------------------------------------------

_CACHE_HEADER = "#steerhier-features v1 scheme="


def write_features(path, scheme: str, labels, vectors) -> None:
    """Write a feature cache: header line then 'label,v1,...,vk' records."""
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown scheme {scheme!r}")
    with open(path, "w") as fh:
        fh.write(f"{_CACHE_HEADER}{scheme}\n")
        for label, vec in zip(labels, vectors):
            vals = ",".join(f"{v:.17g}" for v in np.asarray(vec, dtype=float))
            fh.write(f"{label},{vals}\n")


def read_features(path):
    """Read a feature cache; returns (scheme, labels, vectors array)."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(_CACHE_HEADER):
            raise ValidationError(f"not a steerhier feature cache: {header!r}")
        scheme = header[len(_CACHE_HEADER):]
        if scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {scheme!r} in cache header")
        labels, rows = [], []
        for line in fh:
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != SCHEMES[scheme] + 1:
                raise ValidationError("feature record has the wrong arity")
            labels.append(parts[0])
            rows.append([float(p) for p in parts[1:]])
    return scheme, labels, np.array(rows)
