"""Closed-form baseline criteria for qubit-pair steerability.

Two classic devices: the CJWR steering-inequality thresholds for 2 and 3
settings (a sufficient condition for steerability built from the largest
eigenvalues of Alice's ellipsoid matrix), and the BHQB-style sufficient
condition for unsteerability evaluated on the canonical state with Bob's
marginal maximally mixed.

The unsteerability condition used here is
``max_{|x|=1} ( |a.x| + 2 |T^T x| ) <= 1`` in terms of the canonical Bloch
vector ``a`` and correlation matrix ``T``.  It is sound by an explicit
construction: with hidden states uniform on the Bloch sphere and responses
``p(a|x,lam) = (1 + a x.a_vec)/2 + (a/2) c(x) sgn(v(x).lam)`` the model
reproduces every projective-measurement assemblage exactly whenever the
inequality holds, so no projective strategy of Alice can steer Bob.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .qcore import pauli_decompose, slocc_canonicalize

__all__ = ["CriterionResult", "cjwr_value", "bhqb_unsteerable", "canonical_sphere_max"]


@dataclass(frozen=True)
class CriterionResult:
    """verdict in {'Unsteerable', 'SteerableByN', 'Unknown'} with the criterion value."""

    verdict: str
    value: float
    n: int | None = None


def _canonical_blocks(rho: np.ndarray):
    rep = pauli_decompose(slocc_canonicalize(rho, "B"))
    return rep.a, rep.T


def cjwr_value(rho: np.ndarray, n: int) -> CriterionResult:
    """CJWR steering threshold: sqrt of the sum of the n largest eigenvalues of Q_A.

    Values above 1 certify n-setting steerability; below 1 the criterion is
    silent (it is sufficient only).
    """
    if n not in (2, 3):
        raise ValueError("CJWR thresholds are defined for n in {2, 3}")
    a_vec, t_mat = _canonical_blocks(rho)
    eigs = np.sort(np.linalg.eigvalsh(t_mat @ t_mat.T))[::-1]
    value = float(np.sqrt(max(0.0, eigs[:n].sum())))
    verdict = "SteerableByN" if value > 1.0 + 1e-10 else "Unknown"
    return CriterionResult(verdict, value, n)


def canonical_sphere_max(a_vec: np.ndarray, m_mat: np.ndarray) -> float:
    """max over unit y of |a + M y|, solved exactly via the secular equation.

    Maximizing the quadratic ``y^T M^T M y + 2 (M^T a).y`` over the unit
    sphere: the maximizer is ``y = (mu I - A)^{-1} b`` with ``A = M^T M``,
    ``b = M^T a`` and mu the unique root of ``|y(mu)| = 1`` above the top
    eigenvalue of A (with the usual degenerate "hard case" handled apart).
    """
    a_mat = m_mat.T @ m_mat
    b = m_mat.T @ a_vec
    c = float(a_vec @ a_vec)
    lam, vecs = np.linalg.eigh(a_mat)
    beta = vecs.T @ b
    top = lam[-1]
    bnorm = float(np.linalg.norm(b))

    if bnorm < 1e-14:
        return float(np.sqrt(max(0.0, top + c)))

    def ynorm2(mu: float) -> float:
        return float(np.sum((beta / (mu - lam)) ** 2))

    lo = top + 1e-14 * max(1.0, abs(top))
    hi = top + bnorm + 1.0
    if ynorm2(lo) < 1.0:
        # hard case: the component along the top eigenspace vanishes
        mask = lam < top - 1e-12 * max(1.0, top)
        y_perp = np.zeros(3)
        y_perp[mask] = beta[mask] / (top - lam[mask])
        rest = max(0.0, 1.0 - float(y_perp @ y_perp))
        y = vecs @ y_perp + np.sqrt(rest) * vecs[:, -1]
        val = float(y @ a_mat @ y + 2 * b @ (vecs @ y_perp) + c)
        return float(np.sqrt(max(0.0, val)))
    mu = brentq(lambda m: ynorm2(m) - 1.0, lo, hi, xtol=1e-14, rtol=1e-14)
    y = vecs @ (beta / (mu - lam))
    y /= np.linalg.norm(y)
    val = float(y @ a_mat @ y + 2 * float(b @ y) + c)
    return float(np.sqrt(max(0.0, val)))


def bhqb_unsteerable(rho: np.ndarray) -> CriterionResult:
    """Sufficient unsteerability test on the canonical state.

    Returns Unsteerable when ``max_x (|a.x| + 2|T^T x|) <= 1``; the value
    reported is that maximum.  For the standard Werner state the condition
    certifies exactly q <= 1/2.
    """
    a_vec, t_mat = _canonical_blocks(rho)
    value = canonical_sphere_max(a_vec, 2.0 * t_mat)
    verdict = "Unsteerable" if value <= 1.0 - 1e-9 else "Unknown"
    return CriterionResult(verdict, value)
