import numpy as np
import pytest

from steerhier import qcore, steer_sdp
from steerhier.qcore import ValidationError
from steerhier.steer_sdp import (
    Assemblage,
    Measurement,
    SolverConfig,
    build_assemblage,
    enumerate_strategies,
    measurement_from_axis,
    sample_measurements,
    solve_lhs,
    validate_model,
    validate_witness,
)


def werner(q):
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    return q * np.outer(v, v.conj()) + (1 - q) * np.eye(4) / 4


XZ = [measurement_from_axis([1, 0, 0]), measurement_from_axis([0, 0, 1])]
XYZ = XZ + [measurement_from_axis([0, 1, 0])]


class TestMeasurement:
    def test_projectors_sum_to_identity(self):
        m = measurement_from_axis([1.0, 2.0, -1.0])
        assert np.max(np.abs(m.projectors.sum(axis=0) - np.eye(2))) < 1e-14
        for p in m.projectors:
            assert np.max(np.abs(p @ p - p)) < 1e-14

    def test_bad_axis_rejected(self):
        with pytest.raises(ValidationError):
            Measurement(np.array([1.0, 1.0, 0.0]))

    def test_sample_axes_unit(self):
        ms = sample_measurements(np.random.default_rng(0), 100)
        for m in ms:
            assert abs(np.linalg.norm(m.axis) - 1) < 1e-12


class TestAssemblage:
    def test_build_consistency(self):
        rng = np.random.default_rng(1)
        rho = qcore.random_state(rng)
        ms = sample_measurements(rng, 3)
        asm = build_assemblage(rho, ms)
        # outcome probabilities are Tr[(M x I) rho]
        for x, m in enumerate(ms):
            for a in range(2):
                p = np.trace(np.kron(m.projectors[a], np.eye(2)) @ rho).real
                assert abs(asm.probabilities[x, a] - p) < 1e-12
        assert np.max(np.abs(asm.bob_state - qcore.partial_trace(rho, "A"))) < 1e-12

    def test_no_signalling_enforced(self):
        sig = np.zeros((2, 2, 2, 2), dtype=complex)
        sig[0, 0] = np.eye(2) * 0.5
        sig[0, 1] = np.eye(2) * 0.0
        sig[1, 0] = np.eye(2) * 0.3
        sig[1, 1] = np.eye(2) * 0.25
        with pytest.raises(ValidationError):
            Assemblage(sig)


class TestStrategies:
    def test_enumeration(self):
        t = enumerate_strategies(3)
        assert t.size == 8
        assert np.array_equal(t.digits[5], [1, 0, 1])  # big-endian base 2
        assert np.array_equal(t.d(0, 1), (t.digits[:, 1] == 0).astype(float))

    def test_guard(self):
        with pytest.raises(ValueError):
            enumerate_strategies(25)


class TestSolveLhs:
    def test_product_state_unsteerable(self):
        rng = np.random.default_rng(2)
        a = qcore.random_state(rng)[:2, :2]
        a = (a + a.conj().T) / 2
        a /= np.trace(a).real
        rho = np.kron(a, a)
        asm = build_assemblage(rho, sample_measurements(rng, 3))
        v = solve_lhs(asm)
        assert v.kind == "unsteerable"
        assert validate_model(asm, v.model)

    def test_werner_xz_threshold(self):
        # two-setting x/z threshold is 1/sqrt(2)
        hi = solve_lhs(build_assemblage(werner(0.75), XZ))
        lo = solve_lhs(build_assemblage(werner(0.65), XZ))
        assert hi.kind == "steerable"
        assert lo.kind == "unsteerable"

    def test_werner_xyz_threshold(self):
        hi = solve_lhs(build_assemblage(werner(0.62), XYZ))
        lo = solve_lhs(build_assemblage(werner(0.55), XYZ))
        assert hi.kind == "steerable"
        assert lo.kind == "unsteerable"

    def test_certificates_validate(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            rho = qcore.random_state(rng)
            asm = build_assemblage(rho, sample_measurements(rng, int(rng.integers(2, 5))))
            v = solve_lhs(asm)
            if v.kind == "unsteerable":
                assert validate_model(asm, v.model)
            elif v.kind == "steerable":
                assert validate_witness(asm, v.witness)

    def test_witness_value_matches_pairing(self):
        v = solve_lhs(build_assemblage(werner(0.9), XZ))
        assert v.kind == "steerable"
        asm = build_assemblage(werner(0.9), XZ)
        pairing = float(np.einsum("xaij,xaji->", v.witness, asm.sigma).real)
        assert abs(pairing - v.t_star) < 1e-10


class TestAgainstConicSolver:
    """Independent oracle: the same feasibility program via cvxpy."""

    @staticmethod
    def _cvx_tstar(asm):
        cp = pytest.importorskip("cvxpy")
        table = enumerate_strategies(asm.n)
        sigs = [cp.Variable((2, 2), hermitian=True) for _ in range(table.size)]
        t = cp.Variable()
        cons = [s - t * np.eye(2) >> 0 for s in sigs]
        for x in range(asm.n):
            for a in range(2):
                expr = sum(sigs[k] for k in range(table.size)
                           if table.digits[k, x] == a)
                cons.append(expr == asm.sigma[x, a])
        cp.Problem(cp.Maximize(t), cons).solve(solver=cp.CLARABEL)
        return float(t.value)

    def test_verdicts_agree(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            rho = qcore.random_state(rng)
            asm = build_assemblage(rho, sample_measurements(rng, int(rng.integers(2, 5))))
            v = solve_lhs(asm)
            ts = self._cvx_tstar(asm)
            if ts >= -1e-9:
                assert v.kind in ("unsteerable", "indeterminate")
            elif ts < -1e-6:
                assert v.kind in ("steerable", "indeterminate")

    def test_werner_tstar_value(self):
        asm = build_assemblage(werner(0.6), XZ)
        v = solve_lhs(asm)
        assert v.kind == "unsteerable"
        assert self._cvx_tstar(asm) >= 0.0


class TestValidators:
    def test_tampered_model_rejected(self):
        rng = np.random.default_rng(5)
        rho = werner(0.4)
        asm = build_assemblage(rho, XZ)
        v = solve_lhs(asm)
        assert v.kind == "unsteerable"
        bad = v.model.copy()
        bad[0] += 0.01 * np.eye(2)
        assert not validate_model(asm, bad)

    def test_tampered_witness_rejected(self):
        asm = build_assemblage(werner(0.9), XZ)
        v = solve_lhs(asm)
        bad = v.witness.copy()
        bad[0, 0] -= 0.05 * np.eye(2)
        assert not validate_witness(asm, bad)

    def test_witness_on_unsteerable_data_rejected(self):
        v = solve_lhs(build_assemblage(werner(0.9), XZ))
        asm_lo = build_assemblage(werner(0.3), XZ)
        assert not validate_witness(asm_lo, v.witness)
