import numpy as np
import pytest

from steerhier import qcore
from steerhier.features import (
    SCHEMES,
    Ellipsoid,
    bob_measurement_image,
    ellipsoid,
    encode,
    read_features,
    write_features,
)
from steerhier.qcore import ValidationError, random_state


def werner(q):
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    return q * np.outer(v, v.conj()) + (1 - q) * np.eye(4) / 4


def random_invertible_kraus(rng, cond_max=4.0):
    while True:
        k = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        s = np.linalg.svd(k, compute_uv=False)
        if s[0] / s[1] < cond_max:
            return k / s[0]


def apply_kraus(rho, k, side):
    op = np.kron(k, np.eye(2)) if side == "A" else np.kron(np.eye(2), k)
    out = op @ rho @ op.conj().T
    return out / np.trace(out).real


class TestEllipsoid:
    def test_werner_sphere(self):
        ell = ellipsoid(werner(0.6), "A")
        assert np.max(np.abs(ell.Q - 0.36 * np.eye(3))) < 1e-12
        assert np.max(np.abs(ell.center)) < 1e-12

    def test_validation(self):
        with pytest.raises(ValidationError):
            Ellipsoid(np.diag([2.0, 0.5, 0.5]), np.zeros(3))
        with pytest.raises(ValidationError):
            Ellipsoid(np.array([[0.5, 0.2, 0], [0.1, 0.5, 0], [0, 0, 0.5]]),
                      np.zeros(3))

    def test_semiaxes_in_ball(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            ell = ellipsoid(random_state(rng), "A")
            assert np.linalg.eigvalsh(ell.Q)[-1] <= 1 + 1e-8


class TestSchemes:
    def test_lengths(self):
        rng = np.random.default_rng(1)
        rho = random_state(rng)
        for scheme, k in SCHEMES.items():
            assert encode(rho, scheme).values.shape == (k,)

    def test_unknown_scheme(self):
        with pytest.raises(ValidationError):
            encode(werner(0.5), "Nope")

    def test_general15_is_theta(self):
        rho = werner(0.7)
        v = encode(rho, "General15").values
        assert np.max(np.abs(v - qcore.pauli_decompose(rho).theta.ravel()[1:])) < 1e-14

    def test_luta6_werner(self):
        v = encode(werner(0.6), "LutA6").values
        # |diagonal entries| = q, product of signs = det T = -q^3 < 0
        assert np.max(np.abs(np.abs(v[:3]) - 0.6)) < 1e-10
        assert np.prod(np.sign(v[:3])) < 0
        assert np.max(np.abs(v[3:])) < 1e-10


class TestInvariances:
    def test_qa_slocc_on_bob(self):
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(100):
            rho = random_state(rng)
            k = random_invertible_kraus(rng)
            try:
                before = encode(rho, "EllA9").values
                after = encode(apply_kraus(rho, k, "B"), "EllA9").values
            except qcore.SingularMarginalError:
                continue
            worst = max(worst, float(np.max(np.abs(before - after))))
        assert worst < 1e-8

    def test_ellb9_slocc_on_alice(self):
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(100):
            rho = random_state(rng)
            k = random_invertible_kraus(rng)
            try:
                before = encode(rho, "EllB9").values
                after = encode(apply_kraus(rho, k, "A"), "EllB9").values
            except qcore.SingularMarginalError:
                continue
            worst = max(worst, float(np.max(np.abs(before - after))))
        assert worst < 1e-8

    def test_luta6_local_unitaries(self):
        rng = np.random.default_rng(4)
        worst = 0.0
        checked = 0
        while checked < 100:
            rho = random_state(rng)
            rep = qcore.pauli_decompose(qcore.slocc_canonicalize(rho, "B"))
            s = np.linalg.svd(rep.T, compute_uv=False)
            if min(s[0] - s[1], s[1] - s[2], s[2]) < 1e-3:
                continue  # gauge is only unique away from degeneracy
            ua = qcore.random_local_unitary(rng)
            ub = qcore.random_local_unitary(rng)
            rot = qcore.apply_local_unitaries(rho, ua, ub)
            diff = np.max(np.abs(encode(rho, "LutA6").values
                                 - encode(rot, "LutA6").values))
            worst = max(worst, float(diff))
            checked += 1
        assert worst < 1e-8


class TestMeasurementImage:
    def test_image_inside_ellipsoid(self):
        # every steered Bloch point satisfies the ellipsoid quadric
        rng = np.random.default_rng(5)
        for _ in range(20):
            rho = random_state(rng)
            try:
                canon = qcore.slocc_canonicalize(rho, "B")
            except qcore.SingularMarginalError:
                continue
            ell = ellipsoid(rho, "A")
            rep = qcore.pauli_decompose(canon)
            qinv = np.linalg.pinv(ell.Q)
            for _ in range(20):
                x = rng.standard_normal(3)
                x /= np.linalg.norm(x) * 1.0001
                state, prob = bob_measurement_image(canon, np.array([1.0, *x]))
                bloch = np.array([
                    2 * state[0, 1].real, -2 * state[0, 1].imag,
                    (state[0, 0] - state[1, 1]).real,
                ])
                d = bloch - ell.center
                assert d @ qinv @ d <= 1 + 1e-6

    def test_trivial_measurement(self):
        state, prob = bob_measurement_image(werner(0.6), np.array([1.0, 0, 0, 0]))
        assert abs(prob - 0.5) < 1e-14
        assert np.max(np.abs(state - np.eye(2) / 2)) < 1e-12

    def test_degenerate_rejected(self):
        rho = np.kron(np.eye(2) / 2, np.diag([1.0, 0.0]).astype(complex))
        with pytest.raises(ValidationError):
            bob_measurement_image(rho, np.array([1.0, 0, 0, -1.0]))


class TestCacheIO:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(6)
        vecs = rng.standard_normal((5, 6))
        labels = ["MS2", "UNS", "STE", "MS3", "MS4"]
        path = tmp_path / "cache.csv"
        write_features(path, "LutA6", labels, vecs)
        scheme, labels2, vecs2 = read_features(path)
        assert scheme == "LutA6" and labels2 == labels
        assert np.array_equal(vecs, vecs2)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("#something else\n")
        with pytest.raises(ValidationError):
            read_features(path)
