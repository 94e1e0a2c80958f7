import numpy as np
import pytest

from hywf import md, swaptest
from hywf.encode import prepare_swap_inputs
from hywf.errors import EncodingError
from hywf.qsim import QuantumRegister

SQ2 = np.sqrt(2.0)


def reg1(a, b):
    return QuantumRegister(1, np.array([a, b], dtype=complex))


class TestSwapTest:
    def test_identical_states(self):
        r = swaptest.swap_test(reg1(1, 0), reg1(1, 0), shots=0, seed=0)
        assert r.prob_zero == pytest.approx(1.0)
        assert r.fidelity == pytest.approx(1.0)

    def test_orthogonal_states(self):
        r = swaptest.swap_test(reg1(1, 0), reg1(0, 1), shots=0, seed=0)
        assert r.prob_zero == pytest.approx(0.5)
        assert r.fidelity == pytest.approx(0.0, abs=1e-12)

    def test_plus_zero_statevector_oracle(self):
        r = swaptest.swap_test(reg1(1 / SQ2, 1 / SQ2), reg1(1, 0), shots=0, seed=0)
        assert r.prob_zero == pytest.approx(0.75)

    def test_multiqubit_overlap(self, rng):
        for _ in range(5):
            a = rng.normal(size=4) + 1j * rng.normal(size=4)
            b = rng.normal(size=4) + 1j * rng.normal(size=4)
            a /= np.linalg.norm(a)
            b /= np.linalg.norm(b)
            pa, pb = QuantumRegister(2, a), QuantumRegister(2, b)
            r = swaptest.swap_test(pa, pb, shots=0, seed=0)
            assert r.prob_zero == pytest.approx(0.5 + abs(np.vdot(a, b)) ** 2 / 2)

    def test_size_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            swaptest.swap_test(reg1(1, 0), QuantumRegister(2, np.array([1, 0, 0, 0], dtype=complex)), 0, 0)

    def test_shot_mode_converges(self):
        r = swaptest.swap_test(reg1(1 / SQ2, 1 / SQ2), reg1(1, 0), shots=100_000, seed=3)
        sigma = np.sqrt(0.75 * 0.25 / 100_000)
        assert abs(r.prob_zero - 0.75) <= 4 * sigma

    def test_shot_mode_deterministic(self):
        a = swaptest.swap_test(reg1(1, 0), reg1(0, 1), shots=1000, seed=5)
        b = swaptest.swap_test(reg1(1, 0), reg1(0, 1), shots=1000, seed=5)
        assert a.prob_zero == b.prob_zero

    def test_fidelity_clamped(self):
        r = swaptest.swap_test(reg1(1, 0), reg1(0, 1), shots=50, seed=1)
        assert 0.0 <= r.fidelity <= 1.0


class TestEstimateDistance:
    def test_identical_atoms(self):
        est = swaptest.estimate_distance([1, 2, 3], [1, 2, 3], shots=0, seed=0)
        assert est.value == pytest.approx(0.0, abs=1e-7)
        assert est.exact == 0.0

    def test_unit_axes_pair(self):
        # |<phi|psi>|^2 = d^2/(2W) = 0.5 so Pr(0) = 0.75, d = sqrt(2)
        est = swaptest.estimate_distance([1, 0, 0], [0, 1, 0], shots=0, seed=0)
        assert est.value == pytest.approx(np.sqrt(2.0), abs=1e-9)
        phi, psi, w = prepare_swap_inputs([1, 0, 0], [0, 1, 0])
        r = swaptest.swap_test(phi, psi, shots=0, seed=0, psi_qubits=(0,))
        assert r.prob_zero == pytest.approx(0.75)

    def test_origin_shift_rule(self):
        est = swaptest.estimate_distance([0, 0, 0], [3, 4, 0], shots=0, seed=0)
        assert est.exact == pytest.approx(5.0)
        assert est.value == pytest.approx(5.0, abs=1e-9)

    def test_both_zero_norm_rejected(self):
        with pytest.raises(EncodingError):
            swaptest.estimate_distance([0, 0, 0], [0, 0, 0], shots=0, seed=0)

    def test_exact_mode_matches_classical_metric(self, rng):
        # core correctness theorem of the distance pipeline
        for _ in range(50):
            u, v = rng.uniform(0, 10, 3), rng.uniform(0, 10, 3)
            est = swaptest.estimate_distance(u, v, shots=0, seed=0)
            assert abs(est.value - est.exact) < 1e-6
            assert est.exact == pytest.approx(md.euclidean_distance(u, v))

    def test_shot_mode_d_squared_bound(self, rng):
        # provable bound: |value^2 - exact^2| <= 4W * 4 * (0.5/sqrt(shots))
        shots = 10_000
        bound_p = 4 * 0.5 / np.sqrt(shots)
        for k in range(20):
            u, v = rng.uniform(0, 10, 3), rng.uniform(0, 10, 3)
            w = float(u @ u + v @ v)
            est = swaptest.estimate_distance(u, v, shots=shots, seed=100 + k)
            assert abs(est.value**2 - est.exact**2) <= 4 * w * bound_p

    def test_prob_zero_range(self, rng):
        # exact mode: Pr(0) >= 0.5 with no clamp; shot mode stays within
        # 4 sigma below 0.5
        shots = 10_000
        four_sigma = 4 * 0.5 / np.sqrt(shots)
        for k in range(10):
            u, v = rng.uniform(0, 10, 3), rng.uniform(0, 10, 3)
            phi, psi, _ = prepare_swap_inputs(u, v)
            exact = swaptest.swap_test(phi, psi, 0, 0, psi_qubits=(0,))
            assert 0.5 <= exact.prob_zero <= 1.0 + 1e-12
            sampled = swaptest.swap_test(phi, psi, shots, 50 + k, psi_qubits=(0,))
            assert 0.5 - four_sigma <= sampled.prob_zero <= 1.0 + four_sigma

    def test_negative_radicand_clamps(self):
        # nearly identical points: sampling noise can push Pr(0) below 0.5
        values = [
            swaptest.estimate_distance([1, 1, 1], [1, 1, 1.0001], shots=200, seed=s).value
            for s in range(30)
        ]
        assert all(v >= 0.0 for v in values)


class TestDistanceMatrixQuantum:
    def test_single_identical_pair(self):
        out = swaptest.distance_matrix_quantum([[1, 2, 3]], [[1, 2, 3]], shots=0, seed=0)
        assert len(out) == 1 and len(out[0]) == 1
        assert out[0][0].value == pytest.approx(0.0, abs=1e-7)

    def test_rect_matrix_matches_classical(self, rng):
        seg_a = [rng.uniform(0, 10, 3) for _ in range(2)]
        seg_b = [rng.uniform(0, 10, 3) for _ in range(3)]
        out = swaptest.distance_matrix_quantum(seg_a, seg_b, shots=0, seed=0)
        assert len(out) == 2 and len(out[0]) == 3
        for i in range(2):
            for j in range(3):
                exact = md.euclidean_distance(seg_a[i], seg_b[j])
                assert out[i][j].value == pytest.approx(exact, abs=1e-6)

    def test_empty_segment(self):
        with pytest.raises(ValueError):
            swaptest.distance_matrix_quantum([], [[1, 2, 3]], shots=0, seed=0)

    def test_per_pair_seeds_differ(self):
        seg = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]
        out = swaptest.distance_matrix_quantum(seg, seg, shots=100, seed=7)
        rerun = swaptest.distance_matrix_quantum(seg, seg, shots=100, seed=7)
        for i in range(2):
            for j in range(2):
                assert out[i][j].value == rerun[i][j].value
