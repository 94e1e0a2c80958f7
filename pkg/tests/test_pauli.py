import itertools

import numpy as np
import pytest

from hywf import pauli
from hywf.errors import ValidationError
from tests.conftest import random_bipartite, random_hermitian


class TestPauliMatrix:
    def test_z(self):
        assert np.allclose(pauli.pauli_matrix("Z").matrix, np.diag([1, -1]))

    def test_double_identity(self):
        assert np.allclose(pauli.pauli_matrix("II").matrix, np.eye(4))

    def test_xz_kronecker_oracle(self):
        expected = np.kron(
            np.array([[0, 1], [1, 0]]), np.array([[1, 0], [0, -1]])
        ).astype(complex)
        assert np.allclose(pauli.pauli_matrix("XZ").matrix, expected)

    def test_invalid_letter(self):
        with pytest.raises(ValidationError):
            pauli.pauli_matrix("XA")


class TestOrthogonality:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_trace_orthogonality_exhaustive(self, n):
        mats = {s: pauli.pauli_matrix(s).matrix for s in pauli.all_strings(n)}
        dim = 1 << n
        for a, b in itertools.product(mats, repeat=2):
            tr = np.trace(mats[a] @ mats[b])
            expected = dim if a == b else 0.0
            assert abs(tr - expected) < 1e-12


class TestDecompose:
    def test_x_matrix(self):
        out = pauli.decompose(np.array([[0, 1], [1, 0]], dtype=float))
        assert out.terms == {"X": pytest.approx(1.0)}

    def test_z_matrix(self):
        out = pauli.decompose(np.array([[1, 0], [0, -1]], dtype=float))
        assert out.terms == {"Z": pytest.approx(1.0)}

    def test_round_trip_random(self, rng):
        for dim in (2, 4, 8, 16):
            h = random_hermitian(dim, rng)
            back = pauli.reconstruct(pauli.decompose(h))
            assert np.max(np.abs(back - h)) < 1e-10

    def test_weights_real(self, rng):
        h = random_hermitian(8, rng)
        out = pauli.decompose(h)
        assert all(isinstance(w, float) for w in out.terms.values())

    def test_rejects_non_hermitian(self, rng):
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        with pytest.raises(ValidationError):
            pauli.decompose(m)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValidationError):
            pauli.decompose(np.eye(6))

    def test_bipartite_identity_weight_is_zero(self, rng):
        # Tr(B) = 0 so the all-I coefficient vanishes
        b = random_bipartite(2, rng)
        out = pauli.decompose(b)
        assert "IIII" not in out.terms  # pruned at ~0
        back = pauli.reconstruct(out)
        assert np.max(np.abs(back - b)) < 1e-10

    def test_term_count_bound(self, rng):
        h = random_hermitian(8, rng)
        assert len(pauli.decompose(h)) <= 4**3


class TestReconstruct:
    def test_single_x(self):
        out = pauli.reconstruct(pauli.WeightedPauliSum(1, {"X": 1.0}))
        assert np.allclose(out, [[0, 1], [1, 0]])

    def test_empty_sum_is_zero_matrix(self):
        out = pauli.reconstruct(pauli.WeightedPauliSum(2, {}))
        assert np.allclose(out, np.zeros((4, 4)))

    def test_tiny_weights_pruned(self):
        s = pauli.WeightedPauliSum(1, {"X": 1.0, "Z": 1e-15})
        assert "Z" not in s.terms


class TestPadding:
    def test_3x3_gets_zero_row(self):
        m = np.diag([1.0, 2.0, 3.0])
        out = pauli.pad_to_power_of_two(m)
        assert out.shape == (4, 4)
        assert np.allclose(out[:3, :3], m)
        assert np.allclose(out[3, :], 0) and np.allclose(out[:, 3], 0)

    def test_power_of_two_unchanged(self, rng):
        h = random_hermitian(4, rng)
        assert np.allclose(pauli.pad_to_power_of_two(h), h)

    def test_largest_eigenvalue_preserved(self, rng):
        for k in (1, 3, 5):
            b = random_bipartite(k, rng)  # LEBM > 0
            padded = pauli.pad_to_power_of_two(b[: 2 * k - 1, : 2 * k - 1])
            top_orig = np.linalg.eigvalsh(b[: 2 * k - 1, : 2 * k - 1])[-1]
            top_padded = np.linalg.eigvalsh(padded)[-1]
            assert top_padded == pytest.approx(max(top_orig, 0.0), abs=1e-12)

    def test_padding_preserves_hermiticity(self, rng):
        h = random_hermitian(8, rng)[:5, :5]
        out = pauli.pad_to_power_of_two(h)
        assert np.max(np.abs(out - out.conj().T)) == 0.0


class TestSerialization:
    def test_round_trip(self, rng):
        h = random_hermitian(4, rng)
        original = pauli.decompose(h)
        back = pauli.WeightedPauliSum.from_text(original.to_text())
        assert back.num_qubits == 2
        assert set(back.terms) == set(original.terms)
        for s in original.terms:
            assert back.terms[s] == pytest.approx(original.terms[s], abs=0)

    def test_rejects_garbage(self):
        with pytest.raises(ValidationError):
            pauli.WeightedPauliSum.from_text("XY 1.0 extra\n")
        with pytest.raises(ValidationError):
            pauli.WeightedPauliSum.from_text("")
