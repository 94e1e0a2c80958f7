import numpy as np
import pytest

from hywf import md, mdflow


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (z + z.conj().T) / 2


def random_bipartite(k, rng, box=10.0):
    """2k x 2k bipartite distance matrix from random atom positions."""
    pos_i = rng.uniform(0, box, (k, 3))
    pos_j = rng.uniform(0, box, (k, 3))
    e = np.linalg.norm(pos_i[:, None, :] - pos_j[None, :, :], axis=2)
    b = np.zeros((2 * k, 2 * k))
    b[:k, k:] = e
    b[k:, :k] = e.T
    return b


def random_frame(num_atoms, rng, index=0, time=0.0, box=10.0):
    coords = {i + 1: rng.uniform(0, box, 3) for i in range(num_atoms)}
    return md.Frame(index, time, coords)


@pytest.fixture
def toy_trajectory(tmp_path):
    path = tmp_path / "traj.txt"
    path.write_text(mdflow.toy_trajectory_text(frames=10, segment_size=8))
    return path
