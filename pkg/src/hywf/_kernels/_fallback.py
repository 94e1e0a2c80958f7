"""Pure-NumPy implementations of the hot kernels.

Same signatures as the compiled ``_core`` extension; selected at import
time by :mod:`hywf._kernels` when the extension is unavailable or when
``HYWF_BACKEND=numpy`` is set.

State layout: qubit 0 is the most significant bit of the basis index,
so a state reshaped to ``[2] * n`` has qubit q on axis q.
"""

import numpy as np

BACKEND_NAME = "numpy"


def apply_1q(state, gate, n, target):
    """Apply a 2x2 gate to ``target``, mutating ``state`` in place."""
    psi = state.reshape([2] * n)
    view = np.moveaxis(psi, target, -1)
    view[...] = view @ gate.T
    return state


def apply_2q(state, gate, n, t0, t1):
    """Apply a 4x4 gate to qubits (t0, t1); t0 is the gate's high bit."""
    psi = state.reshape([2] * n)
    view = np.moveaxis(psi, (t0, t1), (-2, -1))
    shape = view.shape
    view[...] = (view.reshape(-1, 4) @ gate.T).reshape(shape)
    return state


def apply_3q(state, gate, n, t0, t1, t2):
    """Apply an 8x8 gate to qubits (t0, t1, t2); t0 is the high bit."""
    psi = state.reshape([2] * n)
    view = np.moveaxis(psi, (t0, t1, t2), (-3, -2, -1))
    shape = view.shape
    view[...] = (view.reshape(-1, 8) @ gate.T).reshape(shape)
    return state


def ry_ansatz_states(thetas, n, layers, pairs):
    """Prepare a batch of real ansatz states from |0...0>.

    Per layer: RY(theta) on every qubit, then a CNOT for each
    (control, target) row of ``pairs``. ``thetas`` has shape
    (batch, layers * n); returns float64 states of shape (batch, 2**n).
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    batch = thetas.shape[0]
    dim = 1 << n
    states = np.zeros((batch, dim), dtype=np.float64)
    states[:, 0] = 1.0
    idx = np.arange(dim)
    for layer in range(layers):
        for q in range(n):
            half = 0.5 * thetas[:, layer * n + q]
            c = np.cos(half)[:, None, None]
            s = np.sin(half)[:, None, None]
            view = states.reshape(batch, 1 << q, 2, -1)
            x0 = view[:, :, 0, :].copy()
            x1 = view[:, :, 1, :]
            view[:, :, 0, :] = c * x0 - s * x1
            view[:, :, 1, :] = s * x0 + c * x1
        for ctrl, targ in pairs:
            cbit = 1 << (n - 1 - ctrl)
            tbit = 1 << (n - 1 - targ)
            perm = np.where(idx & cbit, idx ^ tbit, idx)
            states[:] = states[:, perm]
    return states
