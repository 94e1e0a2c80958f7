"""Hybrid quantum-classical workflow engine.

Statevector simulation, SWAP-test distance estimation, VQE largest
eigenvalues, and a workflow runtime that decides per task between
classic execution and simulated quantum devices.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
