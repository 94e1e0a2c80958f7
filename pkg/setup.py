from setuptools import Extension, setup

import numpy

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "hywf._kernels._core",
                ["src/hywf/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    # No Cython available: install pure-Python only, the NumPy fallback
    # kernels are selected at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
