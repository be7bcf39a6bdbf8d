"""Build script for the optional compiled sweep kernels.

The package is pure Python plus one Cython extension holding the hot
time-marching loops.  If Cython (or a C compiler) is unavailable the
extension is simply skipped and ``oneshot_unsteady._kernels`` falls back
to its pure-Python reference implementation at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "oneshot_unsteady._kernels._sweeps",
                ["src/oneshot_unsteady/_kernels/_sweeps.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
