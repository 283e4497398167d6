"""Build script for the compiled distance-scan kernels.

The extension is optional: when Cython or a C compiler is unavailable the
package falls back to the numpy kernels at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "oclmine._kernels",
                ["src/oclmine/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # No contracted multiply-adds: the compiled kernels must be
                # bitwise-identical to the numpy fallback.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
