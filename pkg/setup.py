"""Builds the optional compiled step-loop kernel.

The package works without it (a pure-Python kernel is selected at import
time), so a missing compiler or Cython only costs speed.

Floating-point contraction is disabled so the compiled kernel is
bit-identical to the pure-Python one.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "giftsim._speedups",
                ["src/giftsim/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
