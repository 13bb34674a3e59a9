import sys

import numpy
from setuptools import Extension, setup

# The compiled kernels are an optional speedup: if Cython or a C compiler is
# unavailable the package falls back to the NumPy implementation at import
# time (circadian_mfg._kernels).
ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "circadian_mfg._kernels._core",
                ["src/circadian_mfg/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                # no -ffast-math / -march: the kernels rely on strict IEEE
                # ordering for exact conservation and mirror symmetries
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except Exception as exc:  # pragma: no cover
    print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
