"""Optional compiled path kernel; the package falls back to numpy without it."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MICROTRAP_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        import numpy
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "microtrap._csim",
                    ["src/microtrap/_csim.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
