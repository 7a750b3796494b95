"""Build hook for the optional compiled kernels.

The package works without the extension; ``plateopt.kernels`` falls back to
the numpy/LAPACK implementation when ``plateopt._kernels`` cannot be imported.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("PLATEOPT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "plateopt._kernels",
                    ["src/plateopt/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-DNPY_NO_DEPRECATED_API=NPY_1_7_API_VERSION"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
