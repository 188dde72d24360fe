"""Build hook for the optional compiled RK4 core.

The extension is optional: when Cython or a C compiler is missing the
package installs without it and falls back to the numpy kernels.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("GYROSTAB_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "gyrostab._kernels",
                    ["src/gyrostab/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
