"""Build script for the compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed build here should not block installation:
run with CBDEFS_SKIP_EXT=1 to install pure-Python only.
"""
import os

from setuptools import Extension, setup

extensions = []
if not os.environ.get("CBDEFS_SKIP_EXT"):
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "cbdefs._kernels",
                ["src/cbdefs/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
