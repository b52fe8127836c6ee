"""Build hook for the optional compiled kernels.

If Cython or a C compiler is unavailable the package still installs and the
pure numpy fallback in ``tailcluster._kernels_py`` is used at import time.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("TAILCLUSTER_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "tailcluster._kernels",
                    ["src/tailcluster/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
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
    except ImportError:  # pragma: no cover - build environment without Cython
        ext_modules = []

setup(ext_modules=ext_modules)
