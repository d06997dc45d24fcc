"""Build hook for the optional compiled kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so any failure here downgrades to a pure build
instead of aborting the install.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/dqptwalk/_kernels.pyx"],
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False},
    )
    include_dirs = [numpy.get_include()]
except Exception:
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
