"""Build script: compiles the optional Cython round kernel.

The package is fully functional without the extension (a pure-Python
kernel is selected at import time), so a missing compiler or Cython
only costs speed, never correctness.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/diagfd/_kernel_c.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
