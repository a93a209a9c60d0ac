"""Build script: compiles the optional Cython kernel extension.

The extension accelerates the exhaustive response-table scans in
``coact.kernels``.  If Cython or a C compiler is unavailable (or
``COACT_SKIP_EXT=1`` is set) the package installs without it and falls
back to the NumPy implementation at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("COACT_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext = Extension(
            "coact.kernels._ckernels",
            ["src/coact/kernels/_ckernels.pyx"],
        )
        ext_modules = cythonize(
            [ext],
            language_level="3",
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
