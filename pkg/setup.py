"""Build the optional Cython event kernel.

The package works without the compiled extension (a pure-Python kernel is
selected at import time), so a missing compiler degrades gracefully instead
of failing the install.
"""
import sys

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "kpzlab._kernel",
                ["src/kpzlab/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover
    sys.stderr.write(f"kpzlab: building without compiled kernel ({exc})\n")

setup(ext_modules=ext_modules)
