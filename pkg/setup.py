"""Build script for the compiled plant kernel.

The package works without the extension (a pure-Python fallback is selected
at import time); building it makes closed-loop rollouts roughly an order of
magnitude faster.  `-ffp-contract=off` keeps the compiled arithmetic
bit-identical to the Python fallback.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "kitbench._fastpath._plant",
                ["src/kitbench/_fastpath/_plant.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
