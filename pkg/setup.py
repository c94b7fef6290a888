"""Build the optional compiled kernel.

The package works without the extension (a pure-Python kernel is selected
at import time), so any build failure here is non-fatal by design: install
with PUSHCLUTTER_SKIP_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("PUSHCLUTTER_SKIP_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "pushclutter._kernel_cy",
        ["src/pushclutter/_kernel_cy.pyx"],
        # The compiled kernel must produce bit-identical floats to the
        # pure-Python one: -ffp-contract=off bans fused multiply-add, and
        # the -fno-builtin-{sin,cos,sincos} trio stops GCC from combining
        # adjacent sin/cos calls into sincos(), whose results differ from
        # the separate libm calls by an ulp on some inputs.
        extra_compile_args=[
            "-O2",
            "-ffp-contract=off",
            "-fno-builtin-sin",
            "-fno-builtin-cos",
            "-fno-builtin-sincos",
        ],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
