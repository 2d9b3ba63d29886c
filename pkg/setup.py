"""Build the optional compiled kernels.

The package works without them (``matchmarket._pykernels`` is used), so a
missing compiler or Cython only produces a warning.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("MATCHMARKET_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "matchmarket._ckernels",
                    ["src/matchmarket/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # bit-identical output with the numpy fallback needs
                    # plain IEEE double arithmetic: no FMA contraction
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - depends on build env
        print(f"warning: compiled kernels disabled ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
