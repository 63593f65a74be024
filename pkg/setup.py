"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a pure-Python
twin is selected at import time), so any compilation failure downgrades
to a warning instead of aborting the install.
"""

import warnings

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError as exc:
        warnings.warn(f"building without compiled kernels ({exc})")
        return []
    ext = Extension(
        "perfbound._kernels",
        ["src/perfbound/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # -ffp-contract=off keeps results bit-identical to the pure-Python
        # twin (no FMA contraction).
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=_extensions())
