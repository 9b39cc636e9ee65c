"""Build script for the optional compiled scan kernel.

The package is fully functional without the extension: pcgkit._kernels
falls back to a numpy implementation when the compiled module is absent
(or when PCGKIT_FORCE_NUMPY=1). Any build failure here is therefore
non-fatal by design.
"""

import sys

from setuptools import setup


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"pcgkit: skipping compiled kernels ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "pcgkit._kernels._scan",
        ["src/pcgkit/_kernels/_scan.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
