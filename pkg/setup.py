"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python fallback is selected at
import time), so the build degrades gracefully when Cython or the numpy
headers are unavailable.

Build in place with:
    pip install -e . --no-build-isolation
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "ctxplan.kernels._native",
                ["src/ctxplan/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
