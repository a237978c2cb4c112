"""Build script. The compiled color kernel is optional: if Cython or a C
compiler is unavailable the package installs pure-Python and selects the
numpy backend at import time."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "palettizer.kernels._colorext",
                ["src/palettizer/kernels/_colorext.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
