"""Build hook for the optional compiled kernels.

The Cython extension is optional: if it fails to build, the package still
installs and ``polydeflate.kernels`` falls back to the pure-Python versions.
"""
import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "polydeflate._ckernels",
                ["src/polydeflate/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
