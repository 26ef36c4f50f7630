"""Build the optional compiled kernel; the package falls back to pure Python without it."""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("squeeze_sim._core", ["src/squeeze_sim/_core.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # no Cython available
    ext_modules = []

setup(ext_modules=ext_modules)
