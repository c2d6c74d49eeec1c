"""Builds the optional compiled kernels. The package works without them."""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
except ImportError:
    pass
else:
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("termdialog._speedups", ["src/termdialog/_speedups.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
