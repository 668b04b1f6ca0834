"""Build the optional compiled kernels; the package works without them."""
import numpy  # noqa: F401  (build requirement, keeps the toolchain check explicit)
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # build without the extension, the pure-Python kernels are used
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("holelock._kernels", ["src/holelock/_kernels.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
