import numpy
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the NumPy
# implementation when the extension is unavailable.  -ffp-contract=off keeps
# the C arithmetic bit-compatible with the NumPy backend (no FMA fusion).
ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "spherefv._kernels",
                ["src/spherefv/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
