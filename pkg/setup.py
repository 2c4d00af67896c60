import numpy
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "conjdeco._kernel_core",
                ["src/conjdeco/_kernel_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

# The compiled module is an accelerator only; conjdeco.kernels falls back to
# a numpy implementation when the extension is absent.
setup(ext_modules=ext_modules)
