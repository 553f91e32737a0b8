import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The event-loop kernels call numpy's C distribution functions directly so
# that compiled runs consume the exact same bit-generator stream as the
# pure-Python fallback.  That requires linking against libnpyrandom.
numpy_random_lib = os.path.join(os.path.dirname(np.random.__file__), "lib")

speedups = Extension(
    "chasescape._engine._speedups",
    ["src/chasescape/_engine/_speedups.pyx"],
    include_dirs=[np.get_include()],
    library_dirs=[numpy_random_lib],
    libraries=["npyrandom"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([speedups], language_level=3))
