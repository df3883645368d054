import numpy as np
from setuptools import Extension, setup

# The compiled kernel is optional: if Cython (or a C compiler) is missing
# the package falls back to the pure-numpy implementation at import time.
try:
    from Cython.Build import cythonize
    ext = Extension(
        "gateforge._fastkernels",
        ["src/gateforge/_fastkernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext.optional = True  # a failed compile degrades to the numpy kernel
    extensions = cythonize([ext], compiler_directives={"language_level": "3"})
except ImportError:
    extensions = []

setup(ext_modules=extensions)
