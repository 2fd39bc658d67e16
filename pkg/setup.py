from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "onlinefdr._kernels._core",
                ["src/onlinefdr/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    # No Cython/numpy at build time: install pure-Python only, the kernel
    # package falls back to the _pure backend at import.
    ext_modules = []

setup(ext_modules=ext_modules)
