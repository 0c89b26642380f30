import os

from setuptools import Extension, setup

PYX = "src/fliqc/_kernels/core.pyx"

ext_modules = []
if os.path.exists(PYX):
    import numpy as np
    from Cython.Build import cythonize

    ext = Extension(
        "fliqc._kernels.core",
        [PYX],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
