import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SPARSETRACK_NO_EXT", "0") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "sparsetrack._ckernels",
                    ["src/sparsetrack/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
