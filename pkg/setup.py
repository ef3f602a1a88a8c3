"""Build script for the optional Cython kernels.

The package works without them; ``distdelay._backend`` falls back to the
pure-Python implementations when the extension is missing.
"""

from setuptools import setup
from setuptools.extension import Extension

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    pass
else:
    ext_modules = cythonize(
        [Extension(
            "distdelay._kernels",
            ["src/distdelay/_kernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
            optional=True,
        )],
        compiler_directives=dict(
            language_level="3",
            boundscheck=False,
            wraparound=False,
            cdivision=True,
        ),
    )

setup(ext_modules=ext_modules)
