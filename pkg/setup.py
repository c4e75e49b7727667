"""Build hooks: compile the optional contact-solver extension when Cython is present.

The package is fully functional without the extension; hardpair._kernel falls
back to the pure-Python reference implementation at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hardpair._kernel._fast",
                ["src/hardpair/_kernel/_fast.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
