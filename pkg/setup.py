from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "lakelet.analytics._ckernels",
                ["src/lakelet/analytics/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython: install works anyway, the pure-Python kernels take over.
    extensions = []

setup(ext_modules=extensions)
