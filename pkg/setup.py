from setuptools import Extension, setup
from Cython.Build import cythonize

# Typed-memoryview code only; no numpy C-API, so no include dirs needed.
extensions = [
    Extension(
        "semsmooth._ckern",
        ["src/semsmooth/_ckern.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
