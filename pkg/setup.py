import numpy
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the accelerator if possible; the package falls back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain-dependent
            print(f"warning: compiled kernel skipped ({exc}); using pure-Python lane")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: {ext.name} skipped ({exc}); using pure-Python lane")


import os

try:
    from Cython.Build import cythonize

    if not os.path.exists("src/slgram/_kernel/_fast.pyx"):
        raise ImportError("kernel source not present")
    ext_modules = cythonize(
        [
            Extension(
                "slgram._kernel._fast",
                ["src/slgram/_kernel/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:  # pragma: no cover
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
