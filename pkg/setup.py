"""Build script for the compiled tridiagonal kernel.

The extension is optional: if the toolchain is unavailable the package
falls back to the pure-Python kernel at import time (see
asianfb._kernels).  -ffp-contract=off keeps the compiled kernel
bit-identical to the pure fallback so solver output does not depend on
which backend is active.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Degrade to the pure-Python kernel when compilation fails."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            print(f"warning: compiled kernel build failed ({exc}); "
                  "using the pure-Python fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building {ext.name} failed ({exc}); "
                  "using the pure-Python fallback", file=sys.stderr)


extensions = [
    Extension(
        "asianfb._kernels._native",
        ["src/asianfb/_kernels/_native.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

try:
    from Cython.Build import cythonize
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
