"""Builds the compiled extension through the project's CMake configuration and
drops it next to the pure-python package, so editable installs work with
`pip install -e . --no-build-isolation`."""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source = Path(__file__).resolve().parent
        build_dir = source / "build" / "python-ext"
        build_dir.mkdir(parents=True, exist_ok=True)
        subprocess.run(
            [
                "cmake",
                str(source),
                "-DCMAKE_BUILD_TYPE=Release",
                f"-Dpybind11_DIR={self._pybind11_dir()}",
            ],
            cwd=build_dir,
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", ".", "--target", "dcflow_core"],
            cwd=build_dir,
            check=True,
        )
        built = next((build_dir / "python" / "dcflow").glob("_core*.so"))
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(built, dest)
        if self.inplace or self.editable_mode:
            shutil.copy2(built, source / "python" / "dcflow" / built.name)

    @staticmethod
    def _pybind11_dir():
        import pybind11

        return pybind11.get_cmake_dir()


setup(
    ext_modules=[CMakeExtension("dcflow._core")],
    cmdclass={"build_ext": CMakeBuild},
)
