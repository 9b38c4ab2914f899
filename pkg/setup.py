import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None and not os.environ.get("WFGRAPH_PURE"):
    extensions = cythonize(
        [
            Extension(
                "wfgraph._ckernels",
                ["src/wfgraph/_ckernels.pyx"],
                language="c++",
                include_dirs=["src/wfgraph"],
                extra_compile_args=["-O3", "-std=c++17"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
