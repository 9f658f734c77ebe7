from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

ext_modules = [
    Pybind11Extension(
        "rotdet_kernels._core",
        ["src/rotdet_kernels/_core.cpp"],
        cxx_std=17,
        # the kernels must match the reference implementation bit-for-bit:
        # forbid FP contraction and value-changing optimizations, and stop
        # the compiler from fusing adjacent cos/sin calls into sincos()
        # (whose results can differ from sin()/cos() by 1 ulp)
        extra_compile_args=[
            "-O2",
            "-ffp-contract=off",
            "-fno-fast-math",
            "-fno-builtin-sin",
            "-fno-builtin-cos",
            "-fno-builtin-sincos",
        ],
    )
]

setup(ext_modules=ext_modules, cmdclass={"build_ext": build_ext})
