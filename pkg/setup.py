import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    # -ffp-contract=off keeps the compiled scanline math bit-identical to the
    # numpy fallback (no FMA contraction).
    ext_modules = cythonize(
        [
            Extension(
                "gestaltbench.kernels._ckernels",
                ["src/gestaltbench/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
