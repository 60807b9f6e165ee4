"""Build the optional Cython kernels.

The extension is optional: if Cython is missing or compilation fails the
package still installs and :mod:`mpsqc.kernels` uses the NumPy fallback.
"""
import numpy as np
from setuptools import Extension, setup


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "mpsqc._kernels",
        ["src/mpsqc/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    try:
        return cythonize([ext], compiler_directives={"language_level": "3"})
    except Exception as exc:  # noqa: BLE001
        print(f"warning: skipping compiled kernels ({exc})")
        return []


setup(ext_modules=_extensions())
