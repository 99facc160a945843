"""Build script: compiles the optional normalization kernel.

The package works without the extension (algst.normalize falls back to the
pure-Python kernel), so any failure here downgrades to a pure build instead
of aborting the install.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/algst/_nf_c.pyx",
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - depends on toolchain
    print(f"algst: skipping compiled kernel ({exc}); using pure-Python fallback")

setup(ext_modules=ext_modules)
