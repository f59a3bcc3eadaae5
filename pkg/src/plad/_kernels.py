"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``PLAD_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _cd_py

cd_sweeps_py = _cd_py.cd_sweeps

if os.environ.get("PLAD_PURE_PYTHON") == "1":
    cd_sweeps = cd_sweeps_py
    BACKEND = "python"
else:
    try:
        from ._cd import cd_sweeps
    except ImportError:
        cd_sweeps = cd_sweeps_py
        BACKEND = "python"
    else:
        BACKEND = "cython"
