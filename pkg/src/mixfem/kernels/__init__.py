"""Hot loops of assembly and sparse algebra.

``MIXFEM_KERNELS=numpy`` forces the pure numpy implementations; otherwise the
numba versions are used when numba imports.
"""

import importlib
import os

BACKENDS = ("numba", "numpy")


def _load(name):
    return importlib.import_module(f"{__name__}._{name}")


def get_backend(name=None):
    """Kernel module for ``name`` (default: the active backend)."""
    if name is None:
        return _active
    if name not in BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; choose from {BACKENDS}")
    return _load(name)


def _select():
    requested = os.environ.get("MIXFEM_KERNELS", "").strip().lower()
    if requested == "numpy":
        return "numpy", _load("numpy")
    try:
        return "numba", _load("numba")
    except ImportError:
        if requested == "numba":
            raise
        return "numpy", _load("numpy")


BACKEND, _active = _select()

coo_to_csr = _active.coo_to_csr
csr_matvec = _active.csr_matvec
scatter_add_vector = _active.scatter_add_vector
zero_duplicate_rows = _active.zero_duplicate_rows
