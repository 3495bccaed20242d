"""Backend selection for the per-pair loops.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``CORRLAYERS_PURE_PYTHON=1`` is set, the numpy
implementation is used. Both expose the same functions.
"""

import importlib
import os

import numpy as np

from ._pykernels import C00, C01, C10, C11  # noqa: F401

__all__ = ["BACKEND", "available_backends", "get_backend",
           "full_loglik_derivs", "dcsbm_conditional_probs"]


def _load(name):
    module = {"cython": "._ckernels", "python": "._pykernels"}[name]
    return importlib.import_module(module, __package__)


def available_backends():
    names = ["python"]
    try:
        _load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def get_backend(name=None):
    """Module implementing the kernels; ``None`` gives the active one."""
    return _impl if name is None else _load(name)


if os.environ.get("CORRLAYERS_PURE_PYTHON", "") == "1":
    BACKEND = "python"
else:
    BACKEND = available_backends()[0]
_impl = _load(BACKEND)


def full_loglik_derivs(a, b, code, p1, p2, q):
    return _impl.full_loglik_derivs(
        np.ascontiguousarray(a, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
        np.ascontiguousarray(code, dtype=np.int8),
        float(p1), float(p2), float(q))


def dcsbm_conditional_probs(a, b, x1, p1, p2, q, tol=1e-12):
    n = np.shape(a)[0]

    def vec(v):
        return np.ascontiguousarray(np.broadcast_to(np.asarray(v, dtype=np.float64), (n,)))

    return _impl.dcsbm_conditional_probs(
        vec(a), vec(b), np.ascontiguousarray(x1, dtype=np.uint8),
        vec(p1), vec(p2), vec(q), float(tol))
