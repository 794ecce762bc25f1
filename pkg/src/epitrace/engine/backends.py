"""Kernel backend selection.

Two backends expose the same kernel set: "numba" compiles a private copy of
_impl with njit, "numpy" runs the original definitions under CPython with
numpy's overflow warnings suppressed (uint64 wrap-around is intentional).
Set EPITRACE_NO_NUMBA=1 to force the numpy fallback; it is also used
automatically when numba is not importable.
"""

import functools
import importlib.util
import logging
import os
import sys

import numpy as np

from . import _impl

log = logging.getLogger(__name__)

KERNEL_NAMES = (
    "seed_stream",
    "next_u64",
    "uniform01",
    "fill_uniforms",
    "rand_below",
    "sample_distinct",
    "tree_set",
    "tree_sample",
    "set_add",
    "set_remove",
    "deactivate_node",
    "advance_until",
)


class Backend:
    """Bundle of kernel callables plus the backend name."""

    def __init__(self, name, source):
        self.name = name
        for k in KERNEL_NAMES:
            setattr(self, k, getattr(source, k))

    def __repr__(self):
        return f"Backend({self.name!r})"


def _quiet(fn):
    @functools.wraps(fn)
    def wrapped(*args):
        with np.errstate(over="ignore"):
            return fn(*args)

    return wrapped


class _QuietKernels:
    def __init__(self, mod):
        for k in KERNEL_NAMES:
            setattr(self, k, _quiet(getattr(mod, k)))


def _build_numpy():
    return Backend("numpy", _QuietKernels(_impl))


def _build_numba():
    from numba import njit

    # compile a separate module object so the plain-python definitions in
    # _impl stay callable for the numpy backend
    name = "epitrace.engine._impl_numba"
    spec = importlib.util.spec_from_file_location(name, _impl.__file__)
    mod = importlib.util.module_from_spec(spec)
    sys.modules[name] = mod
    spec.loader.exec_module(mod)
    for k in KERNEL_NAMES:
        setattr(mod, k, njit(cache=True)(getattr(mod, k)))
    return Backend("numba", mod)


_cache = {}


def get_backend(name):
    """Return the named backend ("numba" or "numpy"), building it on first use."""
    if name not in _cache:
        if name == "numba":
            _cache[name] = _build_numba()
        elif name == "numpy":
            _cache[name] = _build_numpy()
        else:
            raise ValueError(f"unknown backend {name!r}")
    return _cache[name]


def default_backend_name():
    flag = os.environ.get("EPITRACE_NO_NUMBA", "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return "numpy"
    if importlib.util.find_spec("numba") is None:
        return "numpy"
    return "numba"


def active_backend():
    """Backend picked by the environment: numba when available, else numpy."""
    name = default_backend_name()
    try:
        return get_backend(name)
    except ImportError:
        log.warning("numba backend unavailable, using the numpy fallback")
        return get_backend("numpy")
