"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback.  ``use_backend`` switches explicitly (tests and benchmarks run
both).
"""

import numpy as np

from ..errors import ConfigError
from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _pykernels}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

_active = _compiled if _compiled is not None else _pykernels


def available_backends():
    return sorted(_BACKENDS)


def current_backend() -> str:
    return "cython" if _active is _compiled and _compiled is not None else "python"


def use_backend(name: str) -> None:
    global _active
    _active = get_backend(name)


def get_backend(name: str | None = None):
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigError(f"backend {name!r} not available; have {available_backends()}") from None


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def linkage_merges(dist, method: int, backend=None):
    return get_backend(backend).linkage_merges(_f64(dist), int(method))


def pam_swap_deltas(D, medoids, nearest, dnear, dsecond, backend=None):
    return get_backend(backend).pam_swap_deltas(
        _f64(D), _i64(medoids), _i64(nearest), _f64(dnear), _f64(dsecond)
    )
