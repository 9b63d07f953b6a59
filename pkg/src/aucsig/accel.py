"""Backend selection for the hot numeric kernels.

Every expensive inner loop in this package exists twice: a numba @njit
version and a vectorized pure-numpy version.  The default backend is numba
when it is importable and the environment variable ``AUCSIG_DISABLE_NUMBA``
is unset (or "0"); setting it to anything else selects the numpy path.
Individual calls can override the default with ``backend="numba"`` or
``backend="numpy"``.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_DISABLED = os.environ.get("AUCSIG_DISABLE_NUMBA", "").strip().lower() not in ("", "0")
NUMBA_ENABLED = HAVE_NUMBA and not _DISABLED

BACKENDS = ("numba", "numpy")


def default_backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


def resolve_backend(backend: str | None) -> str:
    """Validate a backend name, returning the default when None."""
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}, expected one of {BACKENDS}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def jit(**kwargs):
    """numba.njit when available, otherwise a stub that fails on call."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(**kwargs)

    def _missing(func):  # pragma: no cover - exercised only without numba
        def _raise(*a, **k):
            raise RuntimeError("numba is not installed; use backend='numpy'")

        _raise.__name__ = func.__name__
        return _raise

    return _missing


if HAVE_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range
