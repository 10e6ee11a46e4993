"""Backend selection for the hot loops.

The compiled extension is preferred; set ``SEQTRAN_PURE_PYTHON=1`` to force
the interpreted implementations (useful for debugging and for the parity
tests and benchmark).
"""

import logging
import os

from . import _purepy

log = logging.getLogger(__name__)

_FORCE_PURE = os.environ.get("SEQTRAN_PURE_PYTHON", "").lower() in ("1", "true", "yes")

try:
    if _FORCE_PURE:
        raise ImportError("pure-python backend forced by SEQTRAN_PURE_PYTHON")
    from . import _kernels as _impl
    BACKEND = "cython"
except ImportError as exc:  # pragma: no cover - depends on build
    log.debug("compiled kernels unavailable (%s); using pure-python fallback", exc)
    _impl = _purepy
    BACKEND = "python"

ssim_box_mean = _impl.ssim_box_mean
sinkhorn_log = _impl.sinkhorn_log
edge_betweenness_dense = _impl.edge_betweenness_dense


def available_backends():
    """Names of importable backends, compiled first."""
    names = []
    try:
        from . import _kernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names


def get_backend(name):
    """Return the kernel module for ``name`` (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _purepy
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
