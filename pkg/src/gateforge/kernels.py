"""Backend dispatch for the training hot path.

Two interchangeable implementations exist: a compiled Cython extension
and a pure-numpy reference. The compiled one is used when it built
successfully; set GATEFORGE_KERNEL=python or GATEFORGE_KERNEL=compiled
to force a choice. Results are reproducible per backend (same seed,
same backend, same trajectory); across backends the floating-point
summation order differs at the last ulp.
"""

import os

from . import _pykernels

try:
    from . import _fastkernels
except ImportError:
    _fastkernels = None

_FORCED = os.environ.get("GATEFORGE_KERNEL", "").strip().lower()
if _FORCED in ("python", "py"):
    _active = _pykernels
elif _FORCED in ("compiled", "fast", "cython"):
    if _fastkernels is None:
        raise ImportError(
            "GATEFORGE_KERNEL requests the compiled kernel, but the "
            "extension is not built; reinstall with a C compiler or unset it")
    _active = _fastkernels
elif _FORCED:
    raise ImportError(
        f"unknown GATEFORGE_KERNEL value {_FORCED!r}; use python or compiled")
else:
    _active = _fastkernels if _fastkernels is not None else _pykernels


def backend_name():
    return _active.BACKEND


def available_backends():
    out = {"python": _pykernels}
    if _fastkernels is not None:
        out["compiled"] = _fastkernels
    return out


def fidelity_grad_batch(Os, lam, G, psis):
    """Batch per-state fidelities and exact gradients; see _pykernels."""
    return _active.fidelity_grad_batch(Os, lam, G, psis)
