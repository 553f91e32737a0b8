"""Simulation kernel backends.

The compiled Cython extension is preferred; the pure-Python twin is the
fallback and the semantics reference.  Both expose the same surface
(GillespieEngine, TreeEngine, gilbert_pairs, component_bfs) and consume
identical RNG streams, so results do not depend on which one is active.
Set CHASESCAPE_PURE=1 to force the fallback.
"""

import os

from . import _pure

if os.environ.get("CHASESCAPE_PURE", "") not in ("", "0"):
    _impl = _pure
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND_NAME
GillespieEngine = _impl.GillespieEngine
TreeEngine = _impl.TreeEngine
gilbert_pairs = _impl.gilbert_pairs
component_bfs = _impl.component_bfs

# The stepping interface is instrumentation; it always runs on the pure twin.
pure = _pure
make_stepper = _pure.make_stepper

NODE_S = _pure.S
NODE_I = _pure.I
NODE_W = _pure.W
STOP_ABSORBED = _pure.STOP_ABSORBED
STOP_BOUNDARY = _pure.STOP_BOUNDARY
STOP_CAP = _pure.STOP_CAP
KIND_INFECT = _pure.KIND_INFECT
KIND_PATCH = _pure.KIND_PATCH
