"""Hot inner loops: statevector updates, X-program phase sums, codeword weights.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported.  Set ``BLINDIQP_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("BLINDIQP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

apply_1q = _impl.apply_1q
apply_diag = _impl.apply_diag
apply_cz = _impl.apply_cz
measure_probs = _impl.measure_probs
project = _impl.project
phase_sums = _impl.phase_sums
fwht = _impl.fwht
weight_distribution = _impl.weight_distribution

__all__ = [
    "BACKEND",
    "apply_1q",
    "apply_diag",
    "apply_cz",
    "measure_probs",
    "project",
    "phase_sums",
    "fwht",
    "weight_distribution",
]
