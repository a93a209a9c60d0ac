"""Response-table scan kernels: compiled core with a pure-Python fallback.

Every structural check on a tabulated response function reduces to an
exhaustive scan of a C-contiguous ``uint8`` array of shape
``(|A|, |B|, |C|, |U|)``.  Those scans are the hot inner loops of the
package (they run once per context per query, and the randomized
soundness experiment runs them thousands of times), so they exist twice:

* ``_ckernels`` — Cython extension, built at install time;
* ``_pykernels`` — NumPy implementation, always available.

The backend is selected here at import time.  Set ``COACT_PURE_PYTHON=1``
to force the fallback.  Both backends implement the same contract
*bit for bit*, witness indices included: every "first" is first in
lexicographic (row-major) scan order.  Equivalence is asserted in
``tests/test_kernels.py`` and timed in ``benchmarks/bench_kernels.py``.
"""

import os

from . import _pykernels

if os.environ.get("COACT_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

is_irrelevant = _impl.is_irrelevant
first_interference_witness = _impl.first_interference_witness
monotone_flags = _impl.monotone_flags
first_consistency_violation = _impl.first_consistency_violation
first_insensitivity_violation = _impl.first_insensitivity_violation

__all__ = [
    "BACKEND",
    "is_irrelevant",
    "first_interference_witness",
    "monotone_flags",
    "first_consistency_violation",
    "first_insensitivity_violation",
]
