"""coact: mechanistic-interaction analysis for two causal factors on a binary outcome.

Subpackages and modules:

* :mod:`coact.mechanism`  — deterministic response functions on finite grids
  and exact structural checks (irrelevance, interference, coaction,
  monotonicity, consistency, insensitivity);
* :mod:`coact.adag`       — augmented DAGs with regime indicators,
  d-separation by moralization, core-condition and sufficient-covariate
  verification;
* :mod:`coact.estimation` — stratified risk tables, linear-risk and
  linear-odds Bernoulli regression, and the one-sided excess-risk test;
* :mod:`coact.simulator`  — synthetic populations under deep determinism,
  exact population risks by enumeration, and the randomized soundness
  experiment;
* :mod:`coact.cli`        — the ``coact`` / ``mech`` / ``adag`` command-line
  entry points with JSON reports.
"""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
