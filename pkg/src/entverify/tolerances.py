"""Numeric tolerances shared across the package.

All comparison thresholds live in this one record so tests and production
code agree on what counts as zero.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-9
    trace_one: float = 1e-9
    exact: float = 1e-9          # "equals" for exact-algebra paths
    mle_trace: float = 1e-6      # trace gate on mle_project input
    eigenvalue_dust: float = 1e-10
    annihilation: float = 1e-12  # filter products below this trace annihilate
    phase_match: float = 1e-9    # global-phase-insensitive state comparison


TOL = Tolerances()
