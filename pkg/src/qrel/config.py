"""Numerical tolerances.

All semantic comparisons (subspace inclusion, relation equality, truth of
sentences) go through the single tolerance below so that a CLI override or
the QREL_TOL environment variable pins every verdict at once.  Rank
truncation uses its own scale-relative cutoff and is not configurable.
"""

from __future__ import annotations

# Singular values sigma count as nonzero iff sigma > RANK_EPS * max(1, sigma_max).
RANK_EPS = 1e-9

# Projector-distance threshold for leq / equality / orthogonality verdicts.
DEFAULT_TOL = 1e-8

# Margins between tolerance() and WARN_TOL are reported as warn-band results.
WARN_TOL = 1e-6

TOL_MIN = 1e-12
TOL_MAX = 1e-4

_tolerance = DEFAULT_TOL


def tolerance() -> float:
    return _tolerance


def set_tolerance(value: float) -> None:
    if not (TOL_MIN <= value <= TOL_MAX):
        raise ValueError(f"tolerance must be in [{TOL_MIN}, {TOL_MAX}], got {value}")
    global _tolerance
    _tolerance = value


def reset_tolerance() -> None:
    global _tolerance
    _tolerance = DEFAULT_TOL
