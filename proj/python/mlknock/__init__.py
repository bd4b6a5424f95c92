"""Knockoff-based variable selection for two-level clustered data.

The heavy lifting lives in the compiled extension; this package re-exports
its entry points:

- :func:`decompose` / :func:`check_identities` -- within/between split of a
  clustered dataset and its exactness diagnostics.
- :func:`select` / :func:`select_overall` -- two-stage selection with
  per-level error budgets, and the single-stage baseline.
- :func:`gaussian_knockoffs` / :func:`sequential_knockoffs` -- knockoff
  copies of a feature matrix.
- :func:`generate_dataset` / :func:`simulate` -- the Monte Carlo design and
  the replication study around it.
"""

from mlknock._core import (
    NumericalError,
    ValidationError,
    check_identities,
    decompose,
    gaussian_knockoffs,
    generate_dataset,
    select,
    select_overall,
    sequential_knockoffs,
    simulate,
)

__all__ = [
    "NumericalError",
    "ValidationError",
    "check_identities",
    "decompose",
    "gaussian_knockoffs",
    "generate_dataset",
    "select",
    "select_overall",
    "sequential_knockoffs",
    "simulate",
]

__version__ = "0.1.0"
