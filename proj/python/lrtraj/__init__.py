"""Python surface of the pooled-cohort trajectory model.

The heavy lifting lives in the compiled extension; this package only
re-exports it under a stable name.
"""

from _lrtraj import (
    Dataset,
    ModelSpec,
    PosteriorDraws,
    age_slope,
    convergence,
    fit,
    impute,
    load_draws,
    nested_rhat,
    read_csv,
    rubin_pool,
    simulate,
    variance_ratio,
)

__all__ = [
    "Dataset",
    "ModelSpec",
    "PosteriorDraws",
    "age_slope",
    "convergence",
    "fit",
    "impute",
    "load_draws",
    "nested_rhat",
    "read_csv",
    "rubin_pool",
    "simulate",
    "variance_ratio",
]
