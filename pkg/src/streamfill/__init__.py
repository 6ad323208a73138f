"""Gap filling for multi-station daily streamflow by bias-correcting a forecast.

Six imputation methods share one interface: quantile mapping (``qm``),
elastic net (``enet``), Gaussian process (``gp``), raw forecast lookup, and
the in-situ-only KNN and random-forest baselines. :mod:`streamfill.harness`
benchmarks them under simulated missingness with KGE / NSE / RMSE.
"""
__version__ = "0.1.0"

from .core import (  # noqa: E402
    AlignedDataset,
    MissingnessMask,
    SeriesMatrix,
    align,
    apply_mask,
    simulate_missingness,
    split_chronological,
)
from .metrics import kge, nse, rmse, score_imputation  # noqa: E402

__all__ = [
    "AlignedDataset",
    "MissingnessMask",
    "SeriesMatrix",
    "align",
    "apply_mask",
    "kge",
    "nse",
    "rmse",
    "score_imputation",
    "simulate_missingness",
    "split_chronological",
]
