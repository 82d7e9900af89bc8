"""Malware-image classification toolkit: byte-to-image conversion, a compact
trainable classifier with pyramid fusion, schedule-free optimization and
macro-metric evaluation. The heavy lifting lives in the C++ extension."""

from ._core import (
    MalimgError,
    ScheduleFreeAdamW,
    SfHyper,
    convert,
    evaluate,
    generate_corpus,
    lanczos_resize,
    macro_auc,
    macro_metrics,
    parse_dex,
    train,
)

__all__ = [
    "MalimgError",
    "ScheduleFreeAdamW",
    "SfHyper",
    "convert",
    "evaluate",
    "generate_corpus",
    "lanczos_resize",
    "macro_auc",
    "macro_metrics",
    "parse_dex",
    "train",
]
