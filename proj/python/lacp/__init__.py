"""Locally adaptive conformal prediction intervals."""

from ._lacp import (
    CodomainError,
    FittedModel,
    LacpError,
    Localizer,
    TransformFamily,
    amplitude,
    calibrate,
    fit,
    generate,
    quantile_index,
    run_protocol,
)

__all__ = [
    "CodomainError",
    "FittedModel",
    "LacpError",
    "Localizer",
    "TransformFamily",
    "amplitude",
    "calibrate",
    "fit",
    "generate",
    "quantile_index",
    "run_protocol",
]
