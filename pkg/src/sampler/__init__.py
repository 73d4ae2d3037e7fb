"""Residual-permutation conditional sampling."""

from src.sampler.conditional import (
    ConditionalSampler,
    draw,
    draw_column,
    fit_sampler,
    oracle_gaussian_sampler,
    sampler_from_model,
)
from src.sampler.diagnostics import conditional_draw_w2, wasserstein2_1d

__all__ = [
    "ConditionalSampler",
    "draw",
    "draw_column",
    "fit_sampler",
    "oracle_gaussian_sampler",
    "sampler_from_model",
    "conditional_draw_w2",
    "wasserstein2_1d",
]
