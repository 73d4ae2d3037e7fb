"""Importance estimators returning per-sample loss differences."""

from src.estimators.losses import LOSS_KINDS, LossKind, loss
from src.estimators.permutation import cpi, pfi, sobol_cpi
from src.estimators.removal import loco, loco_w
from src.estimators.scores import ESTIMATORS, ImportanceScore

__all__ = [
    "ESTIMATORS",
    "LOSS_KINDS",
    "ImportanceScore",
    "LossKind",
    "cpi",
    "loco",
    "loco_w",
    "loss",
    "pfi",
    "sobol_cpi",
]
