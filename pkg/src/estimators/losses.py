"""Per-sample loss functions."""

from typing import Literal, Tuple

import numpy as np

from src.errors import InvalidParameterError


LossKind = Literal["quadratic", "zero_one"]

LOSS_KINDS: Tuple[str, ...] = ("quadratic", "zero_one")


def check_loss_kind(kind: str) -> str:
    if kind not in LOSS_KINDS:
        raise InvalidParameterError(
            f"Unknown loss '{kind}'; expected one of {', '.join(LOSS_KINDS)}"
        )
    return kind


def check_binary(y: np.ndarray) -> None:
    """Raise unless every label is 0 or 1."""
    if not np.all((y == 0.0) | (y == 1.0)):
        raise InvalidParameterError("zero_one loss needs labels in {0, 1}")


def threshold(pred: np.ndarray) -> np.ndarray:
    """Class decision: 1 where pred >= 0.5."""
    return (np.asarray(pred, dtype=float) >= 0.5).astype(float)


def loss(kind: LossKind, pred: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Loss of each prediction.

    Args:
        kind: ``quadratic`` or ``zero_one``
        pred: Predictions
        y: Observed responses (labels in {0, 1} for zero_one)

    Returns:
        Vector of per-sample losses

    Raises:
        InvalidParameterError: Length mismatch or non-binary labels
    """
    check_loss_kind(kind)
    pred = np.asarray(pred, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if pred.shape != y.shape:
        raise InvalidParameterError(f"pred has length {pred.size} but y has {y.size}")
    if kind == "quadratic":
        return (pred - y) ** 2
    check_binary(y)
    return (threshold(pred) != y).astype(float)
