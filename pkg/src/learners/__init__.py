"""Built-in regression learners."""

from src.learners.base import FittedModel, LearnerSpec
from src.learners.fitting import (
    constant_model,
    cv_select,
    fit,
    fixed_linear_model,
    function_model,
    predict,
)

__all__ = [
    "FittedModel",
    "LearnerSpec",
    "constant_model",
    "cv_select",
    "fit",
    "fixed_linear_model",
    "function_model",
    "predict",
]
