"""Learner specifications, fitted-model contract and shared helpers."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Protocol, Tuple

import numpy as np

from src.errors import InvalidParameterError


KINDS = ("ols", "ridge", "lasso", "cart", "gradient_boosting", "knn", "cv_select")

# Default hyperparameters per kind; keys double as the allowed parameter names.
DEFAULTS: Dict[str, Dict[str, Any]] = {
    "ols": {},
    "ridge": {"alpha": 1.0},
    "lasso": {
        "alpha": None,
        "alphas": None,
        "n_alphas": 50,
        "eps": 1e-3,
        "folds": 5,
        "max_iter": 1000,
        "tol": 1e-6,
    },
    "cart": {"max_depth": 8, "min_samples_leaf": 5},
    "gradient_boosting": {
        "n_rounds": 200,
        "max_depth": 3,
        "learning_rate": 0.1,
        "subsample": 1.0,
        "min_samples_leaf": 1,
    },
    "knn": {"k": 5},
    "cv_select": {"candidates": None, "folds": 5},
}


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParameterError(message)


def _validate(kind: str, params: Dict[str, Any]) -> None:
    if kind == "ridge":
        _require(params["alpha"] >= 0, "ridge alpha must be >= 0")
    elif kind == "lasso":
        if params["alpha"] is not None:
            _require(params["alpha"] >= 0, "lasso alpha must be >= 0")
        if params["alphas"] is not None:
            _require(len(params["alphas"]) > 0, "lasso alphas grid is empty")
            _require(all(a >= 0 for a in params["alphas"]), "lasso alphas must be >= 0")
        _require(params["n_alphas"] >= 1, "lasso n_alphas must be >= 1")
        _require(0 < params["eps"] < 1, "lasso eps must lie in (0, 1)")
        _require(params["folds"] >= 2, "lasso folds must be >= 2")
        _require(params["max_iter"] >= 1, "lasso max_iter must be >= 1")
        _require(params["tol"] > 0, "lasso tol must be > 0")
    elif kind == "cart":
        _require(params["max_depth"] >= 1, "cart max_depth must be >= 1")
        _require(params["min_samples_leaf"] >= 1, "cart min_samples_leaf must be >= 1")
    elif kind == "gradient_boosting":
        _require(params["n_rounds"] >= 1, "gradient_boosting n_rounds must be >= 1")
        _require(params["max_depth"] >= 1, "gradient_boosting max_depth must be >= 1")
        _require(params["learning_rate"] > 0, "gradient_boosting learning_rate must be > 0")
        _require(0 < params["subsample"] <= 1, "gradient_boosting subsample must lie in (0, 1]")
        _require(params["min_samples_leaf"] >= 1, "gradient_boosting min_samples_leaf >= 1")
    elif kind == "knn":
        _require(params["k"] >= 1, "knn k must be >= 1")
    elif kind == "cv_select":
        _require(bool(params["candidates"]), "cv_select needs a nonempty candidate list")
        _require(params["folds"] >= 2, "cv_select folds must be >= 2")


@dataclass(frozen=True, eq=False)
class LearnerSpec:
    """
    A learner kind with validated hyperparameters.

    Missing hyperparameters take the kind's defaults; unknown names are
    rejected. ``cv_select`` candidates are themselves LearnerSpecs.
    """

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidParameterError(
                f"Unknown learner kind '{self.kind}'; expected one of {', '.join(KINDS)}"
            )
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise InvalidParameterError(
                f"Unknown {self.kind} hyperparameters: {', '.join(sorted(unknown))}"
            )
        merged = {**DEFAULTS[self.kind], **self.params}
        if self.kind == "cv_select" and merged["candidates"]:
            merged["candidates"] = [
                c if isinstance(c, LearnerSpec) else LearnerSpec.from_config(c)
                for c in merged["candidates"]
            ]
        _validate(self.kind, merged)
        object.__setattr__(self, "params", merged)

    def get(self, name: str) -> Any:
        return self.params[name]

    @property
    def candidates(self) -> List["LearnerSpec"]:
        return list(self.params.get("candidates") or [])

    @classmethod
    def from_config(cls, data: Mapping[str, Any]) -> "LearnerSpec":
        """Build from a tagged mapping ``{"kind": ..., <hyperparameters>}``."""
        if "kind" not in data:
            raise InvalidParameterError("Learner config needs a 'kind'")
        params = {k: v for k, v in data.items() if k not in ("kind", "params")}
        params.update(data.get("params") or {})
        return cls(kind=str(data["kind"]), params=params)

    def to_dict(self) -> Dict[str, Any]:
        """Tagged mapping with non-default hyperparameters only."""
        out: Dict[str, Any] = {"kind": self.kind}
        for name, value in self.params.items():
            if name == "candidates" and value:
                out[name] = [c.to_dict() for c in value]
            elif value != DEFAULTS[self.kind][name]:
                out[name] = value
        return out

    def __repr__(self) -> str:
        return f"LearnerSpec({self.to_dict()})"


class Estimator(Protocol):
    """Fit/predict contract implemented by every built-in learner."""

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "Estimator": ...

    def predict(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class FittedModel:
    """
    A trained predictor.

    ``spec`` is None for hand-built models (fixed coefficients, oracle
    functions) that were not produced by a learner.
    """

    spec: Optional[LearnerSpec]
    estimator: Estimator
    input_dim: int
    training_rows: int

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Predictions for each row of x."""
        x = as_matrix(x)
        if x.shape[1] != self.input_dim:
            raise InvalidParameterError(
                f"Model expects {self.input_dim} columns, got {x.shape[1]}"
            )
        return np.asarray(self.estimator.predict(x), dtype=float).reshape(-1)

    @property
    def coefficients(self) -> Optional[np.ndarray]:
        """Slope vector for linear kinds, None otherwise."""
        return getattr(self.estimator, "coef_", None)

    @property
    def intercept(self) -> Optional[float]:
        return getattr(self.estimator, "intercept_", None)

    @property
    def name(self) -> str:
        return self.spec.kind if self.spec is not None else type(self.estimator).__name__


def as_matrix(x: np.ndarray) -> np.ndarray:
    """Validate a finite 2-D float matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InvalidParameterError(f"Expected a matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("Input contains NaN or infinite values")
    return x


def check_xy(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Validate a training pair."""
    x = as_matrix(x)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise InvalidParameterError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
    if y.shape[0] < 2:
        raise InvalidParameterError("At least 2 training rows are required")
    if x.shape[1] < 1:
        raise InvalidParameterError("At least 1 input column is required")
    if not np.all(np.isfinite(y)):
        raise InvalidParameterError("Response contains NaN or infinite values")
    return x, y


def kfold_indices(n: int, folds: int, rng: np.random.Generator) -> List[np.ndarray]:
    """
    Random partition of ``range(n)`` into ``folds`` nearly equal parts.

    Raises:
        InvalidParameterError: If folds exceeds n
    """
    if folds < 2:
        raise InvalidParameterError(f"Need at least 2 folds, got {folds}")
    if folds > n:
        raise InvalidParameterError(f"Cannot make {folds} folds from {n} rows")
    return [np.sort(part) for part in np.array_split(rng.permutation(n), folds)]
