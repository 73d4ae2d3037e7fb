"""Importance score container."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.data.seeding import RngSeed
from src.errors import InvalidParameterError


ESTIMATORS: Tuple[str, ...] = ("pfi", "cpi", "sobol_cpi", "loco", "loco_w")

MEAN_TOL = 1e-12


def _frozen(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=float, copy=True).reshape(-1)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class ImportanceScore:
    """
    Importance of one feature under one estimator.

    ``per_sample_diffs`` are the summands whose mean is ``estimate``. For
    ``loco_w`` they pair the reduced-model loss on one test half with the
    full-model loss on the other, so the mean is still the difference of
    half-sample means. ``loss_full`` and ``loss_reduced`` hold the two loss
    vectors the differences were built from, and ``scale`` the factor applied
    to their difference (n_cal / (n_cal + 1) for corrected Sobol-CPI).
    """

    j: int
    estimator: str
    n_cal: Optional[int]
    estimate: float
    per_sample_diffs: np.ndarray
    n_test: int
    seed_used: RngSeed
    loss_full: np.ndarray = field(default_factory=lambda: np.empty(0))
    loss_reduced: np.ndarray = field(default_factory=lambda: np.empty(0))
    feature_name: Optional[str] = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.estimator not in ESTIMATORS:
            raise InvalidParameterError(f"Unknown estimator '{self.estimator}'")
        diffs = _frozen(self.per_sample_diffs)
        if diffs.size == 0:
            raise InvalidParameterError("per_sample_diffs is empty")
        if not np.all(np.isfinite(diffs)):
            raise InvalidParameterError("per_sample_diffs contains NaN or infinite values")
        if diffs.size != self.n_test:
            raise InvalidParameterError(
                f"n_test={self.n_test} but {diffs.size} per-sample differences"
            )
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise InvalidParameterError(f"scale must be positive, got {self.scale}")
        magnitude = max(1.0, float(np.max(np.abs(diffs))))
        if abs(float(np.mean(diffs)) - self.estimate) > MEAN_TOL * magnitude:
            raise InvalidParameterError("estimate does not equal the mean of per_sample_diffs")
        object.__setattr__(self, "per_sample_diffs", diffs)
        object.__setattr__(self, "loss_full", _frozen(self.loss_full))
        object.__setattr__(self, "loss_reduced", _frozen(self.loss_reduced))
        object.__setattr__(self, "estimate", float(self.estimate))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def label(self) -> str:
        """Estimator name with its n_cal, e.g. ``sobol_cpi(10)``."""
        if self.estimator == "sobol_cpi":
            return f"sobol_cpi({self.n_cal})"
        return self.estimator

    @property
    def feature(self) -> str:
        return self.feature_name if self.feature_name is not None else f"x{self.j}"

    def to_dict(self, include_samples: bool = False) -> Dict[str, Any]:
        """
        JSON-ready mapping.

        Args:
            include_samples: Also emit per-sample differences and losses
        """
        out: Dict[str, Any] = {
            "feature": self.j,
            "feature_name": self.feature,
            "estimator": self.estimator,
            "n_cal": self.n_cal,
            "estimate": self.estimate,
            "n_test": self.n_test,
            "seed": self.seed_used,
        }
        if include_samples:
            out["per_sample_diffs"] = self.per_sample_diffs.tolist()
            out["loss_full"] = self.loss_full.tolist()
            out["loss_reduced"] = self.loss_reduced.tolist()
            out["scale"] = self.scale
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ImportanceScore":
        """Inverse of ``to_dict(include_samples=True)``."""
        try:
            return cls(
                j=int(data["feature"]),
                estimator=str(data["estimator"]),
                n_cal=None if data.get("n_cal") is None else int(data["n_cal"]),
                estimate=float(data["estimate"]),
                per_sample_diffs=np.asarray(data["per_sample_diffs"], dtype=float),
                n_test=int(data["n_test"]),
                seed_used=int(data["seed"]),
                loss_full=np.asarray(data.get("loss_full") or [], dtype=float),
                loss_reduced=np.asarray(data.get("loss_reduced") or [], dtype=float),
                feature_name=data.get("feature_name"),
                scale=float(data.get("scale", 1.0)),
            )
        except KeyError as e:
            raise InvalidParameterError(f"Score record is missing {e}")


def make_score(
    j: int,
    estimator: str,
    n_cal: Optional[int],
    loss_full: np.ndarray,
    loss_reduced: np.ndarray,
    seed: RngSeed,
    feature_name: Optional[str] = None,
    scale: float = 1.0,
) -> ImportanceScore:
    """Score from paired loss vectors; differences are scaled by ``scale``."""
    diffs = scale * (np.asarray(loss_reduced, dtype=float) - np.asarray(loss_full, dtype=float))
    return ImportanceScore(
        j=j,
        estimator=estimator,
        n_cal=n_cal,
        estimate=float(np.mean(diffs)),
        per_sample_diffs=diffs,
        n_test=int(diffs.size),
        seed_used=seed,
        loss_full=loss_full,
        loss_reduced=loss_reduced,
        feature_name=feature_name,
        scale=scale,
    )
