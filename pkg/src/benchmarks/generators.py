"""Synthetic regression benchmarks with known feature importance."""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.benchmarks.oracles import (
    RegressionFunction,
    gated_product_tsi,
    linear_tsi,
    tsi_oracle_montecarlo,
)
from src.data.dataset import Dataset
from src.data.gaussian import Covariance, sample_gaussian, toeplitz_covariance
from src.data.seeding import RngSeed, derive_seed, rng_from
from src.errors import InvalidParameterError


logger = logging.getLogger(__name__)

GENERATORS = ("linear", "nonlinear", "polynomial")

ORACLE_OUTER = 100_000
ORACLE_INNER = 100

Monomial = Tuple[Tuple[int, ...], float]


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """
    What a generator knows about its own data.

    ``tsi`` holds NaN where no oracle value was computed.
    """

    active_set: np.ndarray
    beta: Optional[np.ndarray]
    tsi: np.ndarray
    generator_id: str
    rho: float
    sigma_noise: float
    cov: Covariance
    regression: RegressionFunction = field(repr=False)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def p(self) -> int:
        return int(self.active_set.size)

    @property
    def has_tsi(self) -> bool:
        return bool(np.all(np.isfinite(self.tsi)))

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready mapping (NaN oracle entries become None)."""
        return {
            "generator": self.generator_id,
            "rho": self.rho,
            "sigma_noise": self.sigma_noise,
            "active_set": [bool(a) for a in self.active_set],
            "beta": None if self.beta is None else self.beta.tolist(),
            "tsi": [float(t) if np.isfinite(t) else None for t in self.tsi],
            **self.details,
        }


def _n_active(p: int, sparsity: float) -> int:
    if not 0.0 < sparsity <= 1.0:
        raise InvalidParameterError(f"sparsity must lie in (0, 1], got {sparsity}")
    k = int(round(sparsity * p))
    if k < 1:
        raise InvalidParameterError(f"sparsity={sparsity} leaves no active feature for p={p}")
    return k


def _check_size(n: int, p: int) -> None:
    if n < 1:
        raise InvalidParameterError(f"n must be positive, got {n}")
    if p < 2:
        raise InvalidParameterError(f"p must be at least 2, got {p}")


def gen_linear(
    n: int,
    p: int,
    rho: float,
    sparsity: float,
    seed: RngSeed,
    beta_value: float = 1.0,
    sigma_noise: float = 1.0,
    snr: Optional[float] = None,
    beta_dist: str = "fixed",
    null_features: Sequence[int] = (),
) -> Tuple[Dataset, GroundTruth]:
    """
    Sparse linear model on a Toeplitz Gaussian design.

    X ~ N(0, toeplitz(rho)); y = X beta + eps with eps ~ N(0, sigma^2). The
    active set has round(sparsity * p) features chosen uniformly without
    replacement; active coefficients equal ``beta_value`` (``fixed``) or are
    N(0, beta_value^2) (``normal``). With ``snr`` the noise variance is
    ||X beta||^2 / (n * snr) instead of sigma_noise^2.

    Args:
        n: Rows
        p: Features
        rho: Toeplitz correlation
        sparsity: Fraction of active features in (0, 1]
        seed: RNG seed
        beta_value: Active coefficient, or its standard deviation
        sigma_noise: Noise standard deviation
        snr: Signal-to-noise ratio overriding sigma_noise
        beta_dist: ``fixed`` or ``normal``
        null_features: Features forced to a zero coefficient

    Returns:
        (dataset, ground truth)
    """
    _check_size(n, p)
    if beta_dist not in ("fixed", "normal"):
        raise InvalidParameterError(f"beta_dist must be fixed or normal, got '{beta_dist}'")
    if snr is not None and snr <= 0:
        raise InvalidParameterError(f"snr must be positive, got {snr}")
    k = _n_active(p, sparsity)
    rng = rng_from(derive_seed(seed, 0))
    active = np.zeros(p, dtype=bool)
    active[rng.choice(p, size=k, replace=False)] = True
    beta = np.zeros(p)
    if beta_dist == "fixed":
        beta[active] = beta_value
    else:
        beta[active] = beta_value * rng.standard_normal(k)
    for j in null_features:
        beta[j] = 0.0
    active &= beta != 0.0

    cov = toeplitz_covariance(p, rho)
    x = sample_gaussian(n, np.zeros(p), cov, derive_seed(seed, 1))
    signal = x @ beta
    sigma = sigma_noise
    if snr is not None:
        if np.any(signal != 0.0):
            sigma = float(np.sqrt(np.sum(signal**2) / (n * snr)))
        else:
            logger.warning("snr requested for a zero signal; using sigma_noise")
    y = signal + sigma * rng_from(derive_seed(seed, 2)).standard_normal(n)
    truth = GroundTruth(
        active_set=active,
        beta=beta,
        tsi=linear_tsi(beta, cov),
        generator_id="linear",
        rho=rho,
        sigma_noise=sigma,
        cov=cov,
        regression=lambda z: z @ beta,
        details={"beta_dist": beta_dist},
    )
    return Dataset(x, y), truth


def gated_interaction(weights: Tuple[float, float]) -> RegressionFunction:
    """m(x) = a x0 x1 I(x2 > 0) + b x3 x4 I(x2 < 0)."""
    a, b = weights

    def regression(x: np.ndarray) -> np.ndarray:
        gate = x[:, 2]
        return a * x[:, 0] * x[:, 1] * (gate > 0) + b * x[:, 3] * x[:, 4] * (gate < 0)

    return regression


@lru_cache(maxsize=32)
def nonlinear_tsi(
    p: int,
    rho: float,
    weights: Tuple[float, float] = (1.0, 2.0),
    n_outer: int = ORACLE_OUTER,
    n_inner: int = ORACLE_INNER,
    seed: RngSeed = 0,
) -> np.ndarray:
    """
    Oracle TSI vector of the gated-interaction model.

    Features 0, 1, 3 and 4 have closed forms; the gate feature 2 uses the
    Monte-Carlo oracle; the remaining features are 0.
    """
    a, b = weights
    cov = toeplitz_covariance(p, rho)
    tsi = np.zeros(p)
    tsi[0] = gated_product_tsi(cov, 0, 1, a)
    tsi[1] = gated_product_tsi(cov, 1, 0, a)
    tsi[3] = gated_product_tsi(cov, 3, 4, b)
    tsi[4] = gated_product_tsi(cov, 4, 3, b)
    tsi[2] = tsi_oracle_montecarlo(gated_interaction(weights), cov, 2, n_outer, n_inner, seed)
    tsi.flags.writeable = False
    return tsi


def gen_nonlinear(
    n: int,
    p: int,
    rho: float,
    seed: RngSeed,
    interaction_weights: Tuple[float, float] = (1.0, 2.0),
    oracle: bool = True,
    oracle_outer: int = ORACLE_OUTER,
    oracle_inner: int = ORACLE_INNER,
) -> Tuple[Dataset, GroundTruth]:
    """
    Noiseless gated interactions on a Toeplitz Gaussian design.

    y = a X0 X1 I(X2 > 0) + b X3 X4 I(X2 < 0) with (a, b) the interaction
    weights; features 0..4 are active.

    Args:
        n: Rows
        p: Features (>= 5)
        rho: Toeplitz correlation
        seed: RNG seed
        interaction_weights: (a, b)
        oracle: Compute the TSI vector (otherwise NaN)
        oracle_outer: Outer Monte-Carlo draws for feature 2
        oracle_inner: Inner Monte-Carlo draws for feature 2

    Returns:
        (dataset, ground truth)
    """
    if p < 5:
        raise InvalidParameterError(f"Nonlinear generator: p >= 5 required, got p={p}")
    _check_size(n, p)
    weights = (float(interaction_weights[0]), float(interaction_weights[1]))
    cov = toeplitz_covariance(p, rho)
    x = sample_gaussian(n, np.zeros(p), cov, derive_seed(seed, 1))
    regression = gated_interaction(weights)
    active = np.zeros(p, dtype=bool)
    active[:5] = True
    if oracle:
        tsi = np.array(nonlinear_tsi(p, float(rho), weights, oracle_outer, oracle_inner, seed=0))
    else:
        tsi = np.full(p, np.nan)
        tsi[5:] = 0.0
    truth = GroundTruth(
        active_set=active,
        beta=None,
        tsi=tsi,
        generator_id="nonlinear",
        rho=rho,
        sigma_noise=0.0,
        cov=cov,
        regression=regression,
        details={"interaction_weights": list(weights)},
    )
    return Dataset(x, regression(x)), truth


def sample_monomials(
    active: np.ndarray, degree: int, rng: np.random.Generator
) -> List[Monomial]:
    """
    One random monomial per active feature.

    Each monomial contains its feature, has a degree drawn uniformly from
    1..degree with the other factors drawn uniformly (with replacement) from
    the active set, and an N(0, 1) coefficient.
    """
    features = np.flatnonzero(active)
    monomials: List[Monomial] = []
    for f in features:
        d = int(rng.integers(1, degree + 1))
        others = rng.choice(features, size=d - 1, replace=True)
        factors = tuple(sorted([int(f), *(int(o) for o in others)]))
        monomials.append((factors, float(rng.standard_normal())))
    return monomials


def polynomial_function(monomials: Sequence[Monomial]) -> RegressionFunction:
    """Sum of coefficient times product of the listed columns."""
    terms = [(list(factors), coef) for factors, coef in monomials]

    def regression(x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[0])
        for factors, coef in terms:
            out += coef * np.prod(x[:, factors], axis=1)
        return out

    return regression


def gen_polynomial(
    n: int,
    p: int,
    rho: float,
    degree: int,
    sparsity: float,
    seed: RngSeed,
    sigma_noise: float = 1.0,
    oracle: bool = True,
    oracle_outer: int = ORACLE_OUTER,
    oracle_inner: int = ORACLE_INNER,
) -> Tuple[Dataset, GroundTruth]:
    """
    Sparse polynomial with interactions on a Toeplitz Gaussian design.

    Args:
        n: Rows
        p: Features
        rho: Toeplitz correlation
        degree: Maximal monomial degree (>= 1)
        sparsity: Fraction of active features in (0, 1]
        seed: RNG seed
        sigma_noise: Noise standard deviation
        oracle: Compute the TSI of active features by Monte Carlo
        oracle_outer: Outer Monte-Carlo draws
        oracle_inner: Inner Monte-Carlo draws

    Returns:
        (dataset, ground truth)
    """
    _check_size(n, p)
    if degree < 1:
        raise InvalidParameterError(f"degree must be >= 1, got {degree}")
    k = _n_active(p, sparsity)
    rng = rng_from(derive_seed(seed, 0))
    active = np.zeros(p, dtype=bool)
    active[rng.choice(p, size=k, replace=False)] = True
    monomials = sample_monomials(active, degree, rng)
    regression = polynomial_function(monomials)
    cov = toeplitz_covariance(p, rho)
    x = sample_gaussian(n, np.zeros(p), cov, derive_seed(seed, 1))
    y = regression(x) + sigma_noise * rng_from(derive_seed(seed, 2)).standard_normal(n)

    tsi = np.zeros(p)
    for j in np.flatnonzero(active):
        if oracle:
            tsi[j] = tsi_oracle_montecarlo(
                regression, cov, int(j), oracle_outer, oracle_inner, derive_seed(seed, 3, int(j))
            )
        else:
            tsi[j] = np.nan
    logger.info(f"Polynomial generator: {len(monomials)} monomials over {k} active features")
    truth = GroundTruth(
        active_set=active,
        beta=None,
        tsi=tsi,
        generator_id="polynomial",
        rho=rho,
        sigma_noise=sigma_noise,
        cov=cov,
        regression=regression,
        details={
            "degree": degree,
            "monomials": [{"factors": list(f), "coef": c} for f, c in monomials],
        },
    )
    return Dataset(x, y), truth
