"""Configuration management for condimp."""

import copy
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.errors import ConfigError
from src.learners.base import LearnerSpec


logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables."""

    # Logging
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")
    log_format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        alias="LOG_FORMAT",
    )

    # Reproducibility and execution
    default_seed: int = Field(default=0, alias="CONDIMP_SEED")
    workers: Optional[int] = Field(None, alias="CONDIMP_WORKERS")
    output_dir: str = Field(default="results", alias="CONDIMP_OUTPUT_DIR")

    # Estimation defaults
    oracle_outer: int = Field(default=100_000, alias="CONDIMP_ORACLE_OUTER")
    oracle_inner: int = Field(default=100, alias="CONDIMP_ORACLE_INNER")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        populate_by_name=True,
        extra="ignore",
    )

    def validate(self) -> None:
        """Validate configuration settings."""
        if self.log_level.upper() not in LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}")

        if not 0 <= self.default_seed < 2**64:
            raise ValueError("CONDIMP_SEED must be an unsigned 64-bit integer")

        if self.workers is not None and self.workers < 1:
            raise ValueError("CONDIMP_WORKERS must be positive")

        if self.oracle_outer < 1 or self.oracle_inner < 1:
            raise ValueError("Oracle sample sizes must be positive")


def get_settings() -> Settings:
    """Get application settings instance."""
    settings = Settings()
    settings.validate()
    return settings


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeneratorConfig(_Block):
    """Synthetic data generator block."""

    kind: Literal["linear", "nonlinear", "polynomial"] = "linear"
    n: int = Field(default=1000, ge=4)
    p: int = Field(default=20, ge=2)
    rho: float = Field(default=0.6, gt=-1.0, lt=1.0)
    sparsity: float = Field(default=0.25, gt=0.0, le=1.0)
    beta_value: float = 1.0
    beta_dist: Literal["fixed", "normal"] = "fixed"
    sigma_noise: float = Field(default=1.0, ge=0.0)
    snr: Optional[float] = Field(default=None, gt=0.0)
    degree: int = Field(default=3, ge=1)
    interaction_weights: List[float] = Field(default_factory=lambda: [1.0, 2.0])
    test_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)

    @field_validator("interaction_weights")
    @classmethod
    def _two_weights(cls, value: List[float]) -> List[float]:
        if len(value) != 2:
            raise ValueError("interaction_weights needs exactly two values")
        return value


class LearnerConfig(_Block):
    """Tagged learner record: a kind plus its hyperparameters."""

    kind: str = "ols"
    params: Dict[str, Any] = Field(default_factory=dict)

    def to_spec(self) -> LearnerSpec:
        """Convert to a validated learner specification."""
        return LearnerSpec.from_config({"kind": self.kind, **self.params})


class EstimatorConfig(_Block):
    """One estimator to run, optionally restricted to a subset of features."""

    name: Literal["pfi", "cpi", "sobol_cpi", "loco", "loco_w"]
    n_cal: Optional[int] = Field(default=None, ge=1)
    features: Optional[List[int]] = None

    @property
    def label(self) -> str:
        """Display label, e.g. ``sobol_cpi(100)``."""
        if self.name == "sobol_cpi":
            return f"sobol_cpi({self.n_cal or 1})"
        return self.name


class InferenceConfig(_Block):
    """Variance estimation and test settings."""

    variance: Literal["sample", "bootstrap"] = "sample"
    bootstrap_reps: int = Field(default=100, ge=50)
    corrections: List[Literal["none", "sqrt", "linear", "quadratic"]] = Field(
        default_factory=lambda: ["sqrt", "linear"]
    )
    c: Optional[float] = Field(default=None, ge=0.0)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    effective_n: Literal["test", "train"] = "test"


class SweepConfig(_Block):
    """Lists swept over by a benchmark run; empty means "use the generator value"."""

    n: List[int] = Field(default_factory=list)
    rho: List[float] = Field(default_factory=list)
    n_cal: List[int] = Field(default_factory=list)


class ExperimentConfig(_Block):
    """Complete experiment configuration as read from YAML."""

    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    model: LearnerConfig = Field(default_factory=LearnerConfig)
    restricted_model: Optional[LearnerConfig] = None
    sampler_model: LearnerConfig = Field(default_factory=LearnerConfig)
    estimators: List[EstimatorConfig] = Field(
        default_factory=lambda: [EstimatorConfig(name="sobol_cpi", n_cal=1)]
    )
    inference: InferenceConfig = Field(default_factory=InferenceConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    repetitions: int = Field(default=1, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    sampling_scheme: Literal["resample", "permute"] = "resample"

    def restricted_spec(self) -> LearnerSpec:
        """Learner for LOCO's reduced model; defaults to the full-model learner."""
        return (self.restricted_model or self.model).to_spec()


def _set_dotted(raw: Dict[str, Any], dotted_key: str, value: Any) -> None:
    node = raw
    parts = dotted_key.split(".")
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        if not isinstance(child, dict):
            raise ConfigError(f"Cannot override {dotted_key}: '{part}' is not a mapping")
        node = child
    node[parts[-1]] = value


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    Apply ``key=value`` overrides to a raw config mapping.

    Values are parsed as YAML scalars so ``n=500`` gives an int and
    ``sweep.n=[500,2000]`` gives a list.

    Args:
        raw: Parsed config mapping (not modified)
        overrides: Items of the form ``dotted.key=value``

    Returns:
        New mapping with overrides applied
    """
    merged = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"Override must look like key=value, got '{item}'")
        key, text = item.split("=", 1)
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse override value '{text}': {e}")
        _set_dotted(merged, key.strip(), value)
    return merged


def parse_experiment_config(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw mapping into an ExperimentConfig."""
    try:
        config = ExperimentConfig.model_validate(raw)
        # Surface learner hyperparameter errors at load time
        config.model.to_spec()
        config.sampler_model.to_spec()
        config.restricted_spec()
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"Invalid experiment config: {e}")
    return config


def load_experiment_config(
    path: Path,
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    default_seed: Optional[int] = None,
) -> ExperimentConfig:
    """
    Read an experiment config file.

    Args:
        path: YAML file path
        overrides: ``key=value`` overrides applied before validation
        seed: Optional master seed override
        default_seed: Master seed used when the file sets none

    Returns:
        Validated experiment configuration

    Raises:
        ConfigError: If the file is missing, unparsable or invalid
    """
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")

    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse {path}: {e}")

    if not isinstance(raw, dict):
        raise ConfigError(f"Config root must be a mapping: {path}")

    raw = apply_overrides(raw, overrides)
    if seed is not None:
        raw["master_seed"] = seed
    elif default_seed is not None:
        raw.setdefault("master_seed", default_seed)

    config = parse_experiment_config(raw)
    logger.info(f"Loaded experiment config from {path} (master seed {config.master_seed})")
    return config
