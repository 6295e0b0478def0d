"""Experiment configuration (TOML) with strict validation.

Schema (every key optional unless noted; unknown keys are rejected)::

    target = "paper-2d"            # preset name or path to a target JSON (required)
    sigma = 0.5
    n_schedule = [100, 400, 800, 1500]   # nonempty, strictly ascending
    replications = 20
    mc_n = 20000                   # fresh uniform points per error measurement
    master_seed = 0
    output_dir = "results/desk"    # relative paths resolve under $PWRATES_OUTPUT_ROOT if set
    design = "uniform"             # or "equispaced" (1-D only)
    workers = 1
    methods = ["dnn", "gaussian-kernel", "poly-kernel", "series"]

    [dnn]            shape, restarts, epochs, lr, beta1, beta2, adam_eps, init_scale, batch_size
    [gaussian-kernel] bandwidths, ridges, folds
    [poly-kernel]    degrees, ridges, folds
    [series]         schedule ("cv" | "paper"), jmax, c_J, folds
    [bayes]          shape, B, steps, burn_in, proposal_scale, thin
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import Literal

import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .baselines.kernel import DEFAULT_BANDWIDTHS, DEFAULT_DEGREES, DEFAULT_RIDGES

OUTPUT_ROOT_ENV = "PWRATES_OUTPUT_ROOT"
METHODS = ("dnn", "gaussian-kernel", "poly-kernel", "series", "bayes")


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class DnnSettings(_Strict):
    shape: tuple[int, ...] = (2, 3, 3, 3, 1)
    restarts: int = Field(10, ge=1)
    epochs: int = Field(5000, ge=1)
    lr: float = Field(1e-2, gt=0, lt=1)
    beta1: float = Field(0.9, gt=0, lt=1)
    beta2: float = Field(0.999, gt=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0, lt=1)
    init_scale: float = Field(0.5, gt=0)
    batch_size: int | None = Field(None, ge=1)


class GaussianSettings(_Strict):
    bandwidths: tuple[float, ...] = DEFAULT_BANDWIDTHS
    ridges: tuple[float, ...] = DEFAULT_RIDGES
    folds: int = Field(5, ge=2)


class PolySettings(_Strict):
    degrees: tuple[int, ...] = DEFAULT_DEGREES
    ridges: tuple[float, ...] = DEFAULT_RIDGES
    folds: int = Field(5, ge=2)


class SeriesSettings(_Strict):
    schedule: Literal["cv", "paper"] = "cv"
    jmax: int = Field(10, ge=1)
    c_J: float = Field(1.0, gt=0)
    folds: int = Field(5, ge=2)


class BayesSettings(_Strict):
    shape: tuple[int, ...] = (2, 3, 1)
    B: float = Field(2.0, gt=0)
    steps: int = Field(20000, ge=2)
    burn_in: int = Field(5000, ge=1)
    proposal_scale: float = Field(0.05, gt=0)
    thin: int = Field(10, ge=1)


class ExperimentConfig(_Strict):
    target: str
    sigma: float = Field(0.5, ge=0)
    n_schedule: tuple[int, ...] = (100, 400, 800, 1500)
    replications: int = Field(20, ge=1)
    mc_n: int = Field(20000, ge=1)
    master_seed: int = Field(0, ge=0)
    output_dir: str = "results"
    design: Literal["uniform", "equispaced"] = "uniform"
    workers: int = Field(1, ge=1)
    methods: tuple[str, ...] = ("dnn", "gaussian-kernel", "poly-kernel", "series")
    dnn: DnnSettings = DnnSettings()
    gaussian_kernel: GaussianSettings = Field(GaussianSettings(), alias="gaussian-kernel")
    poly_kernel: PolySettings = Field(PolySettings(), alias="poly-kernel")
    series: SeriesSettings = SeriesSettings()
    bayes: BayesSettings = BayesSettings()

    @field_validator("n_schedule")
    @classmethod
    def _ascending(cls, v):
        if not v:
            raise ValueError("n_schedule must be nonempty")
        if any(b <= a for a, b in zip(v, v[1:])) or v[0] < 1:
            raise ValueError("n_schedule must be strictly ascending positive integers")
        return v

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, v):
        if not v:
            raise ValueError("at least one method is required")
        unknown = [m for m in v if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown method(s) {unknown}; known: {', '.join(METHODS)}")
        if len(set(v)) != len(v):
            raise ValueError("methods must not repeat")
        return v

    @model_validator(mode="after")
    def _consistent(self):
        if self.bayes.burn_in >= self.bayes.steps:
            raise ValueError("bayes.burn_in must be smaller than bayes.steps")
        return self

    def resolved_output_dir(self, base: Path | None = None) -> Path:
        out = Path(self.output_dir)
        if out.is_absolute():
            return out
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root:
            return Path(root) / out
        return (base or Path.cwd()) / out


def parse_config(doc: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = tomli.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc)
