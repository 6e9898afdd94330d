"""Experiment configuration documents (YAML, strict: unknown fields are errors)."""
from __future__ import annotations

import zlib
from fractions import Fraction
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .banach import DEFAULT_HORIZON, IndexSet, WindowSchedule
from .ergotest import default_thresholds
from .spaces import (Circle, FullShift, Product, ProductPoint, Rotation, block_word, periodic_word,
                     prefixed_word, random_point)


class ConfigError(ValueError):
    pass


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemCfg(Strict):
    kind: Literal["rotation", "fullshift", "product"]
    alpha: Optional[Union[str, float]] = None
    left: Optional["SystemCfg"] = None
    right: Optional["SystemCfg"] = None

    @model_validator(mode="after")
    def _shape(self):
        if self.kind == "rotation" and self.alpha is None:
            raise ValueError("rotation needs 'alpha' (a fraction literal or 'golden')")
        if self.kind == "product" and (self.left is None or self.right is None):
            raise ValueError("product needs 'left' and 'right'")
        return self


class PointCfg(Strict):
    circle: Optional[Union[str, float]] = None
    word: Optional[str] = None
    prefix: Optional[str] = None
    tail: Optional[str] = None
    blocks: Optional[int] = None
    random: Optional[bool] = None
    product: Optional[Tuple["PointCfg", "PointCfg"]] = None

    @model_validator(mode="after")
    def _one_kind(self):
        kinds = [k for k in ("circle", "word", "prefix", "blocks", "random", "product")
                 if getattr(self, k) is not None]
        if len(kinds) != 1:
            raise ValueError(f"a point needs exactly one of circle/word/prefix/blocks/random/product, got {kinds}")
        if self.prefix is not None and self.tail is None:
            raise ValueError("'prefix' needs a 'tail' pattern")
        return self


class ScheduleCfg(Strict):
    lengths: Optional[List[int]] = None
    min_length: int = 8
    max_length: int = 4096
    horizon: int = DEFAULT_HORIZON


class ThresholdCfg(Strict):
    tau0: float = 0.02
    band: float = 5.0
    generic_tol: float = 0.02


class ProbeCfg(Strict):
    kind: Literal["unique_ergodicity", "measure_agreement", "gap", "modulus",
                  "average_continuity", "physical"]
    points: List[str] = []
    random_points: int = 0
    observable: Optional[str] = None
    deltas: List[float] = []
    check_cesaro: bool = False


class DensityCfg(Strict):
    kind: Literal["evens", "dyadic_blocks", "members", "random"]
    horizon: int = DEFAULT_HORIZON
    members: List[int] = []
    p: float = 0.5


class BoundCfg(Strict):
    eps: float


class OutputCfg(Strict):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class ExperimentConfig(Strict):
    experiment_id: str
    system: SystemCfg
    points: dict[str, PointCfg] = Field(default_factory=dict)
    pairs: List[Tuple[str, str]] = []
    observables: List[str] = []
    schedule: ScheduleCfg = ScheduleCfg()
    solver: Literal["auto", "exact", "fast"] = "auto"
    seed: Optional[int] = None
    threads: int = 1
    thresholds: ThresholdCfg = ThresholdCfg()
    probe: Optional[ProbeCfg] = None
    density: Optional[DensityCfg] = None
    bound: Optional[BoundCfg] = None
    output: OutputCfg = OutputCfg()

    @model_validator(mode="after")
    def _names_and_seed(self):
        for x, y in self.pairs:
            for name in (x, y):
                if name not in self.points:
                    raise ValueError(f"pairs: unknown point {name!r}")
        if self.probe:
            for name in self.probe.points:
                if name not in self.points:
                    raise ValueError(f"probe.points: unknown point {name!r}")
        if self.seed is None and self.needs_seed():
            raise ValueError("seed: required because this experiment samples randomly")
        return self

    def needs_seed(self) -> bool:
        if any(_has_random(p) for p in self.points.values()):
            return True
        if self.probe and (self.probe.random_points or self.probe.kind in ("modulus", "average_continuity")):
            return True
        return bool(self.density and self.density.kind == "random")


def _has_random(p: PointCfg) -> bool:
    if p.random:
        return True
    return bool(p.product) and any(_has_random(q) for q in p.product)


def _fraction(value, field: str) -> int:
    if isinstance(value, str) and value.lower().startswith("0x"):
        frac = int(value, 16)
        if frac >> 64:
            raise ConfigError(f"{field}: hex fraction exceeds 64 bits")
        return frac
    try:
        return Circle.from_value(value).frac
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{field}: cannot parse fraction {value!r}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    return parse_config(doc)


def parse_config(doc) -> ExperimentConfig:
    from pydantic import ValidationError

    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"])
            msg = err["msg"].removeprefix("Value error, ")
            msgs.append(f"{loc}: {msg}" if loc else msg)
        raise ConfigError("; ".join(msgs)) from None


# ---------------------------------------------------------------------------
# resolution into library objects


def build_schedule(cfg: ExperimentConfig) -> WindowSchedule:
    s = cfg.schedule
    try:
        if s.lengths:
            return WindowSchedule(tuple(s.lengths), s.horizon)
        return WindowSchedule.dyadic(s.min_length, s.max_length, s.horizon)
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None


def build_system(cfg: SystemCfg, horizon: int, field: str = "system"):
    if cfg.kind == "rotation":
        if isinstance(cfg.alpha, str) and cfg.alpha == "golden":
            return Rotation.golden()
        return Rotation(_fraction(cfg.alpha, f"{field}.alpha"))
    if cfg.kind == "fullshift":
        return FullShift.for_horizon(horizon)
    return Product(build_system(cfg.left, horizon, f"{field}.left"),
                   build_system(cfg.right, horizon, f"{field}.right"))


def build_point(system, p: PointCfg, name: str, seed: Optional[int], field: str):
    if p.product is not None:
        if not isinstance(system, Product):
            raise ConfigError(f"{field}: product point on a non-product system")
        return ProductPoint(build_point(system.left, p.product[0], name + ".0", seed, field + ".product.0"),
                            build_point(system.right, p.product[1], name + ".1", seed, field + ".product.1"))
    if p.random:
        rng = np.random.default_rng([seed, zlib.crc32(name.encode())])
        return random_point(system, rng)
    if p.circle is not None:
        if not isinstance(system, Rotation):
            raise ConfigError(f"{field}: circle point on {system.describe()}")
        return Circle(_fraction(p.circle, field + ".circle"))
    if not isinstance(system, FullShift):
        raise ConfigError(f"{field}: word point on {system.describe()}")
    try:
        if p.word is not None:
            return periodic_word(p.word, system.capacity)
        if p.prefix is not None:
            return prefixed_word(p.prefix, p.tail, system.capacity)
        return block_word(system.capacity, p.blocks)
    except ValueError as exc:
        raise ConfigError(f"{field}: {exc}") from None


def build_points(cfg: ExperimentConfig, system) -> dict:
    return {name: build_point(system, p, name, cfg.seed, f"points.{name}") for name, p in cfg.points.items()}


def build_index_set(cfg: DensityCfg, seed: Optional[int]) -> IndexSet:
    H = cfg.horizon
    if cfg.kind == "evens":
        return IndexSet.evens(H)
    if cfg.kind == "dyadic_blocks":
        return IndexSet.dyadic_blocks(H)
    if cfg.kind == "members":
        try:
            return IndexSet.from_members(cfg.members, H)
        except IndexError as exc:
            raise ConfigError(f"density.members: {exc}") from None
    rng = np.random.default_rng(seed)
    return IndexSet(rng.random(H) < cfg.p)


def thresholds(cfg: ExperimentConfig) -> dict:
    return default_thresholds(**cfg.thresholds.model_dump())


__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "build_schedule",
           "build_system", "build_points", "build_index_set", "thresholds", "Fraction"]
