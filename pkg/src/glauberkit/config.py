"""Experiment configuration: one YAML file per run, echoed into every output."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import SetupError

EXPERIMENTS = ("phase-order", "couple-bias", "info-prop", "surface-tension", "polymer-lclt",
               "interface-fluct", "two-point", "zero-temp", "multiscale-audit")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    replicas: int = 1
    lattice: dict = field(default_factory=dict)
    beta: float | None = None
    p: float | None = None
    h: float = 0.0
    beta_prime: float | None = None
    schedule: dict = field(default_factory=dict)
    out: str = "out"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise SetupError(f"unknown experiment {self.experiment!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise SetupError("seed must be an unsigned 64-bit integer")
        if int(self.replicas) < 1:
            raise SetupError("replicas must be positive")
        if self.p is not None and not 0.0 <= float(self.p) <= 1.0:
            raise SetupError("p must lie in [0, 1]")
        self.seed, self.replicas = int(self.seed), int(self.replicas)

    @property
    def beta_value(self) -> float:
        if self.beta is None:
            raise SetupError(f"{self.experiment} needs beta")
        if isinstance(self.beta, str) and self.beta.lower() in ("inf", "infinity"):
            return math.inf
        return float(self.beta)

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def to_dict(self) -> dict:
        return asdict(self)

    def echo(self) -> list[str]:
        """Config as sorted YAML, one comment line per YAML line.

        The output directory is left out so a run reproduces byte for byte
        wherever it is written.
        """
        d = self.to_dict()
        d.pop("out")
        text = yaml.safe_dump(d, sort_keys=True, default_flow_style=None)
        return ["# " + line for line in text.splitlines()]

    @classmethod
    def from_mapping(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict) or "experiment" not in d:
            raise SetupError("config must be a mapping with an 'experiment' key")
        known = set(cls.__dataclass_fields__)
        extra = {k: v for k, v in d.items() if k not in known}
        base = {k: v for k, v in d.items() if k in known}
        if extra:
            base.setdefault("params", {})
            base["params"] = {**extra, **(base["params"] or {})}
        for k in ("lattice", "schedule", "params"):
            if base.get(k) is None:
                base[k] = {}
        try:
            return cls(**base)
        except TypeError as e:
            raise SetupError(str(e)) from e

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            d = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as e:
            raise SetupError(f"cannot read config {path}: {e}") from e
        return cls.from_mapping(d)
