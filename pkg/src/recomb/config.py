"""Experiment configuration and output metadata."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ValidationError
from .genome import GenomeLayout
from .measures import TypeDistribution, TypeSpace, distribution_from_json
from .rng import stream

KNOWN_KEYS = {"rho", "alphabet_sizes", "p0", "t", "seed", "replicates", "pop_size", "methods"}
METHODS = ("recursion", "art", "oracle", "mc")


@dataclass(frozen=True)
class ExperimentConfig:
    """One JSON document describing a run.

    ``p0`` is a distribution record (``table`` or ``product``), ``{"kind": "uniform"}``,
    or ``{"kind": "random", "concentration": c}``, which is drawn from the seed.
    """

    rho: tuple
    alphabet_sizes: tuple | None = None
    p0: dict = field(default_factory=lambda: {"kind": "random"})
    t: int = 10
    seed: int = 0
    replicates: int = 1000
    pop_size: int = 1000
    methods: tuple = ("recursion", "art", "oracle")

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(float(r) for r in self.rho))
        if self.alphabet_sizes is None:
            object.__setattr__(self, "alphabet_sizes", (2,) * (len(self.rho) + 1))
        object.__setattr__(self, "alphabet_sizes", tuple(int(a) for a in self.alphabet_sizes))
        object.__setattr__(self, "methods", tuple(self.methods))
        for m in self.methods:
            if m not in METHODS:
                raise ValidationError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        if len(self.alphabet_sizes) != len(self.rho) + 1:
            raise ValidationError(
                f"{len(self.rho)} crossover probabilities need {len(self.rho) + 1} alphabet sizes, "
                f"got {len(self.alphabet_sizes)}")
        for name in ("t", "seed", "replicates", "pop_size"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValidationError(f"{name} must be a nonnegative integer, got {v!r}")
        self.layout  # validates rho

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ValidationError("config must be a JSON object")
        unknown = set(obj) - KNOWN_KEYS
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "rho" not in obj:
            raise ValidationError("config needs 'rho'")
        return cls(**obj)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ValidationError(f"cannot read config {path}: {e.strerror}") from e
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"config {path} is not valid JSON: {e}") from e
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return {"rho": list(self.rho), "alphabet_sizes": list(self.alphabet_sizes), "p0": self.p0,
                "t": self.t, "seed": self.seed, "replicates": self.replicates,
                "pop_size": self.pop_size, "methods": list(self.methods)}

    @property
    def layout(self) -> GenomeLayout:
        return GenomeLayout.from_rho(self.rho)

    @property
    def space(self) -> TypeSpace:
        return TypeSpace(self.alphabet_sizes)

    def initial(self) -> TypeDistribution:
        spec = dict(self.p0)
        kind = spec.get("kind")
        if kind == "uniform":
            return TypeDistribution.uniform(self.space)
        if kind == "random":
            return TypeDistribution.random(self.space, stream(self.seed, 0xD0),
                                           float(spec.get("concentration", 1.0)))
        return distribution_from_json(spec, self.space)

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def metadata(cfg: ExperimentConfig, **extra) -> dict:
    """Header attached to every output: config hash, seed, tool version."""
    out = {"tool": "recomb", "version": __version__, "config_hash": cfg.digest(), "seed": cfg.seed}
    out.update(extra)
    return out
