"""Finite-population Wright-Fisher model with single-crossover recombination."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FeasibilityError, ValidationError
from .forward import evolve
from .genome import GenomeLayout
from .measures import TypeDistribution, recombinator
from .rng import map_blocks, stream

MAX_CELLS = 1 << 27


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    replicates: int
    N: int
    t: int

    def __post_init__(self):
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if self.N < 1:
            raise ValidationError("population size must be >= 1")
        if self.t < 0:
            raise ValidationError("t must be >= 0")


@dataclass(frozen=True)
class Population:
    layout: GenomeLayout
    space: object
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 1 or c.size != self.space.size:
            raise ValidationError("counts must have one entry per type")
        if np.any(c < 0):
            raise ValidationError("counts must be nonnegative")
        if c.sum() < 1:
            raise ValidationError("population is empty")

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.N

    def empirical(self) -> TypeDistribution:
        return TypeDistribution(self.space, self.frequencies)


def initial_population(p0: TypeDistribution, layout: GenomeLayout, N: int) -> Population:
    """Round ``N * p0`` to integer counts by largest remainders."""
    p0.space.check_layout(layout)
    if N < 1:
        raise ValidationError("population size must be >= 1")
    exact = N * p0.weights
    counts = np.floor(exact).astype(np.int64)
    short = N - int(counts.sum())
    if short:
        # stable sort keeps ties in type order
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    return Population(layout, p0.space, counts)


def class_probabilities(layout: GenomeLayout) -> np.ndarray:
    rho = np.asarray(layout.rho, dtype=float)
    return np.concatenate([[max(0.0, 1.0 - rho.sum())], rho])


def wf_step(pop: Population, rng: np.random.Generator, return_classes: bool = False):
    """One generation: split N into recombination classes, then resample each class."""
    N = pop.N
    zhat = pop.empirical()
    classes = rng.multinomial(N, class_probabilities(pop.layout))
    counts = rng.multinomial(classes[0], zhat.weights)
    for alpha in range(pop.layout.n_links):
        if classes[alpha + 1]:
            counts = counts + rng.multinomial(classes[alpha + 1], recombinator(zhat, alpha).weights)
    out = Population(pop.layout, pop.space, counts)
    return (out, classes) if return_classes else out


def run_wf(p0: TypeDistribution, layout: GenomeLayout, cfg: SimulationConfig,
           workers: int | None = None) -> np.ndarray:
    """Frequency trajectories, shape ``(replicates, t + 1, |X|)``.

    Replicate r uses its own stream ``(seed, r)``; all start from the same
    rounded initial population.
    """
    cells = cfg.replicates * (cfg.t + 1) * p0.space.size
    if cells > MAX_CELLS:
        raise FeasibilityError(f"trajectory array of {cells} cells exceeds {MAX_CELLS}")
    start = initial_population(p0, layout, cfg.N)

    def run(b, first, count):
        out = np.empty((count, cfg.t + 1, p0.space.size))
        for k in range(count):
            rng = stream(cfg.seed, 0x3F, first + k)
            pop = start
            out[k, 0] = pop.frequencies
            for s in range(1, cfg.t + 1):
                pop = wf_step(pop, rng)
                out[k, s] = pop.frequencies
        return out

    return np.concatenate(map_blocks(run, cfg.replicates, workers, block=16), axis=0)


def mean_square_error(trajectories: np.ndarray, target: TypeDistribution) -> tuple[float, float]:
    """Mean over replicates of the squared Euclidean distance at the final time, and its SE."""
    d2 = np.sum((trajectories[:, -1, :] - target.weights) ** 2, axis=1)
    return float(d2.mean()), float(d2.std(ddof=1) / np.sqrt(len(d2))) if len(d2) > 1 else 0.0


def mse_vs_n(p0: TypeDistribution, layout: GenomeLayout, t: int, sizes, replicates: int,
             seed: int, workers: int | None = None) -> dict:
    """Mean-square deviation from the deterministic path for several population sizes.

    Returns the per-size table and the least-squares slope of log MSE on log N.
    """
    target = evolve(p0, layout, t)
    rows = []
    for N in sizes:
        traj = run_wf(p0, layout, SimulationConfig(seed, replicates, int(N), t), workers)
        mse, se = mean_square_error(traj, target)
        rows.append({"N": int(N), "mse": mse, "stderr": se})
    slope = float(np.polyfit(np.log([r["N"] for r in rows]), np.log([r["mse"] for r in rows]), 1)[0])
    return {"t": t, "replicates": replicates, "rows": rows, "slope": slope}
