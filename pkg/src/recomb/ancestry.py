"""Finite-N backward partitioning process.

Starting from one individual, the site set is split by recombination and the
pieces are assigned to parents in the previous generation; pieces landing in
the same parent coalesce. Parts are site bitmasks and need not be contiguous.

Two engines are provided: a per-run engine on :class:`PartitionState` values,
and a batch engine that runs many independent ancestries as numpy arrays of
site labels (label = lowest site of the part).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FeasibilityError, ValidationError
from .genome import GenomeLayout, LinkSet
from .measures import TypeDistribution
from .rng import BLOCK, map_blocks, stream


def _sites(mask: int) -> list[int]:
    return [s for s in range(mask.bit_length()) if mask >> s & 1]


@dataclass(frozen=True)
class PartitionState:
    """Parts of the site set (bitmasks, sorted by lowest site) and their parent labels."""

    parts: tuple
    parent_ids: tuple = ()

    def __post_init__(self):
        ids = tuple(self.parent_ids) or (0,) * len(self.parts)
        if len(ids) != len(self.parts):
            raise ValidationError("one parent id per part")
        pairs = sorted(zip(self.parts, ids), key=lambda pr: pr[0] & -pr[0])
        parts = tuple(p for p, _ in pairs)
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "parent_ids", tuple(int(i) for _, i in pairs))
        acc = 0
        for p in parts:
            if p <= 0 or acc & p:
                raise ValidationError("parts must be nonempty and disjoint")
            acc |= p
        if acc & (acc + 1):
            raise ValidationError("parts must cover sites 0..n")

    @classmethod
    def whole(cls, n_sites: int) -> "PartitionState":
        return cls(((1 << n_sites) - 1,), (0,))

    @property
    def n_sites(self) -> int:
        return sum(self.parts).bit_length()

    def site_lists(self) -> list[list[int]]:
        return [_sites(p) for p in self.parts]

    def is_ordered(self) -> bool:
        return all(p & (p + (p & -p)) == 0 for p in self.parts)

    def links(self) -> LinkSet:
        """The link set of an ordered partition (its cut points)."""
        if not self.is_ordered():
            raise ValidationError("not an ordered partition")
        n = self.n_sites
        G = 0
        for p in self.parts:
            top = p.bit_length() - 1
            if top != n - 1:
                G |= 1 << top
        return G

    def to_json(self) -> dict:
        return {"parts": self.site_lists(), "parent_ids": list(self.parent_ids)}


@dataclass(frozen=True)
class AncestryRun:
    """States Sigma_0..Sigma_t, the split states Sigma'_0..Sigma'_{t-1}, and the no-coalescence flag."""

    trajectory: tuple
    split_states: tuple
    coalescence_free: bool

    @property
    def t(self) -> int:
        return len(self.trajectory) - 1


def _interior_links(part: int) -> range:
    lo = (part & -part).bit_length() - 1
    hi = part.bit_length() - 1
    return range(lo, hi)


def split_step(state: PartitionState, layout: GenomeLayout, rng: np.random.Generator) -> PartitionState:
    """Each part independently stays whole or splits at one interior link.

    Interior links of a part are those strictly between its lowest and highest
    site; splitting at link i separates the part's sites <= i from those > i.
    """
    new_parts, new_ids = [], []
    for part, pid in zip(state.parts, state.parent_ids):
        u = rng.random()
        acc = 0.0
        cut = None
        for i in _interior_links(part):
            acc += layout.rho[i]
            if u < acc:
                cut = i
                break
        if cut is None:
            new_parts.append(part)
            new_ids.append(pid)
        else:
            low = part & ((1 << (cut + 1)) - 1)
            new_parts += [low, part & ~low]
            new_ids += [pid, pid]
    return PartitionState(tuple(new_parts), tuple(new_ids))


def coalescence_step(state: PartitionState, N: int, rng: np.random.Generator) -> PartitionState:
    """Every part picks one of N parents uniformly with replacement; equal picks merge."""
    if N < 1:
        raise ValidationError("population size must be >= 1")
    picks = rng.integers(0, N, size=len(state.parts))
    merged: dict[int, int] = {}
    for part, parent in zip(state.parts, picks):
        merged[int(parent)] = merged.get(int(parent), 0) | part
    return PartitionState(tuple(merged.values()), tuple(merged.keys()))


def run_ancestry(layout: GenomeLayout, N: int, t: int, rng: np.random.Generator) -> AncestryRun:
    if t < 0:
        raise ValidationError(f"negative time {t}")
    state = PartitionState.whole(layout.n_sites)
    traj, splits = [state], []
    free = True
    for _ in range(t):
        split = split_step(state, layout, rng)
        state = coalescence_step(split, N, rng)
        free &= len(state.parts) == len(split.parts)
        splits.append(split)
        traj.append(state)
    return AncestryRun(tuple(traj), tuple(splits), free)


def sample_type(run: AncestryRun, p0: TypeDistribution, rng: np.random.Generator) -> tuple:
    """Type of the present-day individual given its ancestry.

    Each part of the last split state draws the letters on its sites from the
    marginal of ``p0``; a draw of a full type from ``p0`` projected on the
    part's sites has exactly that law.
    """
    parts = run.split_states[-1].parts if run.split_states else run.trajectory[0].parts
    x = [0] * p0.space.n_sites
    for part in parts:
        full = p0.space.type_of(int(rng.choice(p0.space.size, p=p0.weights)))
        for s in _sites(part):
            x[s] = full[s]
    return tuple(x)


# -- batch engine --------------------------------------------------------------

@dataclass
class AncestryBatch:
    """Outcome of many independent ancestries.

    ``labels`` and ``split_labels`` are (runs, n_sites) arrays holding, for
    every site, the lowest site of its part in Sigma_t resp. Sigma'_{t-1}.
    """

    labels: np.ndarray
    split_labels: np.ndarray
    coalescence_free: np.ndarray


def _part_max(labels: np.ndarray) -> np.ndarray:
    R, n = labels.shape
    pmax = np.full((R, n), -1, dtype=np.int64)
    rows = np.arange(R)
    for s in range(n):
        pmax[rows, labels[:, s]] = s
    return pmax


def batch_split(labels: np.ndarray, cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorised :func:`split_step`; ``u[r, j]`` is the uniform of the part led by site j."""
    R, n = labels.shape
    rows = np.arange(R)
    pmax = _part_max(labels)
    reps = np.arange(n)
    v = u + cum[reps]
    cut = np.searchsorted(cum, v, side="right") - 1
    is_rep = labels == reps
    cut = np.where(is_rep & (cut < pmax), cut, -1)
    new = labels.copy()
    first_above = np.full((R, n), -1, dtype=labels.dtype)
    for s in range(n):
        j = labels[:, s]
        c = cut[rows, j]
        moved = (c >= 0) & (s > c)
        fresh = moved & (first_above[rows, j] < 0)
        first_above[rows[fresh], j[fresh]] = s
        new[:, s] = np.where(moved, first_above[rows, j], j)
    return new


def batch_coalesce(labels: np.ndarray, N: int, u: np.ndarray) -> np.ndarray:
    """Vectorised :func:`coalescence_step`; parent of part j is ``floor(u[r, j] * N)``."""
    R, n = labels.shape
    rows = np.arange(R)
    parent = np.minimum((u * N).astype(np.int64), N - 1)
    site_parent = parent[rows[:, None], labels]
    new = np.empty_like(labels)
    for s in range(n):
        same = site_parent == site_parent[:, [s]]
        new[:, s] = np.argmax(same, axis=1)
    return new


def simulate_batch(layout: GenomeLayout, N: int, t: int, rng_split: np.random.Generator,
                   rng_parent: np.random.Generator, count: int) -> AncestryBatch:
    n = layout.n_sites
    cum = np.concatenate([[0.0], np.cumsum(layout.rho), [np.inf]])
    labels = np.zeros((count, n), dtype=np.int64)
    split = labels
    free = np.ones(count, dtype=bool)
    for _ in range(t):
        split = batch_split(labels, cum, rng_split.random((count, n)))
        labels = batch_coalesce(split, N, rng_parent.random((count, n)))
        free &= _n_parts(labels) == _n_parts(split)
    return AncestryBatch(labels, split, free)


def _n_parts(labels: np.ndarray) -> np.ndarray:
    return (labels == np.arange(labels.shape[1])).sum(axis=1)


def simulate_ancestries(layout: GenomeLayout, N: int, t: int, runs: int, seed: int,
                        workers: int | None = None, block: int = BLOCK) -> AncestryBatch:
    """Many independent ancestries, block-seeded.

    Splitting and parent choice draw from separate streams, so runs with the
    same seed and different N share their splitting randomness.
    """
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    if N < 1:
        raise ValidationError("population size must be >= 1")

    def run(b, start, count):
        return simulate_batch(layout, N, t, stream(seed, 0xA5, b, 0), stream(seed, 0xA5, b, 1), count)

    parts = map_blocks(run, runs, workers, block)
    return AncestryBatch(np.concatenate([p.labels for p in parts]),
                         np.concatenate([p.split_labels for p in parts]),
                         np.concatenate([p.coalescence_free for p in parts]))


def ordered_links(labels: np.ndarray) -> np.ndarray:
    """Link bitmask per run for ordered partitions, -1 where a part is not contiguous."""
    R, n = labels.shape
    ordered = np.all(np.diff(labels, axis=1) >= 0, axis=1)
    # contiguous parts with lowest-site labels: a new part starts exactly where the label changes
    starts = labels[:, 1:] != labels[:, :-1]
    ordered &= np.all(~starts | (labels[:, 1:] == np.arange(1, n)), axis=1)
    G = (starts.astype(np.int64) << np.arange(n - 1)).sum(axis=1)
    return np.where(ordered, G, -1)


def omega_bound(layout: GenomeLayout, N: int, t: int) -> float:
    """Leading-order lower bound on the no-coalescence probability."""
    n = layout.n_links
    return 1.0 - n * (n + 1) * t / (2.0 * N)


def q_k(k: int, N: int) -> float:
    """Probability that k parts pick k distinct parents out of N."""
    out = 1.0
    for j in range(k):
        out *= 1.0 - j / N
    return out


def psi_law(batch: AncestryBatch, n_links: int) -> tuple[np.ndarray, float]:
    """Empirical law of the link set of Sigma_t over ordered outcomes, plus the unordered mass."""
    G = ordered_links(batch.labels)
    R = len(G)
    law = np.bincount(G[G >= 0], minlength=1 << n_links) / R
    return law, float(np.mean(G < 0))


def total_variation(batch: AncestryBatch, exact: np.ndarray) -> float:
    """TV distance between the law of psi(Sigma_t) (unordered outcomes as one extra cell) and ``exact``."""
    law, lost = psi_law(batch, int(np.log2(len(exact))))
    return 0.5 * (float(np.abs(law - exact).sum()) + lost)


def sample_types(batch: AncestryBatch, p0: TypeDistribution, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`sample_type`: one type index per run."""
    R, n = batch.split_labels.shape
    draws = rng.choice(p0.space.size, size=(R, n), p=p0.weights)
    digits = np.stack(np.unravel_index(draws, p0.space.alphabet_sizes), axis=-1)  # (R, n, n)
    rows = np.arange(R)[:, None]
    sites = np.arange(n)[None, :]
    letters = digits[rows, batch.split_labels, sites]
    return np.ravel_multi_index(tuple(letters.T), p0.space.alphabet_sizes)


# -- exact finite-N law --------------------------------------------------------

EXACT_MAX_SITES = 6


def _set_partitions(items: list):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for blocks in _set_partitions(rest):
        yield [[head]] + blocks
        for k in range(len(blocks)):
            yield blocks[:k] + [[head] + blocks[k]] + blocks[k + 1:]


def _split_outcomes(parts: tuple, layout: GenomeLayout):
    outcomes = [((), 1.0)]
    for part in parts:
        options = []
        stay = 1.0
        for i in _interior_links(part):
            low = part & ((1 << (i + 1)) - 1)
            options.append(((low, part & ~low), layout.rho[i]))
            stay -= layout.rho[i]
        options.append(((part,), stay))
        outcomes = [(acc + pieces, p * q) for acc, p in outcomes for pieces, q in options]
    return outcomes


def _falling(N: int, b: int) -> float:
    out = 1.0
    for j in range(b):
        out *= (N - j) / N
    return out


def exact_partition_law(layout: GenomeLayout, N: int, t: int) -> dict:
    """Law of Sigma_t as ``{sorted tuple of part bitmasks: probability}``.

    Built by propagating the split kernel and then the parent-choice kernel:
    k parts fall into a given grouping with b groups with probability
    N(N-1)...(N-b+1) / N^k.
    """
    if layout.n_sites > EXACT_MAX_SITES:
        raise FeasibilityError(f"exact partition law supports at most {EXACT_MAX_SITES} sites")
    law = {((1 << layout.n_sites) - 1,): 1.0}
    for _ in range(t):
        nxt: dict = {}
        for parts, p in law.items():
            for pieces, q in _split_outcomes(parts, layout):
                k = len(pieces)
                for blocks in _set_partitions(list(pieces)):
                    w = p * q * _falling(N, len(blocks)) / N ** (k - len(blocks))
                    if w == 0.0:
                        continue
                    key = tuple(sorted((sum(b) for b in blocks), key=lambda m: m & -m))
                    nxt[key] = nxt.get(key, 0.0) + w
        law = nxt
    return law


def exact_total_variation(layout: GenomeLayout, N: int, t: int, exact: np.ndarray) -> float:
    """TV distance between the exact law of psi(Sigma_t) (unordered as one cell) and ``exact``."""
    law = np.zeros(len(exact))
    lost = 0.0
    for parts, p in exact_partition_law(layout, N, t).items():
        state = PartitionState(parts)
        if state.is_ordered():
            law[state.links()] += p
        else:
            lost += p
    return 0.5 * (float(np.abs(law - exact).sum()) + lost)
