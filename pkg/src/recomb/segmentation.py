"""Backward segmentation process on subsets of links.

Three views of the same chain live here: a scalar step, an exact oracle that
builds the transition kernel on the power set of a link window and pushes a
point mass through it, and a vectorised Monte Carlo sampler that also records
cut times (from which the ancestral tree topology follows).
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.sparse as sp

from .errors import FeasibilityError, ValidationError
from .forward import CoefficientTable
from .genome import GenomeLayout, LinkSet, above, below, bounds, links_of, segments_of, subsets
from .rng import BLOCK, map_blocks, stream

ORACLE_MAX_LINKS = 12


@dataclass(frozen=True)
class SegmentationState:
    cut_links: LinkSet
    tau: int = 0


@dataclass(frozen=True)
class SegmentationTrajectory:
    """Cut times per link (-1 for links never cut) of one realisation.

    Links cut in the same step lie in distinct segments, so the ancestral
    tree is the Cartesian tree of the cut times over link order.
    """

    cut_times: tuple

    @property
    def steps(self) -> list[tuple[int, LinkSet]]:
        out = {}
        for i, c in enumerate(self.cut_times):
            if c >= 0:
                out[c] = out.get(c, 0) | (1 << i)
        return sorted(out.items())

    @property
    def final(self) -> LinkSet:
        G = 0
        for i, c in enumerate(self.cut_times):
            if c >= 0:
                G |= 1 << i
        return G


def segmentation_step(state: SegmentationState, layout: GenomeLayout,
                      rng: np.random.Generator) -> SegmentationState:
    """Choose none or one link in every current segment, one uniform per segment."""
    new = state.cut_links
    for seg in segments_of(layout, state.cut_links):
        u = rng.random()
        acc = 0.0
        for alpha in links_of(seg):
            acc += layout.rho[alpha]
            if u < acc:
                new |= 1 << alpha
                break
    return SegmentationState(new, state.tau + 1)


def _window_layout(layout: GenomeLayout, window: LinkSet) -> tuple[int, list]:
    lo, hi = bounds(layout.check(window))
    if hi - lo > ORACLE_MAX_LINKS:
        raise FeasibilityError(f"oracle window of {hi - lo} links exceeds {ORACLE_MAX_LINKS}")
    return lo, list(layout.rho[lo:hi])


def transition_kernel(rho: list) -> sp.csr_matrix:
    """Row-stochastic kernel on subsets of ``len(rho)`` links (local indices).

    Per state, every combination of (no cut | cut at alpha) over its segments
    is enumerated and weighted by the product of the per-segment probabilities.
    """
    w = len(rho)
    rows, cols, vals = [], [], []
    for G in range(1 << w):
        choices = []
        for seg in _local_segments(G, w):
            opts = [(0, 1.0 - sum(rho[i] for i in seg))]
            opts.extend((1 << i, rho[i]) for i in seg)
            choices.append(opts)
        for combo in product(*choices):
            A, prob = 0, 1.0
            for bit, q in combo:
                A |= bit
                prob *= q
            rows.append(G)
            cols.append(G | A)
            vals.append(prob)
    return sp.csr_matrix((vals, (rows, cols)), shape=(1 << w, 1 << w))


def _local_segments(G: int, w: int) -> list[list[int]]:
    segs, run = [], []
    for i in range(w):
        if G >> i & 1:
            if run:
                segs.append(run)
            run = []
        else:
            run.append(i)
    if run:
        segs.append(run)
    return segs


def exact_distribution(layout: GenomeLayout, t: int, window: LinkSet | None = None,
                       trajectory: bool = False):
    """Law of the segmentation process on ``window`` after ``t`` steps from the empty set.

    Returns an array indexed by *global* link bitmask (entries outside the
    window's power set are zero), or the list of such arrays for ``0..t``.
    """
    if t < 0:
        raise ValidationError(f"negative time {t}")
    if window is None:
        window = layout.full
    lo, rho = _window_layout(layout, window)
    K = transition_kernel(rho).T.tocsr()
    local = np.zeros(1 << len(rho))
    local[0] = 1.0
    out = [_to_global(local, lo, layout.n_links)]
    for _ in range(t):
        local = K @ local
        out.append(_to_global(local, lo, layout.n_links))
    return out if trajectory else out[-1]


def _to_global(local: np.ndarray, lo: int, n_links: int) -> np.ndarray:
    g = np.zeros(1 << n_links)
    g[np.arange(len(local)) << lo] = local
    return g


def exact_table(layout: GenomeLayout, t: int) -> CoefficientTable:
    return CoefficientTable(layout, t, exact_distribution(layout, t))


def marginal_check(layout: GenomeLayout, t: int, window: LinkSet) -> float:
    """Largest gap between the chain run on ``window`` and the full chain marginalised to it."""
    direct = exact_distribution(layout, t, window)
    full = exact_distribution(layout, t)
    summed = np.bincount(np.arange(len(full)) & window, weights=full, minlength=len(full))
    return float(max(abs(direct[G] - summed[G]) for G in subsets(window)))


def backward_decomposition_gap(layout: GenomeLayout, tau: int) -> float:
    """Largest violation of the first-step decomposition of P(F_{tau+1} = G)."""
    n = layout.n_links
    now = exact_distribution(layout, tau)
    nxt = exact_distribution(layout, tau + 1)
    lam = 1 - sum(layout.rho)
    left = [exact_distribution(layout, tau, below(a)) for a in range(n)]
    right = [exact_distribution(layout, tau, above(a, n)) for a in range(n)]
    worst = 0.0
    for G in range(1 << n):
        rhs = lam * now[G]
        for a in links_of(G):
            rhs += layout.rho[a] * left[a][G & below(a)] * right[a][G & above(a, n)]
        worst = max(worst, abs(rhs - nxt[G]))
    return worst


# -- Monte Carlo ---------------------------------------------------------------

def simulate_cut_times(layout: GenomeLayout, t: int, rng: np.random.Generator,
                       count: int) -> np.ndarray:
    """``count`` independent paths; returns an int array (count, n_links) of cut times.

    Entry ``[r, i]`` is the step (1..t) at which link i was cut, or -1.
    """
    n = layout.n_links
    rho = np.asarray(layout.rho, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(rho)])
    cut = np.full((count, n), -1, dtype=np.int16)
    rows = np.arange(count)
    for step in range(1, t + 1):
        u = rng.random((count, n))
        is_cut = cut >= 0
        start = np.zeros((count, n), dtype=np.intp)
        for i in range(1, n):
            start[:, i] = np.where(is_cut[:, i - 1], i, start[:, i - 1])
        new = np.zeros((count, n), dtype=bool)
        for i in range(n):
            s = start[:, i]
            v = u[rows, s] + cum[s]
            new[:, i] = ~is_cut[:, i] & (cum[i] <= v) & (v < cum[i + 1])
        cut[new] = step
    return cut


def _bitmasks(cut: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(cut.shape[1], dtype=np.int64)
    return ((cut >= 0).astype(np.int64) * weights).sum(axis=1)


def mc_distribution(layout: GenomeLayout, t: int, replicates: int, seed: int,
                    workers: int | None = None, block: int = BLOCK):
    """Empirical law of F_t over ``replicates`` paths.

    Returns ``(freq, stderr)``, arrays indexed by link bitmask; stderr is the
    binomial standard error of each cell.
    """
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")
    size = 1 << layout.n_links

    def run(b, start, count):
        cut = simulate_cut_times(layout, t, stream(seed, 0x5E6, b), count)
        return np.bincount(_bitmasks(cut), minlength=size)

    counts = np.sum(map_blocks(run, replicates, workers, block), axis=0)
    freq = counts / replicates
    stderr = np.sqrt(freq * (1 - freq) / replicates)
    return freq, stderr


def mc_trajectories(layout: GenomeLayout, t: int, replicates: int, seed: int,
                    workers: int | None = None, block: int = BLOCK) -> np.ndarray:
    """Cut-time array for all replicates, block-seeded like :func:`mc_distribution`."""
    def run(b, start, count):
        return simulate_cut_times(layout, t, stream(seed, 0x5E6, b), count)

    return np.concatenate(map_blocks(run, replicates, workers, block), axis=0)
