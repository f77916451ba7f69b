"""Type spaces, distributions over them, marginals and recombinators.

A distribution over X = X_0 x ... x X_n is stored densely in mixed-radix
order with site 0 the most significant digit, which is exactly C order for
an array of shape ``alphabet_sizes``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import FeasibilityError, ValidationError
from .genome import GenomeLayout, LinkSet, links_of

MAX_TYPES = 1 << 24
NORM_TOL = 1e-9


@dataclass(frozen=True)
class TypeSpace:
    alphabet_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(a) for a in self.alphabet_sizes)
        object.__setattr__(self, "alphabet_sizes", sizes)
        if not sizes:
            raise ValidationError("type space needs at least one site")
        if any(a < 1 for a in sizes):
            raise ValidationError(f"alphabet sizes must be >= 1, got {sizes}")
        if int(np.prod(sizes, dtype=object)) > MAX_TYPES:
            raise FeasibilityError(f"type space of size {np.prod(sizes, dtype=object)} exceeds 2^24")

    @classmethod
    def binary(cls, n_sites: int) -> "TypeSpace":
        return cls((2,) * n_sites)

    @property
    def n_sites(self) -> int:
        return len(self.alphabet_sizes)

    @property
    def size(self) -> int:
        return int(np.prod(self.alphabet_sizes))

    def index(self, x: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(x), self.alphabet_sizes))

    def type_of(self, index: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(index, self.alphabet_sizes))

    def sub(self, sites: Sequence[int]) -> "TypeSpace":
        return TypeSpace(tuple(self.alphabet_sizes[s] for s in sites))

    def check_layout(self, layout: GenomeLayout):
        if self.n_sites != layout.n_sites:
            raise ValidationError(
                f"type space has {self.n_sites} sites but layout has {layout.n_sites}")


class TypeDistribution:
    """Immutable probability vector over a :class:`TypeSpace`."""

    __slots__ = ("space", "weights")

    def __init__(self, space: TypeSpace, weights, *, tol: float = NORM_TOL):
        w = np.array(weights, dtype=float).reshape(-1)
        if w.size != space.size:
            raise ValidationError(f"expected {space.size} weights, got {w.size}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("weights must be finite and nonnegative")
        total = w.sum()
        if abs(total - 1.0) > tol:
            raise ValidationError(f"weights sum to {total!r}, not 1")
        w.setflags(write=False)
        self.space = space
        self.weights = w

    @classmethod
    def point_mass(cls, space: TypeSpace, x: Sequence[int]) -> "TypeDistribution":
        w = np.zeros(space.size)
        w[space.index(x)] = 1.0
        return cls(space, w)

    @classmethod
    def uniform(cls, space: TypeSpace) -> "TypeDistribution":
        return cls(space, np.full(space.size, 1.0 / space.size))

    @classmethod
    def product(cls, site_marginals: Sequence[Sequence[float]]) -> "TypeDistribution":
        margs = [np.asarray(m, dtype=float) for m in site_marginals]
        space = TypeSpace(tuple(len(m) for m in margs))
        return cls(space, _outer(margs).reshape(-1))

    @classmethod
    def random(cls, space: TypeSpace, rng: np.random.Generator, concentration: float = 1.0):
        return cls(space, rng.dirichlet(np.full(space.size, concentration)))

    @property
    def tensor(self) -> np.ndarray:
        return self.weights.reshape(self.space.alphabet_sizes)

    def __repr__(self):
        return f"TypeDistribution({self.space.alphabet_sizes}, {self.weights!r})"

    def sup_distance(self, other: "TypeDistribution") -> float:
        return float(np.max(np.abs(self.weights - other.weights)))


def _outer(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Outer product of arrays, axes concatenated in order."""
    return reduce(np.multiply.outer, factors)


def marginal_tensor(p: TypeDistribution, sites: Sequence[int]) -> np.ndarray:
    """Marginal on ``sites`` (sorted), as a tensor with one axis per site."""
    sites = sorted(set(sites))
    drop = tuple(s for s in range(p.space.n_sites) if s not in sites)
    return p.tensor.sum(axis=drop) if drop else p.tensor


def marginal(p: TypeDistribution, J: Sequence[int]) -> TypeDistribution:
    """Distribution of the letters at the sites ``J`` (taken in increasing order)."""
    J = sorted(set(J))
    if not J:
        raise ValidationError("marginal over an empty site set")
    if J[0] < 0 or J[-1] >= p.space.n_sites:
        raise ValidationError(f"sites {J} out of range")
    return TypeDistribution(p.space.sub(J), marginal_tensor(p, J).reshape(-1))


def _product_over_parts(p: TypeDistribution, parts) -> TypeDistribution:
    # parts are consecutive intervals, so the outer product is already in site order.
    # Each marginal sums to the total mass m; dividing all but the first by m keeps
    # the product at mass m instead of m^k, so round-off is not amplified under iteration.
    factors = [marginal_tensor(p, part) for part in parts]
    factors = factors[:1] + [f / f.sum() for f in factors[1:]]
    return TypeDistribution(p.space, _outer(factors).reshape(-1))


def recombinator(p: TypeDistribution, alpha: int) -> TypeDistribution:
    """Product of the marginals on sites ``0..alpha`` and ``alpha+1..n``."""
    n = p.space.n_sites
    if not 0 <= alpha < n - 1:
        raise ValidationError(f"link {alpha} out of range for {n} sites")
    return _product_over_parts(p, [range(0, alpha + 1), range(alpha + 1, n)])


def composite_recombinator(p: TypeDistribution, G: LinkSet) -> TypeDistribution:
    """R_G(p): product of the marginals over the parts of the partition cut at ``G``."""
    n = p.space.n_sites
    if G < 0 or G >> (n - 1):
        raise ValidationError(f"link set {G:#b} out of range for {n} sites")
    parts, start = [], 0
    for i in links_of(G):
        parts.append(range(start, i + 1))
        start = i + 1
    parts.append(range(start, n))
    return _product_over_parts(p, parts)


def composite_recombinator_sequential(p: TypeDistribution, G: LinkSet) -> TypeDistribution:
    """R_G(p) as a fold of single recombinators; used to cross-check the direct form."""
    for alpha in links_of(G):
        p = recombinator(p, alpha)
    return p


def distribution_from_json(obj: dict, space: TypeSpace | None = None) -> TypeDistribution:
    kind = obj.get("kind")
    if kind == "table":
        if space is None:
            raise ValidationError("table distribution needs alphabet sizes")
        return TypeDistribution(space, obj["weights"])
    if kind == "product":
        p = TypeDistribution.product(obj["site_marginals"])
        if space is not None and p.space != space:
            raise ValidationError(
                f"product marginals give alphabet {p.space.alphabet_sizes}, "
                f"expected {space.alphabet_sizes}")
        return p
    raise ValidationError(f"unknown distribution kind {kind!r}")


def distribution_to_json(p: TypeDistribution) -> dict:
    return {"kind": "table", "alphabet_sizes": list(p.space.alphabet_sizes),
            "weights": [float(w) for w in p.weights]}
