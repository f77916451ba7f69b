"""Deterministic infinite-population dynamics and the coefficient recursion.

``p_t = sum_G a_G(t) R_G(p_0)``; the coefficients ``a_G(t)`` do not depend on
``p_0`` and are held in a :class:`CoefficientTable` indexed by link bitmask.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import FeasibilityError, ValidationError
from .genome import GenomeLayout, LinkSet, above, below, linkset_from_json, linkset_to_json
from .measures import TypeDistribution, composite_recombinator, recombinator

TABLE_TOL = 1e-10
EXACT_MAX_LINKS = 4
EXACT_MAX_T = 10


@dataclass(frozen=True)
class CoefficientTable:
    """``values[G]`` is a_G(t) for every link bitmask G.

    ``values`` is a float array, or an object array of ``Fraction`` in exact mode.
    """

    layout: GenomeLayout
    t: int
    values: np.ndarray

    def __post_init__(self):
        if self.t < 0:
            raise ValidationError(f"negative time {self.t}")
        if len(self.values) != 1 << self.layout.n_links:
            raise ValidationError(
                f"table needs {1 << self.layout.n_links} entries, got {len(self.values)}")
        if self.exact:
            ok = all(v >= 0 for v in self.values) and sum(self.values) == 1
        else:
            ok = np.all(self.values >= 0) and abs(float(self.values.sum()) - 1) <= TABLE_TOL
        if not ok:
            raise ValidationError(f"coefficient table at t={self.t} is not a probability vector")

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    def __getitem__(self, G: LinkSet):
        return self.values[G]

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.values]) if self.exact else self.values

    def max_gap(self, other: "CoefficientTable") -> float:
        return float(np.max(np.abs(self.as_float() - other.as_float())))

    def to_json(self, stderr=None) -> dict:
        entries = []
        for G, v in enumerate(self.values):
            e = {"links": linkset_to_json(G), "value": float(v)}
            if self.exact:
                e["exact"] = str(v)
            if stderr is not None:
                e["stderr"] = float(stderr[G])
            entries.append(e)
        return {"t": self.t, "entries": entries}

    @classmethod
    def from_json(cls, layout: GenomeLayout, obj: dict) -> "CoefficientTable":
        values = np.zeros(1 << layout.n_links)
        for e in obj["entries"]:
            values[linkset_from_json(e["links"], layout.n_links)] = e["value"]
        return cls(layout, int(obj["t"]), values)


def initial_table(layout: GenomeLayout, exact: bool = False) -> CoefficientTable:
    if exact:
        values = np.array([Fraction(0)] * (1 << layout.n_links), dtype=object)
        values[0] = Fraction(1)
    else:
        values = np.zeros(1 << layout.n_links)
        values[0] = 1.0
    return CoefficientTable(layout, 0, values)


def phi_step(p: TypeDistribution, layout: GenomeLayout) -> TypeDistribution:
    """One generation of the deterministic recombination dynamics."""
    p.space.check_layout(layout)
    rho = [float(r) for r in layout.rho]
    w = (1.0 - sum(rho)) * p.weights
    for alpha, r in enumerate(rho):
        w = w + r * recombinator(p, alpha).weights
    return TypeDistribution(p.space, w)


def evolve(p0: TypeDistribution, layout: GenomeLayout, t: int, trajectory: bool = False):
    """``Phi^t(p0)``; with ``trajectory=True`` the list ``[p_0, ..., p_t]``."""
    if t < 0:
        raise ValidationError(f"negative time {t}")
    p = p0
    path = [p]
    for _ in range(t):
        p = phi_step(p, layout)
        path.append(p)
    return path if trajectory else p


def _marginal_sums(values: np.ndarray, mask: int) -> np.ndarray:
    # out[A] = sum of values[B] over B with B & mask == A
    idx = np.arange(len(values)) & mask
    if values.dtype == object:
        out = np.array([Fraction(0)] * len(values), dtype=object)
        for B, v in enumerate(values):
            out[idx[B]] += v
        return out
    return np.bincount(idx, weights=values, minlength=len(values))


def recursion_step(table: CoefficientTable, stable: bool = True) -> CoefficientTable:
    """Advance the coefficient table by one generation.

    For every link alpha the two bracketed subset sums of the recursion depend
    on G only through ``G_<alpha`` resp. ``G_>alpha``, so they are tabulated once
    per alpha by bucketing all 2^n entries.

    Each bracket is a marginal law of the table and so sums to the table total,
    which is 1. Taken literally in floating point the map amplifies any error
    in that total by ``1 + sum(rho)`` per step; with ``stable=True`` (ignored
    in exact mode) the brackets are divided by their own totals, which leaves
    the values unchanged on the simplex and damps the error by ``lambda_empty``.
    """
    layout = table.layout
    n = layout.n_links
    a = table.values
    lam_empty = 1 - sum(layout.rho)
    new = lam_empty * a
    G = np.arange(1 << n)
    for alpha, r in enumerate(layout.rho):
        lo, hi = below(alpha), above(alpha, n)
        left = _marginal_sums(a, lo)   # sum over H subset of L_>=alpha of a[G_<alpha | H]
        right = _marginal_sums(a, hi)  # sum over K subset of L_<=alpha of a[K | G_>alpha]
        if stable and not table.exact:
            left = left / left.sum()
            right = right / right.sum()
        has = (G >> alpha & 1).astype(bool)
        contrib = r * left[G[has] & lo] * right[G[has] & hi]
        new[has] = new[has] + contrib
    return CoefficientTable(layout, table.t + 1, new)


def coefficients_by_recursion(layout: GenomeLayout, t: int, exact: bool = False,
                              trajectory: bool = False, stable: bool = True):
    """Coefficient table at time ``t`` (or all tables ``0..t``).

    ``exact=True`` runs the recursion in rational arithmetic, with each
    crossover probability read as the decimal it prints as.
    """
    if t < 0:
        raise ValidationError(f"negative time {t}")
    if exact:
        if layout.n_links > EXACT_MAX_LINKS or t > EXACT_MAX_T:
            raise FeasibilityError(
                f"exact mode supports n_links <= {EXACT_MAX_LINKS} and t <= {EXACT_MAX_T}")
        layout = layout.exact()
    table = initial_table(layout, exact)
    path = [table]
    for _ in range(t):
        table = recursion_step(table, stable)
        path.append(table)
    return path if trajectory else table


def reconstruct(p0: TypeDistribution, table: CoefficientTable) -> TypeDistribution:
    """The mixture ``sum_G a_G R_G(p0)``."""
    p0.space.check_layout(table.layout)
    a = table.as_float()
    w = np.zeros(p0.space.size)
    for G, coeff in enumerate(a):
        if coeff != 0.0:
            w += coeff * composite_recombinator(p0, G).weights
    return TypeDistribution(p0.space, w)


def a_empty(layout: GenomeLayout, t: int) -> float:
    """Closed form for G = {}: no link is ever cut."""
    return (1 - sum(layout.rho)) ** t


def single_crossover_table(layout: GenomeLayout) -> dict:
    """Nonzero entries of the table after one generation."""
    out = {0: 1 - sum(layout.rho)}
    for alpha, r in enumerate(layout.rho):
        out[1 << alpha] = r
    return out

