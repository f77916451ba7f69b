"""Ancestral recombination trees (ARTs).

A tree topology on a link set G is a full binary tree whose internal nodes are
the links of G in binary-search-tree order: the first link cut (``gamma``)
splits G into the links below and above it, each organised the same way.
Its probability under the segmentation process has a closed form as a signed
sum over subtree decompositions; summing over all topologies on G gives a_G(t).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Iterator

import numpy as np

from .errors import FeasibilityError, ValidationError
from .forward import CoefficientTable
from .genome import (GenomeLayout, LinkSet, bounds, interval, link_label, links_of, linkset,
                     parse_link, segments_of, size, subsets)

GAP_TOL = 1e-14
ART_MAX_LINKS = 8


@dataclass(frozen=True)
class TreeTopology:
    """Recursive form: ``gamma`` with optional left/right subtrees.

    ``gamma is None`` is the empty tree (no internal nodes).
    """

    gamma: int | None
    left: "TreeTopology | None" = None
    right: "TreeTopology | None" = None

    def __post_init__(self):
        if self.gamma is None:
            if self.left is not None or self.right is not None:
                raise ValidationError("the empty tree has no children")
            return
        for side in ("left", "right"):
            child = getattr(self, side)
            if child is not None and child.is_empty:
                object.__setattr__(self, side, None)
        if self.left is not None and self.left.nodes >> self.gamma:
            raise ValidationError("left subtree must lie below its branching point")
        if self.right is not None and self.right.nodes & ((1 << (self.gamma + 1)) - 1):
            raise ValidationError("right subtree must lie above its branching point")

    @property
    def is_empty(self) -> bool:
        return self.gamma is None

    @cached_property
    def nodes(self) -> LinkSet:
        if self.gamma is None:
            return 0
        G = 1 << self.gamma
        for child in (self.left, self.right):
            if child is not None:
                G |= child.nodes
        return G

    @cached_property
    def parent(self) -> dict:
        """Map each node to its ancestor m(alpha); the branching point maps to ``None`` (root)."""
        m = {}

        def walk(t, up):
            if t is None or t.gamma is None:
                return
            m[t.gamma] = up
            walk(t.left, t.gamma)
            walk(t.right, t.gamma)

        walk(self, None)
        return m

    def children(self, alpha: int) -> list[int]:
        return [b for b, up in self.parent.items() if up == alpha]

    def path_to(self, beta: int) -> list[int]:
        """Nodes from ``beta`` up to the branching point, inclusive."""
        out = []
        while beta is not None:
            out.append(beta)
            beta = self.parent[beta]
        return out

    def precedes(self, alpha: int, beta: int) -> bool:
        """``alpha`` lies on the path from the branching point to ``beta`` (weakly)."""
        return alpha in self.path_to(beta)

    def subtree(self, alpha: int) -> "TreeTopology":
        t = self
        while t.gamma != alpha:
            t = t.left if alpha < t.gamma else t.right
        return t

    def to_json(self):
        if self.gamma is None:
            return {}
        out = {"gamma": link_label(self.gamma)}
        if self.left is not None:
            out["left"] = self.left.to_json()
        if self.right is not None:
            out["right"] = self.right.to_json()
        return out

    @classmethod
    def from_json(cls, obj) -> "TreeTopology":
        if not obj:
            return EMPTY
        return cls(parse_link(obj["gamma"]),
                   cls.from_json(obj["left"]) if "left" in obj else None,
                   cls.from_json(obj["right"]) if "right" in obj else None)

    def __str__(self):
        if self.gamma is None:
            return "()"
        parts = [link_label(self.gamma)]
        if self.left is not None or self.right is not None:
            parts.append(str(self.left) if self.left else "-")
            parts.append(str(self.right) if self.right else "-")
        return "(" + " ".join(parts) + ")"


EMPTY = TreeTopology(None)


@dataclass(frozen=True)
class SubtreeDecomposition:
    H: LinkSet
    node_sets: dict = field(compare=False)

    def parts(self) -> dict:
        """Node sets of the subtrees rooted at the elements of H; these partition G."""
        return {h: self.node_sets[h] for h in links_of(self.H)}


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def _enumerate(nodes: tuple) -> Iterator[TreeTopology | None]:
    if not nodes:
        yield None
        return
    for k, gamma in enumerate(nodes):
        for left in _enumerate(nodes[:k]):
            for right in _enumerate(nodes[k + 1:]):
                yield TreeTopology(gamma, left, right)


def enumerate_topologies(G: LinkSet) -> list[TreeTopology]:
    """All tree topologies on ``G``, ordered by branching point, then left, then right."""
    if G == 0:
        return [EMPTY]
    return list(_enumerate(tuple(links_of(G))))


def topology_from_cut_times(cut_times) -> TreeTopology:
    """Cartesian tree of the (link, cut time) pairs of one segmentation path."""
    cut = [(i, c) for i, c in enumerate(cut_times) if c >= 0]

    def build(items):
        if not items:
            return None
        k = min(range(len(items)), key=lambda j: items[j][1])
        first = items[k][1]
        if sum(1 for _, c in items if c == first) > 1:
            raise ValidationError("two links of one segment cut in the same step")
        return TreeTopology(items[k][0], build(items[:k]), build(items[k + 1:]))

    return build(cut) or EMPTY


# -- lambda, decompositions, g and f -------------------------------------------

def lam(layout: GenomeLayout, G: LinkSet, window: LinkSet | None = None) -> float:
    """Probability that no segment of ``window \\ G`` is cut in one step."""
    out = 1.0
    for seg in segments_of(layout, G, window):
        out *= 1.0 - sum(layout.rho[i] for i in links_of(seg))
    return out


def node_sets(T: TreeTopology, H: LinkSet) -> dict:
    """G_alpha(H) for every node alpha.

    beta belongs to G_alpha(H) when alpha is weakly above beta and no element
    h of H with alpha strictly above h is weakly above beta. With h allowed to
    equal beta, the sets {G_h(H)}_{h in H} partition G.
    """
    out = {}
    for alpha in links_of(T.nodes):
        members = 0
        for beta in links_of(T.subtree(alpha).nodes):
            path = T.path_to(beta)            # beta, m(beta), ..., gamma
            between = path[:path.index(alpha)]  # nodes strictly below alpha, down to beta
            if not any(H >> h & 1 for h in between):
                members |= 1 << beta
        out[alpha] = members
    return out


def subtree_decomposition(T: TreeTopology, H: LinkSet) -> SubtreeDecomposition:
    if T.is_empty or not H >> T.gamma & 1:
        raise ValidationError("H must contain the initial branching point")
    if H & ~T.nodes:
        raise ValidationError("H must be a subset of the tree's nodes")
    return SubtreeDecomposition(H, node_sets(T, H))


def node_segment(T: TreeTopology, alpha: int, window: LinkSet | None = None,
                 layout: GenomeLayout | None = None) -> LinkSet:
    """The segment that receives its next cut at ``alpha``.

    It is the segment of the window, cut at all strict ancestors of ``alpha``,
    that contains ``alpha``.
    """
    if not T.nodes >> alpha & 1:
        raise ValidationError(f"link {alpha} is not a node of the tree")
    if window is None:
        if layout is None:
            raise ValidationError("need a window or a layout")
        window = layout.full
    lo, hi = bounds(window)
    ancestors = linkset(T.path_to(alpha)[1:])
    start, stop = lo, hi
    for a in links_of(ancestors):
        if a < alpha:
            start = max(start, a + 1)
        else:
            stop = min(stop, a)
    return interval(start, stop)


def _checked_window(layout: GenomeLayout, T: TreeTopology, window: LinkSet | None) -> LinkSet:
    if window is None:
        window = layout.full
    bounds(layout.check(window))
    if T.nodes & ~window:
        raise ValidationError("tree nodes must lie inside the window")
    return window


def g_value(layout: GenomeLayout, T: TreeTopology, alpha: int, H: LinkSet,
            window: LinkSet | None = None, _sets: dict | None = None) -> float:
    window = _checked_window(layout, T, window)
    sets = _sets if _sets is not None else subtree_decomposition(T, H).node_sets
    I = node_segment(T, alpha, window)
    gap = lam(layout, sets[alpha], I) - lam(layout, 0, I)
    if gap < GAP_TOL:
        raise ValidationError(f"degenerate eigenvalue gap {gap!r} at link {link_label(alpha)}")
    return layout.rho[alpha] / gap


def f_value(layout: GenomeLayout, T: TreeTopology, H: LinkSet,
            window: LinkSet | None = None) -> float:
    sets = subtree_decomposition(T, H).node_sets
    out = 1.0
    for alpha in links_of(T.nodes):
        out *= g_value(layout, T, alpha, H, window, sets)
    return out


def tree_terms(layout: GenomeLayout, T: TreeTopology, tau: int,
               window: LinkSet | None = None) -> list[dict]:
    """The signed summands of the closed form, one per H containing gamma."""
    window = _checked_window(layout, T, window)
    lam0 = lam(layout, 0, window)
    others = T.nodes & ~(1 << T.gamma)
    terms = []
    for rest in subsets(others):
        H = rest | (1 << T.gamma)
        sets = subtree_decomposition(T, H).node_sets
        f = 1.0
        for alpha in links_of(T.nodes):
            f *= g_value(layout, T, alpha, H, window, sets)
        sign = -1.0 if size(H) % 2 == 0 else 1.0
        bracket = lam(layout, sets[T.gamma], window) ** tau - lam0 ** tau
        terms.append({"H": H, "sign": sign, "bracket": bracket, "f": f,
                      "value": sign * bracket * f})
    return terms


def tree_probability(layout: GenomeLayout, T: TreeTopology, tau: int,
                     window: LinkSet | None = None) -> float:
    """Probability that the segmentation path up to ``tau`` has topology ``T``."""
    if tau < 0:
        raise ValidationError(f"negative time {tau}")
    window = _checked_window(layout, T, window)
    if T.is_empty:
        return lam(layout, 0, window) ** tau
    return sum(term["value"] for term in tree_terms(layout, T, tau, window))


def coefficient_via_art(layout: GenomeLayout, G: LinkSet, t: int) -> float:
    layout.check(G)
    return sum(tree_probability(layout, T, t) for T in enumerate_topologies(G))


def coefficients_via_art(layout: GenomeLayout, t: int) -> CoefficientTable:
    if layout.n_links > ART_MAX_LINKS:
        raise FeasibilityError(f"ART method supports at most {ART_MAX_LINKS} links")
    values = np.array([coefficient_via_art(layout, G, t) for G in range(1 << layout.n_links)])
    # the closed form is a signed sum; round-off can leave -1e-17 where the truth is 0
    values[np.abs(values) < 1e-15] = 0.0
    return CoefficientTable(layout, t, values)


# -- explicit branch-length sums -----------------------------------------------

def ultrametric_path_sum(layout: GenomeLayout, T: TreeTopology, tau: int,
                         window: LinkSet | None = None) -> float:
    """Sum over all branch-length assignments of ``T`` fitting in ``tau`` steps.

    Dynamic programme over (subtree, remaining steps): a subtree rooted at
    gamma on segment I waits k steps with no cut in I, cuts at gamma, then
    its two sides evolve independently on the sub-segments for the rest.
    """
    window = _checked_window(layout, T, window)
    if tau < 0:
        raise ValidationError(f"negative time {tau}")
    return float(_path_table(layout, T, window, tau)[tau])


def _path_table(layout: GenomeLayout, T: TreeTopology | None, seg: LinkSet, tau: int) -> np.ndarray:
    # q[s] = P(path restricted to seg shows topology T after s steps), s = 0..tau
    lam0 = lam(layout, 0, seg)
    powers = lam0 ** np.arange(tau + 1)
    if T is None or T.is_empty:
        return powers
    lo, hi = bounds(seg)
    left = _path_table(layout, T.left, interval(lo, T.gamma), tau)
    right = _path_table(layout, T.right, interval(T.gamma + 1, hi), tau)
    joint = left * right
    q = np.zeros(tau + 1)
    for s in range(1, tau + 1):
        # sum_{k=0}^{s-1} lam0^k * rho * joint[s-1-k]
        q[s] = layout.rho[T.gamma] * np.dot(powers[:s], joint[s - 1::-1])
    return q


def ultrametric_path_sum_literal(layout: GenomeLayout, T: TreeTopology, tau: int,
                                 window: LinkSet | None = None) -> float:
    """Explicit nested sums over waiting times, for trees with at most two nodes."""
    window = _checked_window(layout, T, window)
    n_nodes = size(T.nodes)
    if n_nodes > 2:
        raise FeasibilityError("literal summation is only provided for up to two nodes")
    lam_w = lam(layout, 0, window)
    if n_nodes == 0:
        return lam_w ** tau
    gamma = T.gamma
    lam_g = lam(layout, 1 << gamma, window)
    r_g = layout.rho[gamma]
    if n_nodes == 1:
        return sum(lam_w ** i * r_g * lam_g ** (tau - 1 - i) for i in range(tau))
    beta = links_of(T.nodes & ~(1 << gamma))[0]
    lam_both = lam(layout, T.nodes, window)
    # segment on the other side of gamma must stay uncut when beta is cut
    other = [s for s in segments_of(layout, 1 << gamma, window) if not s >> beta & 1]
    side = lam(layout, 0, other[0]) if other else 1.0
    total = 0.0
    for k in range(tau - 1):
        for i in range(tau - 1 - k):
            total += lam_w ** k * lam_g ** i * lam_both ** (tau - 2 - k - i)
    return r_g * layout.rho[beta] * side * total


def geometric_sum(a: float, b: float, n: int) -> float:
    """``sum_{i=0}^{n} a^i b^(n-i)`` in closed form, with the equal-ratio branch."""
    if a == b:
        return (n + 1) * a ** n
    return (b ** (n + 1) - a ** (n + 1)) / (b - a)
