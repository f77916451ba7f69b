"""Sites, links and link subsets.

Links are integer indices ``i`` in ``0 .. n_links - 1``; index ``i`` sits between
sites ``i`` and ``i + 1`` and is printed as the half-integer ``(2i+1)/2``.
Subsets of links (``LinkSet``) are plain ``int`` bitmasks, bit ``i`` standing
for link ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ValidationError

LinkSet = int

# Tolerance on the sum of crossover probabilities.
RHO_SUM_TOL = 1e-12


@dataclass(frozen=True)
class GenomeLayout:
    """Sites ``0..n_sites-1`` with one crossover probability per link."""

    n_sites: int
    rho: tuple

    def __post_init__(self):
        rho = tuple(self.rho)
        object.__setattr__(self, "rho", rho)
        if self.n_sites < 2:
            raise ValidationError(f"need at least 2 sites, got {self.n_sites}")
        if len(rho) != self.n_sites - 1:
            raise ValidationError(
                f"expected {self.n_sites - 1} crossover probabilities, got {len(rho)}")
        if any(not r > 0 for r in rho):
            raise ValidationError("every crossover probability must be > 0")
        if sum(rho) > 1 + RHO_SUM_TOL:
            raise ValidationError(f"crossover probabilities sum to {float(sum(rho))} > 1")

    @classmethod
    def from_rho(cls, rho: Sequence) -> "GenomeLayout":
        return cls(len(rho) + 1, tuple(rho))

    @property
    def n_links(self) -> int:
        return self.n_sites - 1

    @property
    def full(self) -> LinkSet:
        """The set L of all links."""
        return (1 << self.n_links) - 1

    def check(self, G: LinkSet) -> LinkSet:
        if G < 0 or G >> self.n_links:
            raise ValidationError(f"link set {G:#b} has bits outside 0..{self.n_links - 1}")
        return G

    def exact(self) -> "GenomeLayout":
        """Copy with rational crossover probabilities (decimal reading of each float)."""
        return GenomeLayout(self.n_sites, tuple(Fraction(repr(r)) if isinstance(r, float)
                                                else Fraction(r) for r in self.rho))


# -- bit helpers ---------------------------------------------------------------

def links_of(G: LinkSet) -> list[int]:
    """Sorted link indices contained in ``G``."""
    out = []
    i = 0
    while G:
        if G & 1:
            out.append(i)
        G >>= 1
        i += 1
    return out


def linkset(indices: Iterable[int]) -> LinkSet:
    G = 0
    for i in indices:
        G |= 1 << i
    return G


def size(G: LinkSet) -> int:
    return bin(G).count("1")


def below(i: int) -> LinkSet:
    """Mask of links strictly below link ``i``."""
    return (1 << i) - 1


def above(i: int, n_links: int) -> LinkSet:
    """Mask of links strictly above link ``i``."""
    return ((1 << n_links) - 1) & ~((1 << (i + 1)) - 1)


def interval(lo: int, hi: int) -> LinkSet:
    """Contiguous mask of links ``lo .. hi-1`` (empty when ``hi <= lo``)."""
    if hi <= lo:
        return 0
    return ((1 << hi) - 1) & ~((1 << lo) - 1)


def bounds(window: LinkSet) -> tuple[int, int]:
    """``(lo, hi)`` of a contiguous mask, ``(0, 0)`` for the empty one."""
    if window == 0:
        return 0, 0
    lo = (window & -window).bit_length() - 1
    hi = window.bit_length()
    if interval(lo, hi) != window:
        raise ValidationError(f"window {window:#b} is not contiguous")
    return lo, hi


def subsets(mask: LinkSet):
    """All submasks of ``mask`` in increasing numeric order."""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


def link_label(i: int) -> str:
    return f"{2 * i + 1}/2"


def parse_link(token) -> int:
    """Accept an integer index or a half-integer string like ``"3/2"``."""
    if isinstance(token, bool):
        raise ValidationError(f"bad link {token!r}")
    if isinstance(token, int):
        return token
    s = str(token).strip()
    if "/" in s:
        num, den = s.split("/", 1)
        if den.strip() != "2" or int(num) % 2 != 1:
            raise ValidationError(f"bad link label {token!r}")
        return (int(num) - 1) // 2
    return int(s)


def linkset_to_json(G: LinkSet) -> list[str]:
    return [link_label(i) for i in links_of(G)]


def linkset_from_json(items, n_links: int | None = None) -> LinkSet:
    G = linkset(parse_link(x) for x in items)
    if n_links is not None and G >> n_links:
        raise ValidationError(f"links {list(items)} out of range for {n_links} links")
    return G


# -- partitions and segments ---------------------------------------------------

def partition_from_links(layout: GenomeLayout, G: LinkSet) -> tuple[tuple[int, ...], ...]:
    """Cut the site set at every link of ``G``; returns |G|+1 consecutive intervals."""
    layout.check(G)
    parts = []
    start = 0
    for i in links_of(G):
        parts.append(tuple(range(start, i + 1)))
        start = i + 1
    parts.append(tuple(range(start, layout.n_sites)))
    return tuple(parts)


def links_from_partition(layout: GenomeLayout, sigma) -> LinkSet:
    """Inverse of :func:`partition_from_links`.

    ``sigma`` is any collection of site collections. Raises ``ValidationError``
    if it is not a partition of the sites, or if a part is not contiguous
    (message contains "not an ordered partition").
    """
    parts = [sorted(set(p)) for p in sigma]
    seen = sorted(s for p in parts for s in p)
    if any(not p for p in parts) or seen != list(range(layout.n_sites)):
        raise ValidationError("not a partition of the site set")
    G = 0
    for p in parts:
        if p[-1] - p[0] + 1 != len(p):
            raise ValidationError(f"not an ordered partition: part {p} is not contiguous")
        if p[-1] != layout.n_sites - 1:
            G |= 1 << p[-1]
    return G


def segments_of(layout: GenomeLayout, G: LinkSet, window: LinkSet | None = None) -> list[LinkSet]:
    """Maximal contiguous runs of ``window \\ G`` in link order, empty runs dropped."""
    if window is None:
        window = layout.full
    layout.check(window)
    lo, hi = bounds(window)
    if G & ~window:
        raise ValidationError(f"link set {G:#b} is not inside window {window:#b}")
    segs = []
    run = 0
    for i in range(lo, hi):
        if G >> i & 1:
            if run:
                segs.append(run)
            run = 0
        else:
            run |= 1 << i
    if run:
        segs.append(run)
    return segs


def segment_containing(layout: GenomeLayout, G: LinkSet, alpha: int,
                       window: LinkSet | None = None) -> LinkSet:
    for seg in segments_of(layout, G, window):
        if seg >> alpha & 1:
            return seg
    raise ValidationError(f"link {alpha} is not in any segment of {G:#b}")
