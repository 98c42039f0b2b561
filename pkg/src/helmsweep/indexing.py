"""Checkerboard lattice indexing: multi-indices, interface pairs, diagonal groups.

A rectangular domain is split into an N1 x N2 lattice of subdomains addressed
by multi-indices (i1, i2).  Every interior interface carries two directed
pairs (owner, neighbor); the pair numbered m(owner, neighbor) owns the Robin
trace incoming to `owner` across that interface.  Pairs are enumerated in a
fixed lexicographic order so that all blocks owned by one diagonal group
|i|_1 = i1 + i2 are contiguous, which is what the sweeping preconditioners
exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


class MultiIndex(NamedTuple):
    """Subdomain address in the lattice, 1-based columns/rows."""

    i1: int
    i2: int

    @property
    def group(self) -> int:
        """Diagonal group |i|_1 = i1 + i2."""
        return self.i1 + self.i2


class DirectedPair(NamedTuple):
    """Ordered interface pair; block m(owner, neighbor) is the trace incoming
    to `owner` across the shared interface."""

    owner: MultiIndex
    neighbor: MultiIndex


def lex_less_multi(a: MultiIndex, b: MultiIndex) -> bool:
    """Strict lexicographic order on multi-indices: first |.|_1, then column."""
    return (a.i1 + a.i2, a.i1) < (b.i1 + b.i2, b.i1)


def lex_less_pair(p: DirectedPair, q: DirectedPair) -> bool:
    """Strict lexicographic order on directed pairs: owner first, then neighbor."""
    return _pair_key(p) < _pair_key(q)


def _multi_key(a: MultiIndex) -> tuple[int, int]:
    return (a.i1 + a.i2, a.i1)


def _pair_key(p: DirectedPair) -> tuple[tuple[int, int], tuple[int, int]]:
    return (_multi_key(p.owner), _multi_key(p.neighbor))


@dataclass(frozen=True)
class GroupWindow:
    """One block of diagonal groups swept by a partial sweep.

    `lo`..`hi` is an inclusive range of |i|_1 values, clipped to the valid
    group span.  Consecutive same-kind windows overlap in exactly one group
    (the seam).
    """

    kind: str  # "lower" | "upper"
    block_index: int  # 1-based
    lo: int
    hi: int

    @property
    def groups(self) -> range:
        return range(self.lo, self.hi + 1)

    def __len__(self) -> int:
        return self.hi - self.lo + 1


class Partition:
    """Immutable checkerboard partition with its directed-interface numbering.

    Attributes:
        n1, n2: lattice dimensions.
        subdomains: all multi-indices, sorted by the multi-index order.
        neighbors: D_i, the edge-adjacent lattice neighbors of each subdomain,
            sorted by the multi-index order.
        pairs: all directed pairs in m-order; pairs[k-1] has ordinal k.
        n_interfaces: N_e = 2*N1*N2 - N1 - N2 undirected interior interfaces.
        n_groups: N_g = N1 + N2 - 1 diagonal groups; group indices |i|_1 span
            [2, N_g + 1].
        groups: map |i|_1 -> member subdomains.
    """

    def __init__(self, n1: int, n2: int):
        if n1 < 1 or n2 < 1:
            raise ValueError(f"partition dimensions must be positive, got {n1}x{n2}")
        self.n1 = n1
        self.n2 = n2

        subdomains = [MultiIndex(i1, i2) for i2 in range(1, n2 + 1) for i1 in range(1, n1 + 1)]
        subdomains.sort(key=_multi_key)
        self.subdomains: tuple[MultiIndex, ...] = tuple(subdomains)

        self.neighbors: dict[MultiIndex, tuple[MultiIndex, ...]] = {}
        for i in self.subdomains:
            adj = []
            for di1, di2 in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                j = MultiIndex(i.i1 + di1, i.i2 + di2)
                if 1 <= j.i1 <= n1 and 1 <= j.i2 <= n2:
                    adj.append(j)
            adj.sort(key=_multi_key)
            self.neighbors[i] = tuple(adj)

        pairs = [DirectedPair(i, j) for i in self.subdomains for j in self.neighbors[i]]
        pairs.sort(key=_pair_key)
        self.pairs: tuple[DirectedPair, ...] = tuple(pairs)
        self._ordinal = {p: k for k, p in enumerate(self.pairs, start=1)}

        self.n_interfaces = 2 * n1 * n2 - n1 - n2
        self.n_groups = n1 + n2 - 1
        assert len(self.pairs) == 2 * self.n_interfaces

        self.groups: dict[int, tuple[MultiIndex, ...]] = {}
        for i in self.subdomains:
            self.groups.setdefault(i.group, ())
            self.groups[i.group] += (i,)

    @property
    def n_subdomains(self) -> int:
        return self.n1 * self.n2

    @property
    def group_span(self) -> range:
        """Valid |i|_1 values, [2, N_g + 1]."""
        return range(2, self.n_groups + 2)

    def m_index(self, pair: DirectedPair) -> int:
        """Ordinal of a directed pair, 1..2*N_e, order-isomorphic to the pair order."""
        try:
            return self._ordinal[DirectedPair(MultiIndex(*pair[0]), MultiIndex(*pair[1]))]
        except (KeyError, TypeError):
            raise ValueError(f"{pair!r} is not a directed interface of this {self.n1}x{self.n2} partition") from None

    def m_invert(self, k: int) -> DirectedPair:
        """Directed pair with ordinal k; inverse of m_index."""
        if not 1 <= k <= len(self.pairs):
            raise ValueError(f"ordinal {k} out of range 1..{len(self.pairs)}")
        return self.pairs[k - 1]

    def __repr__(self) -> str:
        return f"Partition({self.n1}x{self.n2}, N_e={self.n_interfaces}, N_g={self.n_groups})"


def build_partition(n1: int, n2: int) -> Partition:
    return Partition(n1, n2)


def build_windows(partition: Partition, kind: str) -> list[GroupWindow]:
    """Overlapping group windows for the partial sweeps of one direction.

    Lower windows march up the diagonals, block i covering
    2 + (i-1)*N1 <= |i|_1 <= 2 + i*N1; upper windows are the mirrored ranges
    counted down from the top group.  The final block is clipped to the valid
    span, keeping the one-group overlap at every interior seam.
    """
    if kind not in ("lower", "upper"):
        raise ValueError(f"window kind must be 'lower' or 'upper', got {kind!r}")
    n1 = partition.n1
    ng = partition.n_groups
    lo_all, hi_all = 2, ng + 1
    p = math.ceil((ng - 1) / n1)
    windows = []
    for i in range(1, p + 1):
        if kind == "lower":
            lo, hi = 2 + (i - 1) * n1, 2 + i * n1
        else:
            lo, hi = (1 + ng) - i * n1, (1 + ng) - (i - 1) * n1
        windows.append(GroupWindow(kind, i, max(lo, lo_all), min(hi, hi_all)))
    return windows
