"""Set partitions, pairings and permutations with their crossing statistics.

Partitions are stored as sorted tuples of sorted blocks over ``1..m``.  All
enumerators are generators yielding partitions in lexicographic order of the
canonical block encoding; use :func:`materialize` to get a list.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Hashable, Iterator, Sequence

MATERIALIZE_LIMIT = 16


@dataclass(frozen=True)
class Partition:
    m: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        object.__setattr__(self, "blocks", blocks)
        seen = [i for b in blocks for i in b]
        if any(len(b) == 0 for b in blocks):
            raise ValueError("empty block")
        if sorted(seen) != list(range(1, self.m + 1)):
            raise ValueError(f"blocks {blocks} do not partition 1..{self.m}")

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]]) -> "Partition":
        m = sum(len(b) for b in blocks)
        return cls(m, tuple(tuple(b) for b in blocks))

    @property
    def pairs(self) -> tuple[tuple[int, ...], ...]:
        return tuple(b for b in self.blocks if len(b) == 2)

    @property
    def singletons(self) -> tuple[int, ...]:
        return tuple(b[0] for b in self.blocks if len(b) == 1)

    def is_pairing(self) -> bool:
        return all(len(b) == 2 for b in self.blocks)

    def is_p12(self) -> bool:
        return all(len(b) <= 2 for b in self.blocks)

    def max_block(self) -> int:
        return max((len(b) for b in self.blocks), default=0)

    def reversed(self) -> "Partition":
        """Image under the relabeling ``i -> m + 1 - i``."""
        m = self.m
        return Partition(m, tuple(tuple(m + 1 - i for i in b) for b in self.blocks))

    def __len__(self):
        return len(self.blocks)

    def __repr__(self):
        inner = ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
        return f"Partition({{{inner}}})"


@dataclass(frozen=True)
class Permutation:
    """Bijection of ``1..m``; ``images[i-1]`` is the image of ``i``."""

    images: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValueError(f"{self.images} is not a permutation")

    @property
    def m(self) -> int:
        return len(self.images)


def _pairings(points: tuple[int, ...]) -> Iterator[list[tuple[int, int]]]:
    if not points:
        yield []
        return
    first, rest = points[0], points[1:]
    for k, partner in enumerate(rest):
        remaining = rest[:k] + rest[k + 1 :]
        for tail in _pairings(remaining):
            yield [(first, partner)] + tail


def enumerate_pair_partitions(m: int) -> Iterator[Partition]:
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m % 2:
        return
    for blocks in _pairings(tuple(range(1, m + 1))):
        yield Partition(m, tuple(blocks))


def _p12(points: tuple[int, ...]) -> Iterator[list[tuple[int, ...]]]:
    if not points:
        yield []
        return
    first, rest = points[0], points[1:]
    # {first} as a singleton sorts before {first, x}
    for tail in _p12(rest):
        yield [(first,)] + tail
    for k, partner in enumerate(rest):
        for tail in _p12(rest[:k] + rest[k + 1 :]):
            yield [(first, partner)] + tail


def enumerate_p12(m: int) -> Iterator[Partition]:
    """Partitions of ``1..m`` into singletons and pairs."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    for blocks in _p12(tuple(range(1, m + 1))):
        yield Partition(m, tuple(blocks))


def enumerate_noncrossing_pair_partitions(m: int) -> Iterator[Partition]:
    for p in enumerate_pair_partitions(m):
        if crossings(p) == 0:
            yield p


def enumerate_set_partitions(m: int) -> Iterator[Partition]:
    """All set partitions of ``1..m`` (Bell many); sorted eagerly, so keep ``m`` small."""
    def rec(points):
        if not points:
            yield []
            return
        first, rest = points[0], points[1:]
        for r in range(len(rest) + 1):
            for mates in combinations(rest, r):
                left = tuple(p for p in rest if p not in mates)
                for tail in rec(left):
                    yield [(first,) + mates] + tail

    parts = [Partition(m, tuple(blocks)) for blocks in rec(tuple(range(1, m + 1)))]
    yield from sorted(parts, key=lambda p: p.blocks)


def materialize(it, m: int) -> list[Partition]:
    if m > MATERIALIZE_LIMIT:
        raise ValueError(f"refusing to materialize enumeration for m={m} > {MATERIALIZE_LIMIT}")
    return list(it)


def crossings(sigma: Partition) -> int:
    """Crossing count of a partition into singletons and pairs.

    Two pairs ``{a,b}``, ``{c,d}`` with ``a<c`` cross iff ``a<c<b<d``; a pair
    ``{l,r}`` crosses a singleton ``{i}`` iff ``l<i<r``.
    """
    if not sigma.is_p12():
        raise ValueError("crossings is only defined for blocks of size <= 2")
    pairs = sigma.pairs
    total = 0
    for (a, b), (c, d) in combinations(pairs, 2):
        if a < c < b < d or c < a < d < b:
            total += 1
    for i in sigma.singletons:
        total += sum(1 for l, r in pairs if l < i < r)
    return total


def inversions(pi: Permutation | Sequence[int]) -> int:
    images = pi.images if isinstance(pi, Permutation) else tuple(pi)
    return sum(1 for i, j in combinations(range(len(images)), 2) if images[i] > images[j])


def classify_indices(labels: Sequence[Hashable]) -> Partition:
    """The kernel partition of a label sequence: positions with equal labels share a block."""
    if len(labels) == 0:
        raise ValueError("need a nonempty label list")
    groups: dict = {}
    for pos, lab in enumerate(labels, start=1):
        groups.setdefault(lab, []).append(pos)
    return Partition(len(labels), tuple(tuple(g) for g in groups.values()))


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def catalan(k: int) -> int:
    return comb(2 * k, k) // (k + 1)


def involution_number(m: int) -> int:
    a, b = 1, 1  # I(0), I(1)
    if m == 0:
        return 1
    for n in range(2, m + 1):
        a, b = b, b + (n - 1) * a
    return b
