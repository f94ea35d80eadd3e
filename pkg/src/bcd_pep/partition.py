"""Block partitions of R^D and the flat (outer, block) index used everywhere else.

A point produced by cyclic BCD is addressed by an outer counter ``k`` and a
block counter ``i``; the pair is linearised as ``q = k*p + i`` so that the
last point of cycle ``k`` and the first point of cycle ``k+1`` share one slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence


@dataclass(frozen=True)
class BlockPartition:
    """Contiguous decomposition of ``range(total_dim)`` into ``p`` blocks.

    Selecting the coordinates of block ``i`` is the same as multiplying by
    the column submatrix ``U_i^T`` of the identity.
    """

    total_dim: int
    block_sizes: tuple[int, ...]
    block_offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes:
            raise ValueError("partition needs at least one block")
        if any(s < 1 for s in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        if sum(sizes) != self.total_dim:
            raise ValueError(
                f"block sizes sum to {sum(sizes)}, expected total_dim={self.total_dim}"
            )
        offsets = [0]
        for s in sizes[:-1]:
            offsets.append(offsets[-1] + s)
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "block_offsets", tuple(offsets))

    @property
    def p(self) -> int:
        return len(self.block_sizes)

    def block_slice(self, i: int) -> slice:
        """Coordinates of block ``i`` (1-based, as in the algorithm)."""
        if not 1 <= i <= self.p:
            raise IndexError(f"block index {i} outside 1..{self.p}")
        start = self.block_offsets[i - 1]
        return slice(start, start + self.block_sizes[i - 1])

    def block_of(self, j: int) -> int:
        """1-based block containing coordinate ``j``."""
        if not 0 <= j < self.total_dim:
            raise IndexError(f"coordinate {j} outside 0..{self.total_dim - 1}")
        for i in range(self.p, 0, -1):
            if self.block_offsets[i - 1] <= j:
                return i
        raise AssertionError("unreachable")

    def weights(self) -> tuple[float, ...]:
        """Block ratios D_i / D."""
        return tuple(s / self.total_dim for s in self.block_sizes)

    def __iter__(self) -> Iterator[slice]:
        return (self.block_slice(i) for i in range(1, self.p + 1))


def equal_partition(D: int, p: int) -> BlockPartition:
    if p < 1 or D < 1:
        raise ValueError(f"need positive D and p, got D={D}, p={p}")
    if p > D:
        raise ValueError(f"cannot split D={D} coordinates into p={p} blocks")
    if D % p:
        raise ValueError(f"p={p} does not divide D={D}")
    return BlockPartition(D, (D // p,) * p)


def partition_from_sizes(sizes: Sequence[int]) -> BlockPartition:
    return BlockPartition(sum(sizes), tuple(sizes))


def flatten(k: int, i: int, p: int, N: int | None = None) -> int:
    """Flat index ``k*p + i``; ``(k, p)`` and ``(k+1, 0)`` map to the same value.

    ``N`` (the last outer index) is optional; when given, ``k`` is range checked.
    """
    if p < 1:
        raise ValueError(f"p must be positive, got {p}")
    if k < 0 or not 0 <= i <= p:
        raise IndexError(f"index (k={k}, i={i}) out of range for p={p}")
    if N is not None and k > N:
        raise IndexError(f"outer index k={k} exceeds N={N}")
    return k * p + i


def unflatten(q: int, p: int) -> tuple[int, int]:
    """Canonical ``(k, i)`` for flat index ``q``: ``i`` in 1..p, except ``(0, 0)``."""
    if q < 0:
        raise IndexError(f"flat index must be nonnegative, got {q}")
    if q == 0:
        return 0, 0
    return (q - 1) // p, (q - 1) % p + 1


def block_of_flat(q: int, p: int) -> int:
    """Block updated to produce the point at flat index ``q >= 1``."""
    return unflatten(q, p)[1]
