"""Set partitions and the moment/cumulant relations they define.

Moments and cumulants are related by a sum over all set partitions of
``{1, ..., k}``:

    m_k = sum_P prod_{block in P} kappa_{|block|}

Partitions are enumerated as restricted-growth strings.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, prod
from typing import Iterator

import numpy as np

from .errors import FCSError

MAX_K = 12


class KTooLarge(FCSError, ValueError):
    pass


@dataclass(frozen=True)
class SetPartition:
    """Blocks of a partition of ``{1..k}``, each sorted, ordered by least element."""

    blocks: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return sum(len(b) for b in self.blocks)

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)


@dataclass(frozen=True)
class CumulantVector:
    """Cumulants ``<<n^k>>`` for ``k = 1..k_max`` (``values[0]`` is the mean)."""

    values: np.ndarray
    method: str = "exact"
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def k_max(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> float:
        """1-based access: ``c[2]`` is the variance."""
        return self.values[k - 1]


@dataclass(frozen=True)
class MomentVector:
    """Raw moments ``<n^k>`` for ``k = 1..k_max``."""

    values: np.ndarray

    @property
    def k_max(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int):
        return self.values[k - 1]


def _check_k(k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > MAX_K:
        raise KTooLarge(f"k={k} exceeds the limit {MAX_K} (Bell number B_k explodes)")


def restricted_growth_strings(k: int) -> Iterator[tuple[int, ...]]:
    """All ``a`` with ``a[0] = 0`` and ``a[i] <= 1 + max(a[:i])``, lexicographically."""
    a = [0] * k
    m = [0] * k  # m[i] = max(a[:i+1])
    while True:
        yield tuple(a)
        i = k - 1
        while i > 0 and a[i] > m[i - 1]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        m[i] = max(m[i - 1], a[i])
        for j in range(i + 1, k):
            a[j] = 0
            m[j] = m[i]


def enumerate_partitions(k: int) -> list[SetPartition]:
    """All set partitions of ``{1..k}``; there are ``B_k`` of them."""
    _check_k(k)
    out = []
    for a in restricted_growth_strings(k):
        blocks: dict[int, list[int]] = {}
        for elem, label in enumerate(a, start=1):
            blocks.setdefault(label, []).append(elem)
        out.append(SetPartition(tuple(tuple(blocks[l]) for l in sorted(blocks))))
    return out


def integer_partitions(k: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Non-increasing tuples of positive integers summing to `k`."""
    largest = k if largest is None else largest
    if k == 0:
        yield ()
        return
    for first in range(min(k, largest), 0, -1):
        for rest in integer_partitions(k - first, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def block_size_multiplicities(k: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Block-size shapes of the set partitions of ``{1..k}`` with their counts.

    A shape with block sizes ``s_i`` occurring ``r_j`` times each is realized
    by ``k! / (prod s_i! * prod r_j!)`` set partitions.
    """
    _check_k(k)
    out = []
    for sizes in integer_partitions(k):
        count = factorial(k)
        for s in sizes:
            count //= factorial(s)
        for r in Counter(sizes).values():
            count //= factorial(r)
        out.append((sizes, count))
    return tuple(out)


def bell_number(k: int) -> int:
    """Bell number from the Bell triangle (independent of the enumeration)."""
    row = [1]
    for _ in range(k):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
    return row[0]


def _values(x) -> np.ndarray:
    v = getattr(x, "values", x)
    return np.asarray(v)


def cumulants_to_moments(c) -> MomentVector:
    """Raw moments from cumulants by the partition sum."""
    kappa = _values(c)
    k_max = len(kappa)
    _check_k(k_max)
    m = np.empty(k_max, dtype=np.result_type(kappa, float))
    for k in range(1, k_max + 1):
        m[k - 1] = sum(mult * prod(kappa[s - 1] for s in sizes)
                       for sizes, mult in block_size_multiplicities(k))
    return MomentVector(m)


def moments_to_cumulants(m) -> CumulantVector:
    """Cumulants from raw moments, by induction on ``k``.

    ``kappa_k = m_k - sum over partitions with more than one block``; every
    term on the right only involves lower cumulants.
    """
    mom = _values(m)
    k_max = len(mom)
    _check_k(k_max)
    kappa = np.empty(k_max, dtype=np.result_type(mom, float))
    for k in range(1, k_max + 1):
        rest = sum(mult * prod(kappa[s - 1] for s in sizes)
                   for sizes, mult in block_size_multiplicities(k) if sizes != (k,))
        kappa[k - 1] = mom[k - 1] - rest
    return CumulantVector(kappa, method="moments")
