"""Period candidates from positive-run lengths of the mean-centred target."""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DataError

HEAP_CAPACITY = 5


class BoundedHeap:
    """Keeps the ``capacity`` smallest distinct integers pushed so far.

    Stored as a max-heap (negated values) so the largest retained value is
    the one evicted on overflow.
    """

    def __init__(self, capacity: int = HEAP_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._heap: list[int] = []
        self._members: set[int] = set()

    def __len__(self):
        return len(self._heap)

    def push(self, value: int) -> None:
        if value in self._members:
            return
        if len(self._heap) < self.capacity:
            heapq.heappush(self._heap, -value)
            self._members.add(value)
        elif value < -self._heap[0]:
            evicted = -heapq.heapreplace(self._heap, -value)
            self._members.discard(evicted)
            self._members.add(value)

    def largest(self) -> int:
        return -self._heap[0]

    def sorted(self) -> list[int]:
        return sorted(self._members)


@dataclass(frozen=True)
class PeriodSet:
    periods: tuple[int, ...]
    run_lengths: tuple[int, ...] = ()

    def __len__(self):
        return len(self.periods)

    def __iter__(self):
        return iter(self.periods)

    def __bool__(self):
        return bool(self.periods)

    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.run_lengths).items()))

    def to_dict(self) -> dict:
        return {
            "periods": list(self.periods),
            "run_length_histogram": {str(k): v for k, v in self.histogram().items()},
        }


def regularize(y) -> np.ndarray:
    """Min-max scale into [0, 1], then subtract the mean of the scaled series.

    Sign changes of the result mark crossings of the series mean. A constant
    series maps to all zeros.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise DataError("regularize needs a 1-d series with at least 2 values")
    lo, hi = y.min(), y.max()
    if hi == lo:
        return np.zeros_like(y)
    scaled = (y - lo) / (hi - lo)
    return scaled - scaled.mean()


def positive_runs(values) -> list[int]:
    """Lengths of positive runs that are closed by a non-positive value, in order.

    A run still open at the end of the series is not counted.
    """
    runs = []
    count = 0
    for v in values:
        if v > 0:
            count += 1
        elif count:
            runs.append(count)
            count = 0
    return runs


def cycle(y, capacity: int = HEAP_CAPACITY) -> PeriodSet:
    """Up to ``capacity`` smallest distinct positive-run lengths of ``y``, ascending.

    An empty result means no periodicity was found.
    """
    runs = positive_runs(regularize(y).tolist())
    heap = BoundedHeap(capacity)
    for r in runs:
        heap.push(r)
    return PeriodSet(tuple(heap.sorted()), tuple(runs))
