"""Merge-pair selection policies and reproducible categorical sampling.

This module provides:
- SplitMix64, the portable seeded random source (one per training run)
- Selection distributions for the standard, softmax, countprop and uniform policies
- Inverse-CDF sampling over a canonical (lexicographic) pair ordering
- PairSelector, the incremental counterpart of choose_pair used during training
"""

import bisect
import heapq
from collections.abc import Mapping, Sequence
from typing import TypedDict

import numpy as np
import numpy.typing as npt

from modules.config import PROBABILITY_TOLERANCE, UINT64_MASK
from modules.validation import NoPairsError, Pair, SamplingMethod


class SplitMix64:
    """SplitMix64 pseudorandom generator (64-bit state, 64-bit output).

    Each call to ``next_u64`` or ``next_float`` consumes exactly one draw.
    """

    _GAMMA = 0x9E3779B97F4A7C15
    _MUL1 = 0xBF58476D1CE4E5B9
    _MUL2 = 0x94D049BB133111EB

    def __init__(self, seed: int) -> None:
        self.seed = seed & UINT64_MASK
        self._state = self.seed
        self.draws = 0

    def next_u64(self) -> int:
        self._state = (self._state + self._GAMMA) & UINT64_MASK
        z = self._state
        z = ((z ^ (z >> 30)) * self._MUL1) & UINT64_MASK
        z = ((z ^ (z >> 27)) * self._MUL2) & UINT64_MASK
        self.draws += 1
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform float in [0, 1) from the high 53 bits of one draw."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


class SelectionDistribution(TypedDict):
    """Probabilities over pairs in canonical (sorted) order."""

    pairs: list[Pair]
    probs: npt.NDArray[np.float64]


def _standard_pair(counts: Mapping[Pair, int]) -> Pair:
    # Count descending, then (left, right) ascending
    return min(counts.items(), key=lambda item: (-item[1], item[0]))[0]


def selection_probabilities(
    counts: Mapping[Pair, int],
    method: SamplingMethod,
    pairs: Sequence[Pair] | None = None,
) -> SelectionDistribution:
    """Turn pair counts into a selection distribution for ``method``.

    Args:
        counts: Pair occurrence counts (all positive)
        method: Selection policy
        pairs: The keys of ``counts`` already in sorted order, if the caller
            maintains them; sorted here otherwise

    Returns:
        SelectionDistribution with pairs sorted by (left, right)

    Raises:
        NoPairsError: If counts is empty

    Note:
        Softmax is applied to raw counts after subtracting the maximum. With
        realistic count gaps it is close to a point mass on the argmax.
    """
    if not counts:
        raise NoPairsError("No symbol pairs available to choose from")

    pairs = sorted(counts) if pairs is None else list(pairs)
    n = len(pairs)

    if method is SamplingMethod.STANDARD:
        probs = np.zeros(n, dtype=np.float64)
        probs[pairs.index(_standard_pair(counts))] = 1.0
    elif method is SamplingMethod.SOFTMAX:
        values = np.fromiter((counts[p] for p in pairs), dtype=np.float64, count=n)
        weights = np.exp(values - values.max())
        probs = weights / weights.sum()
    elif method is SamplingMethod.COUNTPROP:
        values = np.fromiter((counts[p] for p in pairs), dtype=np.float64, count=n)
        probs = values / float(sum(counts.values()))
    elif method is SamplingMethod.UNIFORM:
        probs = np.full(n, 1.0 / n, dtype=np.float64)
    else:
        raise ValueError(f"Unsupported sampling method: {method}")

    return SelectionDistribution(pairs=pairs, probs=probs)


def check_distribution(dist: SelectionDistribution) -> None:
    """Validate distribution invariants.

    Raises:
        ValueError: If probabilities are out of range, do not sum to 1,
            or pairs are unsorted or duplicated
    """
    pairs, probs = dist["pairs"], dist["probs"]
    if len(pairs) != len(probs) or not pairs:
        raise ValueError("Distribution must hold one probability per pair")
    if np.any(probs < 0) or np.any(probs > 1):
        raise ValueError("Probabilities must lie in [0, 1]")
    if abs(float(probs.sum()) - 1.0) > PROBABILITY_TOLERANCE:
        raise ValueError(f"Probabilities sum to {float(probs.sum())}, not 1")
    if any(a >= b for a, b in zip(pairs, pairs[1:])):
        raise ValueError("Pairs must be strictly sorted by (left, right)")


def sample_categorical(
    dist: SelectionDistribution, rng: SplitMix64, validate: bool = True
) -> Pair:
    """Draw one pair by inverse CDF over the canonical ordering.

    Args:
        dist: Selection distribution
        rng: Random source; advanced by exactly one draw
        validate: Run check_distribution first. Distributions built by
            selection_probabilities satisfy it and may skip the check.

    Returns:
        The sampled pair

    Raises:
        ValueError: If ``validate`` is set and ``dist`` breaks its invariants
            (no draw is consumed in that case)
    """
    if validate:
        check_distribution(dist)
    probs = dist["probs"]
    cdf = np.cumsum(probs)
    u = rng.next_float()
    index = int(np.searchsorted(cdf, u, side="right"))
    if index >= len(probs):
        # u landed past a cdf that rounds to slightly below 1
        index = int(np.flatnonzero(probs)[-1])
    return dist["pairs"][index]


def choose_pair(counts: Mapping[Pair, int], method: SamplingMethod, rng: SplitMix64) -> Pair:
    """Select the next pair to merge.

    Standard selection is the tie-broken argmax and consumes no draws; every
    other method consumes exactly one.

    Raises:
        NoPairsError: If counts is empty
    """
    if method is SamplingMethod.STANDARD:
        if not counts:
            raise NoPairsError("No symbol pairs available to choose from")
        return _standard_pair(counts)
    return sample_categorical(selection_probabilities(counts, method), rng, validate=False)


class PairSelector:
    """choose_pair over a pair-count table that changes a little per merge.

    The owner mutates ``counts`` in place and reports every change through
    ``update``. Standard selection keeps a heap of ``(-count, pair)`` entries
    with lazy invalidation; sampled selection keeps the pair keys in sorted
    order. Choices and draw consumption are identical to choose_pair on the
    same counts.
    """

    def __init__(self, counts: Mapping[Pair, int], method: SamplingMethod, rng: SplitMix64) -> None:
        self.method = method
        self.rng = rng
        self._counts = counts
        self._heap: list[tuple[int, Pair]] = []
        self._pairs: list[Pair] = []
        if method is SamplingMethod.STANDARD:
            self._heap = [(-count, pair) for pair, count in counts.items()]
            heapq.heapify(self._heap)
        else:
            self._pairs = sorted(counts)

    def update(self, pair: Pair, old: int, new: int) -> None:
        """Record that ``counts[pair]`` moved from ``old`` to ``new`` (0 = absent)."""
        if self.method is SamplingMethod.STANDARD:
            if new > 0:
                heapq.heappush(self._heap, (-new, pair))
        elif old == 0 and new > 0:
            bisect.insort(self._pairs, pair)
        elif old > 0 and new == 0:
            del self._pairs[bisect.bisect_left(self._pairs, pair)]

    def choose(self) -> Pair:
        """Select the next pair to merge from the current counts.

        Raises:
            NoPairsError: If no pairs remain
        """
        if not self._counts:
            raise NoPairsError("No symbol pairs available to choose from")
        if self.method is SamplingMethod.STANDARD:
            while self._heap:
                neg_count, pair = self._heap[0]
                if self._counts.get(pair, 0) == -neg_count:
                    return pair
                heapq.heappop(self._heap)  # stale
            raise NoPairsError("No symbol pairs available to choose from")
        dist = selection_probabilities(self._counts, self.method, self._pairs)
        return sample_categorical(dist, self.rng, validate=False)
