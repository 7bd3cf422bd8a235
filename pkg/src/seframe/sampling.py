"""Sample sizing, frame-frequency distributions, and seeded sentence sampling.

Sample sizes follow Cochran's formula with the finite population correction:
n0 = z^2 * p * (1 - p) / e^2, then n = n0 / (1 + (n0 - 1) / N), rounded
down and clamped to [1, N]. Flooring after the correction is what
reproduces the shipped preset sample counts.

Randomness comes from a 64-bit linear congruential generator
(x <- 6364136223846793005 * x + 1442695040888963407 mod 2^64, top bits
used, rejection sampling for bounded draws) so samples reproduce across
implementations. Per-frame seeds are derived as seed XOR FNV-1a-64(frame).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .parser import ParseResult


class InvalidSpec(ValueError):
    """Sample specification violates its invariants."""


# two-sided critical values for the confidence presets
Z_FOR_CONFIDENCE = {
    0.80: 1.2816,
    0.90: 1.6449,
    0.95: 1.9600,
    0.98: 2.3263,
    0.99: 2.5758,
}


def z_for_confidence(confidence: float) -> float:
    try:
        return Z_FOR_CONFIDENCE[round(confidence, 2)]
    except KeyError:
        raise InvalidSpec(
            f"no z preset for confidence {confidence}; pass z directly "
            f"(presets: {sorted(Z_FOR_CONFIDENCE)})"
        ) from None


@dataclass(frozen=True)
class SampleSpec:
    population: int
    z: float
    proportion: float = 0.5
    margin: float = 0.05

    def __post_init__(self):
        if self.population < 0:
            raise InvalidSpec("population must be >= 0")
        if not 0 < self.margin < 1:
            raise InvalidSpec("margin must be in (0, 1)")
        if not 0 < self.proportion < 1:
            raise InvalidSpec("proportion must be in (0, 1)")
        if self.z <= 0:
            raise InvalidSpec("z must be positive")

    @classmethod
    def for_confidence(
        cls, population: int, confidence: float, proportion: float = 0.5, margin: float = 0.05
    ) -> "SampleSpec":
        return cls(population, z_for_confidence(confidence), proportion, margin)


def sample_size(spec: SampleSpec) -> int:
    """Cochran sample size with finite population correction, floored."""
    if spec.population == 0:
        return 0
    n0 = spec.z * spec.z * spec.proportion * (1 - spec.proportion) / (spec.margin**2)
    n = n0 / (1 + (n0 - 1) / spec.population)
    return max(1, min(spec.population, math.floor(n)))


@dataclass(frozen=True)
class DistributionReport:
    """Frames ranked by how many distinct sentences contain them."""

    entries: tuple[tuple[str, int, float], ...]  # (frame, count, share)
    sentence_count: int

    def __post_init__(self):
        counts = [count for _, count, _ in self.entries]
        if counts != sorted(counts, reverse=True):
            raise ValueError("distribution entries must be ranked by count")
        if any(not 0.0 <= share <= 1.0 for _, _, share in self.entries):
            raise ValueError("shares must lie in [0, 1]")

    def to_csv_rows(self) -> list[list]:
        rows = [["rank", "frame", "count", "share"]]
        for rank, (frame, count, share) in enumerate(self.entries, start=1):
            rows.append([rank, frame, count, f"{share:.6f}"])
        return rows


def frame_distribution(parses) -> DistributionReport:
    """Count, per frame, the number of distinct sentences containing it."""
    sentences_seen = set()
    by_frame: dict[str, set] = {}
    for result in parses:
        sentences_seen.add(result.sentence.id)
        for fi in result.frames:
            by_frame.setdefault(fi.frame, set()).add(result.sentence.id)
    total = len(sentences_seen)
    ranked = sorted(by_frame.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    entries = tuple(
        (frame, len(ids), len(ids) / total if total else 0.0) for frame, ids in ranked
    )
    return DistributionReport(entries=entries, sentence_count=total)


def top_k(report: DistributionReport, k: int) -> list[str]:
    """The first `k` frames of the ranking (ties already alphabetical)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return [frame for frame, _, _ in report.entries[:k]]


# --------------------------------------------------------------------------
# deterministic sampling

_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg:
    """64-bit linear congruential generator (documented constants above)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next64(self) -> int:
        self.state = (self.state * _LCG_MULT + _LCG_INC) & _MASK
        return self.state

    def below(self, bound: int) -> int:
        """Unbiased draw from [0, bound) by rejection on the top 32 bits."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = ((1 << 32) // bound) * bound
        while True:
            draw = self.next64() >> 32
            if draw < limit:
                return draw % bound

    def sample(self, items: list, n: int) -> list:
        """First `n` items of a partial Fisher-Yates shuffle."""
        pool = list(items)
        n = min(n, len(pool))
        for i in range(n):
            j = i + self.below(len(pool) - i) if len(pool) - i > 1 else i
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:n]


def fnv1a64(text: str) -> int:
    value = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        value ^= byte
        value = (value * 0x100000001B3) & _MASK
    return value


def sample_per_frame(frame: str, parses, n: int, seed: int) -> list[str]:
    """Uniform sample without replacement of sentence ids containing `frame`.

    The generator seed is derived from `seed` and the frame name, so
    per-frame samples are independent and reproducible.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    eligible = sorted(
        {r.sentence.id for r in parses if any(fi.frame == frame for fi in r.frames)}
    )
    if n == 0 or not eligible:
        return []
    rng = Lcg(seed ^ fnv1a64(frame))
    return rng.sample(eligible, n)
