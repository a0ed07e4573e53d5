"""Exact dyadic rationals k/2^n and the grids D_n(T) = {k/2^n : 0 <= k <= floor(2^n T)}."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, total_ordering
from numbers import Real

import numpy as np

__all__ = [
    "MAX_LEVEL",
    "DyadicRational",
    "DyadicGrid",
    "canonicalize",
    "dyadic_grid",
    "nearest_dyadic",
    "level_for_times",
]

MAX_LEVEL = 40


@total_ordering
@dataclass(frozen=True)
class DyadicRational:
    """The number ``k / 2**n``, always held in canonical form (k odd or n == 0)."""

    k: int
    n: int

    def __post_init__(self):
        if self.k < 0 or self.n < 0:
            raise ValueError("dyadic rationals here are nonnegative")
        if self.n > MAX_LEVEL:
            raise ValueError(f"level {self.n} exceeds the cap {MAX_LEVEL}")
        if self.n > 0 and self.k % 2 == 0:
            raise ValueError(f"({self.k}, {self.n}) is not canonical; use canonicalize()")

    @property
    def value(self) -> Fraction:
        return Fraction(self.k, 1 << self.n)

    def __float__(self) -> float:
        return self.k / (1 << self.n)

    def __lt__(self, other):
        if isinstance(other, DyadicRational):
            return self.value < other.value
        return self.value < other

    def __str__(self) -> str:
        if self.n == 0:
            return str(self.k)
        return f"{self.k}/{1 << self.n}"

    def render(self) -> str:
        """``k/2^n`` notation, e.g. ``3/2^2``."""
        return str(self.k) if self.n == 0 else f"{self.k}/2^{self.n}"


def canonicalize(k: int, n: int) -> DyadicRational:
    if k < 0 or n < 0:
        raise ValueError("canonicalize expects k >= 0 and n >= 0")
    if k == 0:
        return DyadicRational(0, 0)
    # strip common factors of two
    shift = min((k & -k).bit_length() - 1, n)
    return DyadicRational(k >> shift, n - shift)


def _floor_scaled(T: Real, n: int) -> int:
    return math.floor(Fraction(T) * (1 << n))


@dataclass(frozen=True)
class DyadicGrid:
    level: int
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon T must be positive")
        if not 0 <= self.level <= MAX_LEVEL:
            raise ValueError(f"level must lie in [0, {MAX_LEVEL}]")

    @cached_property
    def k_max(self) -> int:
        return _floor_scaled(self.horizon, self.level)

    @property
    def step(self) -> float:
        return 2.0 ** -self.level

    @cached_property
    def points(self) -> tuple[DyadicRational, ...]:
        return tuple(canonicalize(k, self.level) for k in range(self.k_max + 1))

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.k_max + 1, dtype=float) * self.step

    def __len__(self) -> int:
        return self.k_max + 1

    def __contains__(self, t) -> bool:
        try:
            scaled = Fraction(t) * (1 << self.level)
        except (TypeError, ValueError):
            return False
        return scaled.denominator == 1 and 0 <= scaled <= self.k_max

    def index_of(self, t) -> int:
        scaled = Fraction(t) * (1 << self.level)
        if scaled.denominator != 1 or not 0 <= scaled <= self.k_max:
            raise ValueError(f"{t} is not a point of D_{self.level}({self.horizon})")
        return int(scaled)

    def refine(self) -> "DyadicGrid":
        return DyadicGrid(self.level + 1, self.horizon)


def dyadic_grid(n: int, T: Real) -> DyadicGrid:
    return DyadicGrid(n, T)


def nearest_dyadic(t: Real, grid: DyadicGrid) -> tuple[DyadicRational, float]:
    """Closest grid point to ``t``; ties go to the smaller point."""
    if not 0 <= t <= grid.horizon:
        raise ValueError(f"t={t} lies outside [0, {grid.horizon}]")
    # t = p/q exactly, so t 2^n = num/q in integers
    p, q = (t if hasattr(t, "as_integer_ratio") else Fraction(t)).as_integer_ratio()
    num = p << grid.level
    lo = min(num // q, grid.k_max)
    hi = min(lo + 1, grid.k_max)
    k = hi if (hi * q - num) < (num - lo * q) else lo
    dist = abs(num - k * q) / (q << grid.level)
    return canonicalize(k, grid.level), dist


def level_for_times(times, cap: int = 30) -> int:
    """Smallest level whose grid contains every time in ``times``."""
    level = 0
    for t in times:
        frac = Fraction(t)
        if frac < 0:
            raise ValueError("times must be nonnegative")
        den = frac.denominator
        if den & (den - 1):
            raise ValueError(f"{t} is not a dyadic rational")
        level = max(level, den.bit_length() - 1)
    if level > cap:
        raise ValueError(f"times need level {level} > cap {cap}")
    return level
