"""Finite discrete measures, random-variable tables and empirical samples.

Weights stay in whatever arithmetic they were given in: ``Fraction`` inputs
give exact results, floats give floats.  Nothing here mutates after
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import kolmogorov, ndtr

__all__ = [
    "FiniteMeasure",
    "RandomVariableTable",
    "EmpiricalSample",
    "Power",
    "Tabulated",
    "IDENTITY",
    "KSResult",
    "measure_of_event",
    "integrate",
    "markov_bound",
    "ks_statistic",
    "ks_two_sample",
    "normal_cdf",
]


def _is_exact(x: Any) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _sum(values: Iterable[Real]) -> Real:
    """Exact sum for rationals, ``fsum`` as soon as a float appears."""
    vals = list(values)
    if not all(_is_exact(v) for v in vals):
        return math.fsum(float(v) for v in vals)
    # add integer numerators per denominator; far cheaper than Fraction additions
    by_den: dict[int, int] = {}
    for v in vals:
        by_den[v.denominator] = by_den.get(v.denominator, 0) + v.numerator
    return sum((Fraction(num, den) for den, num in by_den.items()), Fraction(0))


class FiniteMeasure:
    """A measure on finitely many outcomes, stored as ``{outcome: weight}``."""

    __slots__ = ("_atoms", "_total")

    def __init__(self, atoms: Mapping[Hashable, Real] | Iterable[tuple[Hashable, Real]]):
        items = list(atoms.items()) if isinstance(atoms, Mapping) else list(atoms)
        table: dict[Hashable, Real] = {}
        for outcome, weight in items:
            if outcome in table:
                raise ValueError(f"duplicate outcome {outcome!r}")
            if isinstance(weight, float) and not math.isfinite(weight):
                raise ValueError(f"non-finite weight for {outcome!r}")
            if weight < 0:
                raise ValueError(f"negative weight {weight!r} for {outcome!r}")
            table[outcome] = weight
        self._atoms = table
        self._total = _sum(table.values())

    @classmethod
    def point(cls, outcome: Hashable) -> "FiniteMeasure":
        return cls({outcome: Fraction(1)})

    @classmethod
    def uniform(cls, outcomes: Iterable[Hashable]) -> "FiniteMeasure":
        outs = list(outcomes)
        if not outs:
            raise ValueError("uniform measure needs at least one outcome")
        w = Fraction(1, len(outs))
        return cls((o, w) for o in outs)

    @property
    def atoms(self) -> Mapping[Hashable, Real]:
        return dict(self._atoms)

    @property
    def total(self) -> Real:
        return self._total

    @property
    def exact(self) -> bool:
        return all(_is_exact(w) for w in self._atoms.values())

    def outcomes(self) -> list[Hashable]:
        return list(self._atoms)

    def support(self) -> list[Hashable]:
        """Outcomes with strictly positive weight."""
        return [o for o, w in self._atoms.items() if w > 0]

    def items(self):
        return self._atoms.items()

    def weight(self, outcome: Hashable) -> Real:
        return self._atoms.get(outcome, Fraction(0))

    def __contains__(self, outcome: Hashable) -> bool:
        return outcome in self._atoms

    def __len__(self) -> int:
        return len(self._atoms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteMeasure):
            return NotImplemented
        keys = set(self._atoms) | set(other._atoms)
        return all(self.weight(k) == other.weight(k) for k in keys)

    def __hash__(self):
        return hash(frozenset((k, w) for k, w in self._atoms.items() if w != 0))

    def __repr__(self) -> str:
        body = ", ".join(f"{o!r}: {w}" for o, w in self._atoms.items())
        return f"FiniteMeasure({{{body}}})"

    def is_probability(self) -> bool:
        return self._total == 1 if self.exact else math.isclose(self._total, 1.0, abs_tol=1e-12)

    def event(self, predicate: Callable[[Hashable], bool]) -> Real:
        return _sum(w for o, w in self._atoms.items() if predicate(o))

    def integral(self, f: Callable[[Hashable], Real]) -> Real:
        return _sum(w * f(o) for o, w in self._atoms.items() if w != 0)

    def pushforward(self, fn: Callable[[Hashable], Hashable]) -> "FiniteMeasure":
        out: dict[Hashable, Real] = {}
        for o, w in self._atoms.items():
            if w == 0:
                continue
            key = fn(o)
            out[key] = out.get(key, 0) + w
        return FiniteMeasure(out)

    def scaled(self, factor: Real) -> "FiniteMeasure":
        return FiniteMeasure({o: w * factor for o, w in self._atoms.items()})

    def drop_null(self) -> "FiniteMeasure":
        return FiniteMeasure({o: w for o, w in self._atoms.items() if w != 0})

    def max_abs_difference(self, other: "FiniteMeasure") -> Real:
        """Largest singleton mass difference between the two measures."""
        keys = set(self._atoms) | set(other._atoms)
        if not keys:
            return Fraction(0)
        return max(abs(self.weight(k) - other.weight(k)) for k in keys)


def measure_of_event(mu: FiniteMeasure, predicate: Callable[[Hashable], bool]) -> Real:
    """Total weight of the outcomes satisfying ``predicate``."""
    return mu.event(predicate)


def integrate(mu: FiniteMeasure, f: Callable[[Hashable], Real]) -> Real:
    return mu.integral(f)


@dataclass(frozen=True)
class RandomVariableTable:
    """A real random variable on a finite sample space, as an explicit table."""

    values: Mapping[Hashable, Real]

    def __post_init__(self):
        object.__setattr__(self, "values", dict(self.values))

    def __call__(self, outcome: Hashable) -> Real:
        return self.values[outcome]

    def check_against(self, mu: FiniteMeasure) -> None:
        if set(self.values) != set(mu.outcomes()):
            raise ValueError("random variable domain does not match the measure's atoms")

    @classmethod
    def from_function(cls, mu: FiniteMeasure, fn: Callable[[Hashable], Real]) -> "RandomVariableTable":
        return cls({o: fn(o) for o in mu.outcomes()})


@dataclass(frozen=True)
class EmpiricalSample:
    draws: np.ndarray
    seed: int | None = None
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "draws", np.asarray(self.draws, dtype=float).ravel())

    def __len__(self) -> int:
        return self.draws.size


# -- monotone function vocabulary ------------------------------------------------


@dataclass(frozen=True)
class Power:
    """``x -> x**exponent`` for ``exponent > 0``; increasing on ``[0, inf)``."""

    exponent: Real = 1

    def __post_init__(self):
        if not self.exponent > 0:
            raise ValueError("power exponent must be positive")

    def __call__(self, x: Real) -> Real:
        a = self.exponent
        if _is_exact(a) and Fraction(a).denominator == 1:
            return x ** int(a)
        if x < 0:
            raise ValueError(f"x**{a} is undefined for negative x={x}")
        return float(x) ** float(a)


IDENTITY = Power(1)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear function through sorted knots, constant outside them."""

    knots: tuple[tuple[Real, Real], ...]

    def __post_init__(self):
        knots = tuple(sorted((x, y) for x, y in self.knots))
        if not knots:
            raise ValueError("tabulated function needs at least one knot")
        xs = [k[0] for k in knots]
        if len(set(xs)) != len(xs):
            raise ValueError("duplicate knot abscissae")
        ys = [k[1] for k in knots]
        if any(b < a for a, b in zip(ys, ys[1:])):
            raise ValueError("tabulated values must be nondecreasing")
        object.__setattr__(self, "knots", knots)

    def __call__(self, x: Real) -> Real:
        ks = self.knots
        if x <= ks[0][0]:
            return ks[0][1]
        if x >= ks[-1][0]:
            return ks[-1][1]
        for (x0, y0), (x1, y1) in zip(ks, ks[1:]):
            if x0 <= x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        raise AssertionError("unreachable")


def _check_monotone(f: Callable[[Real], Real], points: Sequence[Real]) -> None:
    pts = sorted(set(points))
    vals = [f(p) for p in pts]
    for p, v in zip(pts, vals):
        if v < 0:
            raise ValueError(f"f takes the negative value {v} at {p}")
    for (p, a), (q, b) in zip(zip(pts, vals), zip(pts[1:], vals[1:])):
        if b < a:
            raise ValueError(f"f is not increasing between {p} and {q}")


def markov_bound(
    mu: FiniteMeasure,
    x: RandomVariableTable,
    f: Callable[[Real], Real],
    eps: Real,
) -> tuple[Real, Real]:
    """Both sides of the generalized Markov inequality.

    Returns ``(mu[x >= eps], integral(f(x)) / f(eps))``.  ``f`` must be
    nonnegative and nondecreasing on the positive reals together with the
    range of ``x``; this is checked on the finitely many points that matter.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    x.check_against(mu)
    f_eps = f(eps)
    if not f_eps > 0:
        raise ValueError(f"f(eps) must be positive, got {f_eps}")
    support_values = [x(o) for o in mu.support()]
    probe = support_values + [eps]
    probe += [v for v in (eps / 2, eps * 2) if v > 0]
    _check_monotone(f, probe)
    lhs = mu.event(lambda o: x(o) >= eps)
    rhs = mu.integral(lambda o: f(x(o))) / f_eps
    return lhs, rhs


# -- Kolmogorov-Smirnov ---------------------------------------------------------


@dataclass(frozen=True)
class KSResult:
    d: float
    p: float
    n: int


def normal_cdf(mean: float = 0.0, variance: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    if variance <= 0:
        raise ValueError("variance must be positive")
    sd = math.sqrt(variance)
    return lambda x: ndtr((np.asarray(x, dtype=float) - mean) / sd)


def _kolmogorov_p(d: float, n_eff: float) -> float:
    # Stephens' finite-n correction to the asymptotic Kolmogorov law
    root = math.sqrt(n_eff)
    return float(kolmogorov((root + 0.12 + 0.11 / root) * d))


def ks_statistic(sample: EmpiricalSample | Sequence[float] | np.ndarray, cdf: Callable) -> KSResult:
    """One-sample KS distance of ``sample`` to ``cdf`` and its asymptotic p-value."""
    draws = sample.draws if isinstance(sample, EmpiricalSample) else np.asarray(sample, dtype=float).ravel()
    n = draws.size
    if n == 0:
        raise ValueError("KS statistic of an empty sample")
    xs = np.sort(draws)
    F = np.asarray(cdf(xs), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    d = min(max(d, 0.0), 1.0)
    return KSResult(d, _kolmogorov_p(d, n), n)


def ks_two_sample(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> KSResult:
    """Two-sample KS distance between empirical CDFs, asymptotic p-value."""
    xa = np.sort(np.asarray(a, dtype=float).ravel())
    xb = np.sort(np.asarray(b, dtype=float).ravel())
    na, nb = xa.size, xb.size
    if na == 0 or nb == 0:
        raise ValueError("KS statistic of an empty sample")
    grid = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, grid, side="right") / na
    fb = np.searchsorted(xb, grid, side="right") / nb
    d = float(np.max(np.abs(fa - fb)))
    n_eff = na * nb / (na + nb)
    return KSResult(d, _kolmogorov_p(d, n_eff), int(round(n_eff)))
