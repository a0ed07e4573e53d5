"""Processes on finite index sets and their Monte-Carlo faces.

``GridProcess`` is an exact process: a finite sample space with a value for
every (time, outcome) pair.  ``PathSampler`` is the Monte-Carlo view: it
produces one ``SamplePath`` per random stream.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from numbers import Real
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import stats

from ._rng import stream
from .dyadics import DyadicGrid, level_for_times
from .measure import FiniteMeasure, RandomVariableTable
from .measure import _sum as _sum_exact

__all__ = [
    "IncompatibleProcesses",
    "GridProcess",
    "SamplePath",
    "PathSampler",
    "ZeroSampler",
    "LinearGaussianSampler",
    "OffsetSampler",
    "ConvergenceReport",
    "IncrementReport",
    "random_walk",
    "random_walk_process",
    "fdd",
    "modification_defect",
    "indistinguishability_defect",
    "converges_in_measure",
    "converges_ae",
    "typewriter",
    "independent_increments_test",
    "iter_paths",
    "values_at",
]


class IncompatibleProcesses(ValueError):
    """Raised when two processes do not share index set and sample space."""


# -- exact processes ----------------------------------------------------------------


@dataclass(frozen=True)
class GridProcess:
    index: tuple
    space: FiniteMeasure
    values: Mapping[tuple, Real]

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(self.index))
        object.__setattr__(self, "values", dict(self.values))
        missing = [(t, w) for t in self.index for w in self.space.outcomes() if (t, w) not in self.values]
        if missing:
            raise ValueError(f"process has no value at {missing[0]!r}")

    @classmethod
    def from_function(cls, index: Iterable, space: FiniteMeasure, fn: Callable[[Real, Hashable], Real]) -> "GridProcess":
        index = tuple(index)
        return cls(index, space, {(t, w): fn(t, w) for t in index for w in space.outcomes()})

    def at(self, t) -> RandomVariableTable:
        return RandomVariableTable({w: self.values[(t, w)] for w in self.space.outcomes()})

    def path(self, outcome: Hashable) -> tuple:
        return tuple(self.values[(t, outcome)] for t in self.index)


def random_walk(bits: Sequence[bool], n: int) -> int:
    """Simple random walk: sum over ``j = 1..n`` of +1 if ``bits[j]`` else -1.

    The sum is 1-based, so ``bits[0]`` is never read and ``bits`` must have
    at least ``n + 1`` entries.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if len(bits) < n + 1:
        raise ValueError(f"need at least {n + 1} bits (1-based indices 1..{n}), got {len(bits)}")
    return sum(1 if bits[j] else -1 for j in range(1, n + 1))


def random_walk_process(steps: int) -> GridProcess:
    """Random walk over ``steps`` fair coin flips, indexed by ``1..steps``.

    Outcomes are tuples of ``steps`` booleans (flip j sits at position j-1).
    """
    import itertools

    outcomes = list(itertools.product((True, False), repeat=steps))
    space = FiniteMeasure.uniform(outcomes)
    return GridProcess.from_function(range(1, steps + 1), space, lambda t, w: random_walk((None,) + w, t))


def fdd(process: GridProcess, J: Iterable) -> FiniteMeasure:
    """Joint law of ``(X_j)_{j in J}``, J taken in index order."""
    J = list(J)
    unknown = [j for j in J if j not in process.index]
    if unknown:
        raise ValueError(f"{unknown[0]!r} is not in the process index")
    order = [t for t in process.index if t in J]
    return process.space.pushforward(lambda w: tuple(process.values[(t, w)] for t in order))


def _require_compatible(X: GridProcess, Y: GridProcess) -> None:
    if X.index != Y.index:
        raise IncompatibleProcesses("processes have different index sets")
    if X.space != Y.space or set(X.space.outcomes()) != set(Y.space.outcomes()):
        raise IncompatibleProcesses("processes live on different sample spaces")


def modification_defect(X: GridProcess, Y: GridProcess, t) -> Real:
    """``mu{X_t != Y_t}``; zero at every t means X is a modification of Y."""
    _require_compatible(X, Y)
    if t not in X.index:
        raise ValueError(f"{t!r} is not in the index")
    return X.space.event(lambda w: X.values[(t, w)] != Y.values[(t, w)])


def indistinguishability_defect(X: GridProcess, Y: GridProcess) -> Real:
    """``mu{w : X_t(w) != Y_t(w) for some t}``."""
    _require_compatible(X, Y)
    return X.space.event(lambda w: any(X.values[(t, w)] != Y.values[(t, w)] for t in X.index))


# -- convergence on finite spaces --------------------------------------------------


Family = Callable[[int], RandomVariableTable | Mapping]


def _table(v) -> RandomVariableTable:
    return v if isinstance(v, RandomVariableTable) else RandomVariableTable(v)


_EXACT_FLOAT = 2**53


def _as_floats(values: list) -> np.ndarray | None:
    """Float array when that loses nothing (floats, and ints below 2^53)."""
    arr = np.array(values)
    if arr.dtype.kind not in "biuf" or arr.ndim != 1:
        return None  # Fractions and other exact types stay on the slow path
    arr = arr.astype(float)
    if arr.size and not np.abs(arr).max() < _EXACT_FLOAT:
        return None
    return arr


def _deviation(fn: Mapping, outs: list, lim: list, lim_arr: np.ndarray | None):
    """``|f_n(w) - l(w)|`` over ``outs``; a float array when exact, else a list."""
    vals = list(fn.values()) if list(fn) == outs else [fn[w] for w in outs]
    if lim_arr is not None:
        arr = _as_floats(vals)
        if arr is not None:
            return np.abs(arr - lim_arr)
    return [abs(v - l) for v, l in zip(vals, lim)]


@dataclass(frozen=True)
class ConvergenceReport:
    defects: tuple
    tail_max: Real
    threshold: float
    converging: bool


def converges_in_measure(
    family: Family,
    limit: RandomVariableTable | Mapping,
    mu: FiniteMeasure,
    eps: Real,
    restriction: Callable[[Hashable], bool] | None = None,
    n_max: int = 64,
    threshold: float = 1e-3,
) -> ConvergenceReport:
    """Defects ``mu({|f_n - l| > eps} & A)`` for ``n = 1..n_max``.

    "Converging" means the largest defect over the last quarter of the range
    is below ``threshold``, a finite stand-in for the limit.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    limit = _table(limit)
    inside = restriction or (lambda w: True)
    # atoms outside A never count, so drop them once
    outs = [w for w in mu.outcomes() if inside(w)]
    mass = [mu.weight(w) for w in outs]
    lim = [limit(w) for w in outs]
    lim_arr = _as_floats(lim)
    defects = []
    for n in range(1, n_max + 1):
        far = np.asarray(_deviation(_table(family(n)).values, outs, lim, lim_arr)) > eps
        defects.append(_sum_exact(mass[i] for i in np.flatnonzero(far)))
    tail = defects[n_max - max(1, n_max // 4):]
    tail_max = max(tail)
    return ConvergenceReport(tuple(defects), tail_max, threshold, tail_max < threshold)


def converges_ae(
    family: Family,
    limit: RandomVariableTable | Mapping,
    mu: FiniteMeasure,
    n_max: int = 64,
    tol: float = 0.05,
) -> Real:
    """Mass of the atoms whose sequence ``f_n(w)`` does not settle at ``l(w)``.

    An atom counts as converging when ``|f_n(w) - l(w)| <= tol`` for every
    ``n`` in the second half of ``1..n_max``.
    """
    limit = _table(limit)
    start = n_max // 2 + 1
    outs = mu.outcomes()
    lim = [limit(w) for w in outs]
    lim_arr = _as_floats(lim)
    bad = np.zeros(len(outs), dtype=bool)
    for n in range(start, n_max + 1):
        bad |= np.asarray(_deviation(_table(family(n)).values, outs, lim, lim_arr)) > tol
    return _sum_exact(mu.weight(outs[i]) for i in np.flatnonzero(bad))


def typewriter(n_atoms: int) -> Callable[[int], RandomVariableTable]:
    """The sliding-block ("typewriter") family on atoms ``0..n_atoms-1``.

    For ``n = 2**m + j`` (``0 <= j < 2**m``) ``f_n`` is the indicator of the
    ``j``-th block of width ``ceil(n_atoms / 2**m)``, wrapping around.  Each
    dyadic sweep covers every atom, so no atom converges pointwise while the
    block width (the in-measure defect) shrinks.
    """
    if n_atoms < 1:
        raise ValueError("need at least one atom")

    def member(n: int) -> RandomVariableTable:
        if n < 1:
            raise ValueError("family is indexed from n = 1")
        m = n.bit_length() - 1
        j = n - (1 << m)
        width = -(-n_atoms // (1 << m))
        lo = (j * width) % n_atoms
        values = dict.fromkeys(range(n_atoms), 0)
        for i in range(width):
            values[(lo + i) % n_atoms] = 1
        return RandomVariableTable(values)

    return member


# -- sample paths and samplers -----------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class SamplePath:
    """Values of one realization at the points of a dyadic grid."""

    grid: DyadicGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size != len(self.grid):
            raise ValueError(f"expected {len(self.grid)} values, got shape {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def level(self) -> int:
        return self.grid.level

    def value_at(self, t) -> float:
        return float(self.values[self.grid.index_of(t)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time,value\n")
        for t, v in zip(self.times, self.values):
            buf.write(f"{_fmt(t)},{_fmt(v)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, horizon: float | None = None) -> "SamplePath":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["time", "value"]:
            raise ValueError("expected header 'time,value'")
        times = [float(r[0]) for r in rows[1:]]
        vals = [float(r[1]) for r in rows[1:]]
        level = level_for_times(times, cap=40)
        grid = DyadicGrid(level, horizon if horizon is not None else times[-1])
        if len(grid) != len(times) or not np.array_equal(grid.times, np.asarray(times)):
            raise ValueError("CSV times are not a full dyadic grid")
        return cls(grid, np.asarray(vals))


class PathSampler:
    """Monte-Carlo face of a process on ``[0, horizon]``.

    Subclasses implement ``sample(level, rng)``.  Samplers hold no mutable
    state, so one instance can serve many threads as long as each thread
    passes its own generator.
    """

    horizon: float = 1.0
    gaussian_increments: bool = False
    name: str = "sampler"

    def sample(self, level: int, rng: np.random.Generator) -> SamplePath:
        raise NotImplementedError

    def grid(self, level: int) -> DyadicGrid:
        return DyadicGrid(level, self.horizon)


class ZeroSampler(PathSampler):
    name = "zero"

    def __init__(self, horizon: float = 1.0):
        self.horizon = horizon

    def sample(self, level, rng):
        g = self.grid(level)
        return SamplePath(g, np.zeros(len(g)))


class LinearGaussianSampler(PathSampler):
    """``X_t = t * Z`` with one shared standard normal ``Z`` per path."""

    name = "linear"

    def __init__(self, horizon: float = 1.0):
        self.horizon = horizon

    def sample(self, level, rng):
        g = self.grid(level)
        return SamplePath(g, g.times * rng.standard_normal())


class OffsetSampler(PathSampler):
    """Another sampler shifted by a constant (breaks ``X_0 = 0``)."""

    name = "offset"

    def __init__(self, base: PathSampler, offset: float):
        self.base = base
        self.offset = offset
        self.horizon = base.horizon
        self.gaussian_increments = base.gaussian_increments

    def sample(self, level, rng):
        p = self.base.sample(level, rng)
        return SamplePath(p.grid, p.values + self.offset)


def iter_paths(sampler: PathSampler, level: int, nsamples: int, seed: int) -> Iterator[SamplePath]:
    """Paths ``0..nsamples-1``; path ``i`` always uses stream ``(seed, i)``."""
    for i in range(nsamples):
        yield sampler.sample(level, stream(seed, i))


def values_at(sampler: PathSampler, times: Sequence[float], nsamples: int, seed: int) -> np.ndarray:
    """``(nsamples, len(times))`` array of path values at the given dyadic times."""
    level = level_for_times(times)
    grid = sampler.grid(level)
    cols = [grid.index_of(t) for t in times]
    out = np.empty((nsamples, len(cols)))
    for i, path in enumerate(iter_paths(sampler, level, nsamples, seed)):
        out[i] = path.values[cols]
    return out


@dataclass(frozen=True)
class IncrementReport:
    times: tuple
    nsamples: int
    seed: int
    correlations: tuple  # ((i, j), r, p)
    chi2: tuple  # ((i, j), statistic, p)
    corr_bound: float
    independent: bool
    vacuous: bool

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "nsamples": self.nsamples,
            "seed": self.seed,
            "correlations": [{"pair": list(p), "r": r, "p": pv} for p, r, pv in self.correlations],
            "chi2": [{"pair": list(p), "statistic": s, "p": pv} for p, s, pv in self.chi2],
            "corr_bound": self.corr_bound,
            "independent": self.independent,
            "vacuous": self.vacuous,
        }


def _median_split_chi2(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    hi_a = a > np.median(a)
    hi_b = b > np.median(b)
    table = np.array(
        [
            [np.sum(hi_a & hi_b), np.sum(hi_a & ~hi_b)],
            [np.sum(~hi_a & hi_b), np.sum(~hi_a & ~hi_b)],
        ]
    )
    if (table.sum(axis=0) == 0).any() or (table.sum(axis=1) == 0).any():
        return 0.0, 1.0
    res = stats.chi2_contingency(table, correction=False)
    return float(res.statistic), float(res.pvalue)


def independent_increments_test(sampler: PathSampler, times: Sequence[float], nsamples: int, seed: int) -> IncrementReport:
    """Pairwise correlation and median-split chi-square tests on increments.

    Increments are ``X_{t_i} - X_{t_{i-1}}``.  They are declared independent
    when every pairwise |r| is below ``4 / sqrt(nsamples)``.
    """
    times = tuple(float(t) for t in times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    if len(times) < 2:
        raise ValueError("need at least two times")
    bound = 4.0 / math.sqrt(nsamples)
    if len(times) == 2:
        return IncrementReport(times, nsamples, seed, (), (), bound, True, True)
    vals = values_at(sampler, times, nsamples, seed)
    inc = np.diff(vals, axis=1)
    corrs, chis = [], []
    for i in range(inc.shape[1]):
        for j in range(i + 1, inc.shape[1]):
            a, b = inc[:, i], inc[:, j]
            if np.std(a) == 0 or np.std(b) == 0:
                r, p = 0.0, 1.0
            else:
                res = stats.pearsonr(a, b)
                r, p = float(res.statistic), float(res.pvalue)
            corrs.append(((i, j), r, p))
            chis.append(((i, j),) + _median_split_chi2(a, b))
    independent = all(abs(r) < bound for _, r, _ in corrs)
    return IncrementReport(times, nsamples, seed, tuple(corrs), tuple(chis), bound, independent, False)
