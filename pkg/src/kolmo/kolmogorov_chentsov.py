"""Empirical Kolmogorov-Chentsov machinery for real-valued paths.

The distance is ``|x - y|`` throughout.  Monte-Carlo inequalities pass when
the estimate is within three standard errors of the bound.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numba
import numpy as np

from .dyadics import DyadicGrid, level_for_times, nearest_dyadic
from .processes import PathSampler, SamplePath, iter_paths

__all__ = [
    "HolderEstimate",
    "KCParams",
    "AnReport",
    "MomentRow",
    "holder_constant",
    "kc_moment_check",
    "chebyshev_tail_bound",
    "an_bound",
    "an_bound_raw",
    "an_probability",
    "dyadic_extension",
    "gaussian_abs_moment",
    "SIGMA_SLACK",
]

SIGMA_SLACK = 3.0


@dataclass(frozen=True)
class HolderEstimate:
    gamma: float
    constant: float
    argmax: tuple[float, float]
    scope: float | None = None  # None = global, else local window radius

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class KCParams:
    """Moment-condition constants; requires ``0 < gamma < beta / alpha``."""

    alpha: float
    beta: float
    C: float
    gamma: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.C > 0):
            raise ValueError("alpha, beta and C must be positive")
        if not 0 < self.gamma < self.beta / self.alpha:
            raise ValueError(f"gamma={self.gamma} must lie in (0, beta/alpha = {self.beta / self.alpha})")


@numba.njit(cache=True)
def _holder_scan(x, h, gamma, max_lag):
    m = x.shape[0]
    spread = x.max() - x.min()
    best = 0.0
    bi = 0
    bj = 1
    last = min(max_lag, m - 1)
    for j in range(1, last + 1):
        denom = (j * h) ** gamma
        # no lag >= j can beat spread / (j h)^gamma
        if spread / denom <= best:
            break
        mx = 0.0
        arg = 0
        for k in range(m - j):
            d = abs(x[k + j] - x[k])
            if d > mx:
                mx = d
                arg = k
        r = mx / denom
        if r > best * (1.0 + 1e-12):
            best = r
            bi = arg
            bj = arg + j
    return best, bi, bj


def holder_constant(path: SamplePath, gamma: float, scope: float | None = None) -> HolderEstimate:
    """Smallest ``C`` with ``|x_s - x_t| <= C |s - t|^gamma`` over the grid pairs.

    With ``scope=eps`` only pairs lying together in some ball ``B_t(eps)``
    around a grid point count; on a uniform grid that is every pair whose
    lag ``j`` satisfies ``ceil(j / 2) * h < eps``.
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    x = np.ascontiguousarray(path.values, dtype=float)
    m = x.size
    if m < 2:
        raise ValueError("need at least two points")
    h = path.grid.step
    max_lag = m - 1
    if scope is not None:
        if not scope > 0:
            raise ValueError("local window radius must be positive")
        # largest j with ceil(j/2) * h < eps
        half = math.ceil(scope / h) - 1
        max_lag = min(m - 1, 2 * half)
        if max_lag < 1:
            return HolderEstimate(gamma, 0.0, (0.0, 0.0), scope)
    const, i, j = _holder_scan(x, h, float(gamma), max_lag)
    times = path.times
    return HolderEstimate(gamma, float(const), (float(times[i]), float(times[j])), scope)


def gaussian_abs_moment(variance: float, alpha: int) -> float:
    """``E|N(0, variance)|^alpha`` for even alpha: ``(alpha-1)!! variance^(alpha/2)``."""
    if alpha % 2:
        raise ValueError("closed form is only provided for even alpha")
    return math.prod(range(alpha - 1, 0, -2)) * variance ** (alpha // 2)


@dataclass(frozen=True)
class MomentRow:
    pair: tuple[float, float]
    estimate: float
    bound: float
    margin: float
    stderr: float
    closed_form: float | None
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pair"] = list(self.pair)
        return d


def kc_moment_check(
    sampler: PathSampler,
    params: KCParams,
    pairs: Sequence[tuple[float, float]],
    nsamples: int,
    seed: int,
) -> list[MomentRow]:
    """Monte-Carlo estimate of ``E|X_t - X_s|^alpha`` against ``C|t - s|^(1+beta)``."""
    for s, t in pairs:
        if not (0 <= s <= sampler.horizon and 0 <= t <= sampler.horizon):
            raise ValueError(f"pair {(s, t)} lies outside [0, {sampler.horizon}]")
    if sampler.gaussian_increments and params.alpha not in (2, 4, 6, 8):
        raise ValueError("alpha must be one of 2, 4, 6, 8 for Gaussian-incremented samplers")
    times = sorted({float(v) for pair in pairs for v in pair})
    level = level_for_times(times)
    grid = sampler.grid(level)
    col = {t: grid.index_of(t) for t in times}
    vals = np.empty((nsamples, len(times)))
    cols = [col[t] for t in times]
    for i, path in enumerate(iter_paths(sampler, level, nsamples, seed)):
        vals[i] = path.values[cols]
    pos = {t: k for k, t in enumerate(times)}
    rows = []
    for s, t in pairs:
        d = np.abs(vals[:, pos[float(t)]] - vals[:, pos[float(s)]]) ** params.alpha
        est = float(d.mean())
        se = float(d.std(ddof=1) / math.sqrt(nsamples)) if nsamples > 1 else 0.0
        bound = params.C * abs(t - s) ** (1 + params.beta)
        closed = None
        if sampler.gaussian_increments and float(params.alpha).is_integer() and int(params.alpha) % 2 == 0:
            closed = gaussian_abs_moment(abs(t - s), int(params.alpha))
        rows.append(MomentRow((s, t), est, bound, bound - est, se, closed, est <= bound + SIGMA_SLACK * se))
    return rows


def chebyshev_tail_bound(params: KCParams, gap: float, eps: float) -> float:
    """``C gap^(1+beta) / eps^alpha`` clipped to ``[0, 1]``: bounds ``P(|X_s - X_t| >= eps)``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    raw = params.C * gap ** (1 + params.beta) / eps**params.alpha
    return min(max(raw, 0.0), 1.0)


def an_bound_raw(alpha: float, beta: float, C: float, gamma: float, n: int, T: float) -> float:
    """Union bound ``floor(2^n T) C 2^(-n(1+beta-alpha gamma))`` without the parameter check."""
    if n < 0:
        raise ValueError("level must be nonnegative")
    count = DyadicGrid(n, T).k_max
    return count * C * 2.0 ** (-n * (1 + beta - alpha * gamma))


def an_bound(params: KCParams, n: int, T: float) -> float:
    """Union bound on ``P(A_n)``: each of the ``floor(2^n T)`` adjacent increments
    at level ``n`` exceeds ``2^(-gamma n)`` with probability at most the
    Chebyshev-type tail bound."""
    return an_bound_raw(params.alpha, params.beta, params.C, params.gamma, n, T)


@dataclass(frozen=True)
class AnReport:
    n: int
    gamma: float
    empirical: float
    bad: int
    nsamples: int
    seed: int
    bound: float | None = None

    @property
    def sigma(self) -> float:
        p = min(max(self.bound if self.bound is not None else self.empirical, 0.0), 1.0)
        return math.sqrt(p * (1 - p) / self.nsamples)

    @property
    def passed(self) -> bool | None:
        if self.bound is None:
            return None
        return self.empirical <= self.bound + SIGMA_SLACK * self.sigma

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "gamma": self.gamma,
            "empirical": self.empirical,
            "bound": self.bound,
            "nsamples": self.nsamples,
            "seed": self.seed,
            "bad": self.bad,
            "sigma": self.sigma,
            "passed": self.passed,
        }


def an_probability(
    sampler: PathSampler,
    n: int,
    gamma: float,
    T: float,
    nsamples: int,
    seed: int,
    params: KCParams | None = None,
) -> AnReport:
    """Fraction of level-``n`` paths with some adjacent increment ``>= 2^(-gamma n)``.

    Ties count as bad.  When ``params`` is given the report carries
    ``an_bound(params, n, T)`` (with ``params.gamma`` replaced by ``gamma``).
    """
    if nsamples < 1:
        raise ValueError("nsamples must be positive")
    if T > sampler.horizon:
        raise ValueError("T exceeds the sampler's horizon")
    threshold = 2.0 ** (-gamma * n)
    k_max = DyadicGrid(n, T).k_max
    bad = 0
    for path in iter_paths(sampler, n, nsamples, seed):
        if k_max == 0:
            continue
        inc = np.abs(np.diff(path.values[: k_max + 1]))
        if inc.max() >= threshold:
            bad += 1
    bound = None
    if params is not None:
        bound = an_bound_raw(params.alpha, params.beta, params.C, gamma, n, T)
    return AnReport(n, gamma, bad / nsamples, bad, nsamples, seed, bound)


def dyadic_extension(path: SamplePath, t: float, holder: HolderEstimate) -> tuple[float, float]:
    """Value at the nearest grid point, with error bound ``C dist^gamma``."""
    point, dist = nearest_dyadic(t, path.grid)
    value = path.value_at(point.value)
    if dist == 0:
        return value, 0.0
    return value, holder.constant * dist**holder.gamma
