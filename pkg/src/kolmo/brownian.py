"""Brownian motion on dyadic grids.

Level-``n`` paths are cumulative sums of i.i.d. N(0, 2^-n) increments: the
finite product of the kernels ``delta_w * N(0, t)`` started at 0.  Paths are
refined one level at a time with the bridge midpoint law, so nested grids
stay consistent.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._rng import derive_seed, stream
from .dyadics import DyadicGrid
from .kolmogorov_chentsov import holder_constant
from .measure import ks_statistic, ks_two_sample, normal_cdf
from .processes import IncrementReport, PathSampler, SamplePath, independent_increments_test, values_at

__all__ = [
    "MAX_SAMPLE_LEVEL",
    "BrownianSampler",
    "ValidationConfig",
    "ValidationReport",
    "sample_grid",
    "refine_bridge",
    "refined_path",
    "validate",
]

MAX_SAMPLE_LEVEL = 30


class BrownianSampler(PathSampler):
    name = "brownian"
    gaussian_increments = True

    def __init__(self, horizon: float = 1.0, seed: int = 0):
        if not horizon > 0:
            raise ValueError("horizon must be positive")
        self.horizon = float(horizon)
        self.seed = seed

    def sample(self, level: int, rng: np.random.Generator) -> SamplePath:
        return sample_grid(self, level, rng)

    def path(self, index: int, level: int) -> SamplePath:
        """Path ``index`` of this sampler's base seed, sampled directly at ``level``."""
        return sample_grid(self, level, stream(self.seed, index))

    def __repr__(self):
        return f"BrownianSampler(horizon={self.horizon}, seed={self.seed})"


def sample_grid(sampler: PathSampler, level: int, rng: np.random.Generator) -> SamplePath:
    if not 0 <= level <= MAX_SAMPLE_LEVEL:
        raise ValueError(f"level must lie in [0, {MAX_SAMPLE_LEVEL}]")
    grid = DyadicGrid(level, sampler.horizon)
    steps = rng.standard_normal(len(grid) - 1) * math.sqrt(grid.step)
    values = np.empty(len(grid))
    values[0] = 0.0
    np.cumsum(steps, out=values[1:])
    return SamplePath(grid, values)


def refine_bridge(path: SamplePath, rng: np.random.Generator) -> SamplePath:
    """One level finer: existing points kept bit-for-bit, midpoints drawn from
    N((a + b) / 2, 2^-(n+2)).  A new point past the last coarse one (when the
    horizon is not on the coarse grid) gets a free N(0, 2^-(n+1)) step."""
    n = path.level
    fine = DyadicGrid(n + 1, path.grid.horizon)
    old = path.values
    m_old = old.size
    out = np.empty(len(fine))
    out[0 : 2 * m_old - 1 : 2] = old
    if m_old > 1:
        mids = 0.5 * (old[:-1] + old[1:]) + rng.standard_normal(m_old - 1) * math.sqrt(2.0 ** -(n + 2))
        out[1 : 2 * m_old - 1 : 2] = mids
    if len(fine) > 2 * m_old - 1:
        out[-1] = old[-1] + rng.standard_normal() * math.sqrt(fine.step)
    return SamplePath(fine, out)


def refined_path(sampler: PathSampler, index: int, base_level: int, target_level: int, seed: int | None = None) -> list[SamplePath]:
    """Path ``index`` sampled at ``base_level`` then bridge-refined up to ``target_level``.

    Returns the whole chain, coarsest first.  Refinement to level ``k`` uses
    stream ``(seed, index, k)``.
    """
    seed = getattr(sampler, "seed", 0) if seed is None else seed
    chain = [sampler.sample(base_level, stream(seed, index))]
    for k in range(base_level + 1, target_level + 1):
        chain.append(refine_bridge(chain[-1], stream(seed, index, k)))
    return chain


# -- validation -----------------------------------------------------------------


@dataclass(frozen=True)
class ValidationConfig:
    times: tuple = (0.0, 0.25, 0.5, 1.0)
    nsamples: int = 4000
    seed: int = 0
    levels: tuple = (8, 9, 10, 11, 12)
    gammas: tuple = (0.4, 0.6)
    holder_paths: int = 20

    def __post_init__(self):
        if self.nsamples < 1000:
            raise ValueError("validation needs nsamples >= 1000")
        if len(self.times) < 2 or self.times[0] != 0:
            raise ValueError("times must start at 0 and contain at least two points")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if list(self.levels) != sorted(self.levels) or not self.levels:
            raise ValueError("levels must be a nonempty increasing sequence")


@dataclass
class ValidationReport:
    w0_ok: bool
    increment_ks: list
    independence: dict
    stationarity_ks: list
    holder: dict
    seed: int
    config: dict
    passed: bool = field(default=False)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


P_THRESHOLD = 0.01


def _holder_trend(sampler: PathSampler, cfg: ValidationConfig) -> dict:
    seed = derive_seed(cfg.seed, 3)
    lo, hi = cfg.levels[0], cfg.levels[-1]
    consts = {g: np.zeros((cfg.holder_paths, len(cfg.levels))) for g in cfg.gammas}
    for i in range(cfg.holder_paths):
        chain = refined_path(sampler, i, lo, hi, seed=seed)
        for col, lvl in enumerate(cfg.levels):
            path = chain[lvl - lo]
            for g in cfg.gammas:
                consts[g][i, col] = holder_constant(path, g).constant
    out = {}
    for g in cfg.gammas:
        c = consts[g]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = c[:, 1:] / c[:, :-1]
        finite = ratios[np.isfinite(ratios) & (ratios > 0)]
        mean_log2 = float(np.mean(np.log2(finite))) if finite.size else 0.0
        max_ratio = float(np.max(finite)) if finite.size else 1.0
        entry = {
            "levels": list(cfg.levels),
            "mean_constant": [float(v) for v in c.mean(axis=0)],
            "max_level_ratio": max_ratio,
            "mean_log2_growth": mean_log2,
        }
        if g < 0.5:
            entry["stable"] = max_ratio < 2.0
        else:
            entry["growing"] = mean_log2 >= 0.05
        out[str(g)] = entry
    return out


def validate(sampler: PathSampler, config: ValidationConfig | None = None) -> ValidationReport:
    """Check W_0 = 0, Gaussian increments, independence, stationarity and the
    Hölder trend below and above exponent 1/2.  Failures are report fields."""
    cfg = config or ValidationConfig()
    times = tuple(float(t) for t in cfg.times)
    vals = values_at(sampler, times, cfg.nsamples, cfg.seed)
    w0_ok = bool(np.all(vals[:, 0] == 0.0))

    inc_rows = []
    for (i, s), t in zip(enumerate(times), times[1:]):
        inc = vals[:, i + 1] - vals[:, i]
        ks = ks_statistic(inc, normal_cdf(0.0, t - s))
        sd = float(np.std(inc))
        scaled = ks_statistic((inc - inc.mean()) / sd, normal_cdf()) if sd > 0 else None
        inc_rows.append(
            {
                "pair": [s, t],
                "d": ks.d,
                "p": ks.p,
                "scaled_p": scaled.p if scaled else 0.0,
                "passed": ks.p > P_THRESHOLD,
            }
        )

    indep: IncrementReport = independent_increments_test(sampler, times, cfg.nsamples, derive_seed(cfg.seed, 1))

    # same-length windows started at 0, against an independent batch
    ref_seed = derive_seed(cfg.seed, 2)
    stat_rows = []
    for (i, s), t in zip(enumerate(times), times[1:]):
        if s == 0:
            continue
        ref = values_at(sampler, (0.0, t - s), cfg.nsamples, ref_seed)
        ks = ks_two_sample(vals[:, i + 1] - vals[:, i], ref[:, 1] - ref[:, 0])
        stat_rows.append({"window": [s, t], "reference": [0.0, t - s], "d": ks.d, "p": ks.p, "passed": ks.p > P_THRESHOLD})

    holder = _holder_trend(sampler, cfg)

    passed = (
        w0_ok
        and all(r["passed"] for r in inc_rows)
        and indep.independent
        and all(r["passed"] for r in stat_rows)
        and all(v.get("stable", True) and v.get("growing", True) for v in holder.values())
    )
    return ValidationReport(
        w0_ok=w0_ok,
        increment_ks=inc_rows,
        independence=indep.to_dict(),
        stationarity_ks=stat_rows,
        holder=holder,
        seed=cfg.seed,
        config=asdict(cfg),
        passed=bool(passed),
    )
