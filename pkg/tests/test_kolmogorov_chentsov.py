import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kolmo.brownian import BrownianSampler, refined_path
from kolmo.dyadics import dyadic_grid
from kolmo.kolmogorov_chentsov import (
    HolderEstimate,
    KCParams,
    an_bound,
    an_bound_raw,
    an_probability,
    chebyshev_tail_bound,
    dyadic_extension,
    gaussian_abs_moment,
    holder_constant,
    kc_moment_check,
)
from kolmo.processes import SamplePath, ZeroSampler

BROWNIAN_KC = KCParams(alpha=4, beta=1, C=3, gamma=0.2)


def brute_holder(values, times, gamma, max_gap=None):
    """Full O(m^2) scan over all pairs (s < t)."""
    best = 0.0
    for i in range(len(times)):
        for j in range(i + 1, len(times)):
            gap = times[j] - times[i]
            if max_gap is not None and gap > max_gap:
                continue
            best = max(best, abs(values[j] - values[i]) / gap**gamma)
    return best


def path_of(fn, n, T=1.0):
    g = dyadic_grid(n, T)
    return SamplePath(g, fn(g.times))


# -- Hölder constants ---------------------------------------------------------------------


def test_holder_examples():
    assert holder_constant(path_of(lambda t: 2 * t, 5), 1.0).constant == pytest.approx(2)
    assert holder_constant(path_of(lambda t: 0 * t + 3, 5), 0.5).constant == 0
    est = holder_constant(path_of(np.sqrt, 6), 0.5)
    assert est.constant == pytest.approx(1.0, abs=1e-12)
    assert est.argmax == (0.0, 1 / 64)
    assert est.scope is None


def test_holder_rejects_bad_gamma():
    p = path_of(lambda t: t, 3)
    for g in (0, -0.1, 1.5):
        with pytest.raises(ValueError):
            holder_constant(p, g)


@settings(max_examples=60)
@given(st.integers(1, 6), st.floats(0.05, 1.0), st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.5]))
def test_holder_matches_brute_force(n, gamma, seed, T):
    rng = np.random.default_rng(seed)
    g = dyadic_grid(n, T)
    vals = np.cumsum(rng.standard_normal(len(g)))
    est = holder_constant(SamplePath(g, vals), gamma)
    assert est.constant == pytest.approx(brute_holder(vals, g.times, gamma), rel=1e-12)
    s, t = est.argmax
    ratio = abs(vals[g.index_of(t)] - vals[g.index_of(s)]) / (t - s) ** gamma
    assert ratio == pytest.approx(est.constant, rel=1e-12)


@settings(max_examples=40)
@given(st.integers(1, 6), st.floats(0.05, 0.5), st.floats(0.05, 0.5), st.integers(0, 2**32 - 1))
def test_holder_monotone_in_gamma(n, g1, dg, seed):
    rng = np.random.default_rng(seed)
    g = dyadic_grid(n, 1.0)
    p = SamplePath(g, rng.standard_normal(len(g)))
    assert holder_constant(p, g1).constant <= holder_constant(p, g1 + dg).constant * (1 + 1e-12)


@settings(max_examples=40)
@given(st.integers(1, 6), st.floats(0.05, 1.0), st.floats(0.01, 1.2), st.integers(0, 2**32 - 1))
def test_holder_local_scope(n, gamma, eps, seed):
    rng = np.random.default_rng(seed)
    g = dyadic_grid(n, 1.0)
    vals = rng.standard_normal(len(g))
    p = SamplePath(g, vals)
    local = holder_constant(p, gamma, scope=eps)
    # a pair (s, t) fits in a ball B_u(eps) around a grid point u iff ceil(j/2) h < eps
    h = g.step
    best = 0.0
    for i in range(len(g)):
        for j in range(i + 1, len(g)):
            if math.ceil((j - i) / 2) * h < eps:
                best = max(best, abs(vals[j] - vals[i]) / ((j - i) * h) ** gamma)
    assert local.constant == pytest.approx(best, rel=1e-12, abs=1e-300)
    assert local.constant <= holder_constant(p, gamma).constant
    if eps >= 1.0:
        assert local.constant == holder_constant(p, gamma).constant


def test_holder_gives_uniform_continuity():
    path = BrownianSampler().path(0, 8)
    est = holder_constant(path, 0.4)
    eps = 0.3
    delta = (eps / est.constant) ** (1 / 0.4)
    x, t = path.values, path.times
    gaps = np.abs(t[:, None] - t[None, :])
    diffs = np.abs(x[:, None] - x[None, :])
    assert (diffs[gaps < delta] < eps).all()


# -- moment condition -------------------------------------------------------------------------


def test_gaussian_abs_moment():
    assert gaussian_abs_moment(0.5, 4) == 0.75
    assert gaussian_abs_moment(2.0, 2) == 2.0
    assert gaussian_abs_moment(1.0, 8) == 105
    with pytest.raises(ValueError):
        gaussian_abs_moment(1.0, 3)


def test_moment_check_brownian_alpha4():
    [row] = kc_moment_check(BrownianSampler(), BROWNIAN_KC, [(0, 0.5)], 10_000, seed=0)
    assert row.bound == pytest.approx(0.75) and row.closed_form == pytest.approx(0.75)
    assert row.passed
    assert abs(row.estimate - 0.75) < 3 * row.stderr + 1e-12
    assert row.margin == pytest.approx(row.bound - row.estimate)


def test_moment_check_equal_times():
    [row] = kc_moment_check(BrownianSampler(), BROWNIAN_KC, [(0.25, 0.25)], 100, seed=0)
    assert row.estimate == 0 and row.passed


def test_moment_check_alpha2_negative_control():
    params = KCParams(alpha=2, beta=1, C=1, gamma=0.2)
    rows = kc_moment_check(BrownianSampler(), params, [(0, 2**-6)], 5000, seed=1)
    # E|B_t - B_s|^2 = h is far above h^2 for small gaps
    assert not rows[0].passed


def test_moment_check_errors():
    with pytest.raises(ValueError):
        kc_moment_check(BrownianSampler(), BROWNIAN_KC, [(0, 1.5)], 10, seed=0)
    with pytest.raises(ValueError):
        kc_moment_check(BrownianSampler(), KCParams(alpha=3, beta=1, C=3, gamma=0.2), [(0, 0.5)], 10, seed=0)


def test_moment_row_json():
    [row] = kc_moment_check(BrownianSampler(), BROWNIAN_KC, [(0, 0.5)], 50, seed=0)
    d = json.loads(json.dumps(row.to_dict()))
    assert d["pair"] == [0, 0.5] and {"estimate", "bound", "margin"} <= set(d)


# -- tail and union bounds -------------------------------------------------------------------


def test_chebyshev_examples():
    assert chebyshev_tail_bound(BROWNIAN_KC, 2**-10, 2**-2) == pytest.approx(3 * 2**-12)
    assert chebyshev_tail_bound(BROWNIAN_KC, 0, 0.1) == 0
    assert chebyshev_tail_bound(BROWNIAN_KC, 1, 0.01) == 1  # clipped
    with pytest.raises(ValueError):
        chebyshev_tail_bound(BROWNIAN_KC, 0.1, 0)


@given(st.floats(1e-4, 1), st.floats(1e-3, 10), st.floats(1.001, 10))
def test_chebyshev_decreasing_in_eps(gap, eps, factor):
    assert chebyshev_tail_bound(BROWNIAN_KC, gap, eps * factor) <= chebyshev_tail_bound(BROWNIAN_KC, gap, eps)


def test_an_bound_examples():
    assert an_bound(BROWNIAN_KC, 10, 1.0) == pytest.approx(0.75)
    assert an_bound(BROWNIAN_KC, 20, 1.0) == pytest.approx(0.1875)
    ratios = [an_bound(BROWNIAN_KC, n + 1, 1.0) / an_bound(BROWNIAN_KC, n, 1.0) for n in range(4, 40)]
    assert ratios[-1] == pytest.approx(2**-0.2, rel=1e-9)
    assert all(r < 1 for r in ratios)


def test_an_bound_boundary_does_not_decay():
    vals = [an_bound_raw(4, 1, 3, 0.25, n, 1.0) for n in (4, 10, 20)]
    assert vals == pytest.approx([3.0, 3.0, 3.0])
    with pytest.raises(ValueError):
        KCParams(alpha=4, beta=1, C=3, gamma=0.25)
    with pytest.raises(ValueError):
        KCParams(alpha=4, beta=1, C=3, gamma=0.26)


def test_an_bound_ratio_is_union_of_chebyshev():
    n, T = 7, 2.5
    per = chebyshev_tail_bound(BROWNIAN_KC, 2.0**-n, 2.0 ** (-0.2 * n))
    assert an_bound(BROWNIAN_KC, n, T) == pytest.approx(math.floor(2**n * T) * per)


def test_an_probability_zero_sampler():
    for n in (0, 3, 9):
        rep = an_probability(ZeroSampler(), n, 0.2, 1.0, 1000, seed=0)
        assert rep.empirical == 0 and rep.bad == 0 and rep.passed is None


def test_an_probability_brownian_level10():
    rep = an_probability(BrownianSampler(), 10, 0.2, 1.0, 10_000, seed=0, params=BROWNIAN_KC)
    assert rep.bound == pytest.approx(0.75)
    assert rep.passed


def test_an_probability_beyond_half():
    rep = an_probability(BrownianSampler(), 10, 0.6, 1.0, 2000, seed=0)
    assert rep.empirical > 0.99
    low = an_probability(BrownianSampler(), 4, 0.6, 1.0, 2000, seed=0)
    assert low.empirical <= rep.empirical


def test_an_report_json_fields():
    rep = an_probability(BrownianSampler(), 6, 0.2, 1.0, 1000, seed=5, params=BROWNIAN_KC)
    d = json.loads(json.dumps(rep.to_dict()))
    assert {"n", "gamma", "empirical", "bound", "nsamples", "seed"} <= set(d)
    assert d["empirical"] == d["bad"] / d["nsamples"]


def test_an_probability_seed_determinism():
    a = an_probability(BrownianSampler(), 8, 0.4, 1.0, 1000, seed=9)
    b = an_probability(BrownianSampler(), 8, 0.4, 1.0, 1000, seed=9)
    assert a == b


# -- dyadic extension ---------------------------------------------------------------------


def test_dyadic_extension_examples():
    path = path_of(lambda t: t**2, 2)
    holder = HolderEstimate(0.5, 2.0, (0.0, 1.0))
    assert dyadic_extension(path, 0.5, holder) == (0.25, 0.0)
    value, err = dyadic_extension(path, 0.3, holder)
    assert value == 1 / 16 and err == pytest.approx(2 * 0.05**0.5)
    assert err == pytest.approx(0.447, abs=1e-3)
    with pytest.raises(ValueError):
        dyadic_extension(path, 1.2, holder)


def test_dyadic_extension_consistent_and_decaying():
    chain = refined_path(BrownianSampler(seed=3), 0, 6, 12)
    t = 0.3
    coarse, fine = chain[0], chain[-1]
    hc = holder_constant(coarse, 0.4)
    hf = holder_constant(fine, 0.4)
    vc, ec = dyadic_extension(coarse, t, hc)
    vf, ef = dyadic_extension(fine, t, hf)
    assert abs(vc - vf) <= ec + ef
    # fixed constant: error bound scales like C 2^(-gamma n)
    errs = [dyadic_extension(p, t, hf)[1] for p in chain]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= hf.constant * 2.0 ** (-0.4 * 12)
