import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paritymem import analytic as am
from paritymem.analytic import CodeParams, EfficiencyParams


# -- exact rational reference implementation ---------------------------


def frac_parts(n, q, e1, e2):
    """Eqs. for P_Qs, R, P_ff, P_Qf, P_E summed term by term in exact arithmetic."""
    e1, e2 = Fraction(e1), Fraction(e2)
    a = e1 * e2 / 2
    qs = sum(a**i * e1 ** (n - i) for i in range(1, n))
    r = sum(math.comb(q, k) * (1 - e2) ** (k * n) * (1 - (1 - e2) ** n) ** (q - k) for k in range(1, q + 1))
    t1 = sum(a ** (j - 1) * (1 - e1 * e2) * (1 - e1) ** (n - j) for j in range(1, n))
    t2 = sum(
        a ** (j + 1) * sum(e1**k * (1 - e1) ** (n - 1 - j - k) for k in range(0, n - 1 - j)) for j in range(0, n - 1)
    )
    t3 = a ** (n - 1) * (1 - e1)
    ff = t1 + r * t2 + t3
    qf = 1 - qs - ff
    d = 1 - (1 - e1) ** n
    pe = sum(qf**j * qs * d ** (q - 1 - j) for j in range(q))
    return qs, r, ff, qf, pe


effs = st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)).map(lambda t: EfficiencyParams(*t))


# -- efficiency and code parameters ------------------------------------


def test_eta_derivation():
    e = EfficiencyParams(0.9, 0.8, 0.5)
    assert e.eta1 == pytest.approx(0.36)
    assert e.eta2 == pytest.approx(0.72)
    u = EfficiencyParams.uniform(0.9)
    assert (u.eta1, u.eta2) == pytest.approx((0.729, 0.81))
    l = EfficiencyParams.lumped(0.9)
    assert (l.eta1, l.eta2) == pytest.approx((0.9, 0.9))
    f = EfficiencyParams.from_etas(0.5, 0.8)
    assert (f.eta1, f.eta2) == pytest.approx((0.5, 0.8))


@pytest.mark.parametrize("bad", [dict(eta_d=1.2), dict(eta_s=-0.1), dict(eta_m=2)])
def test_eta_out_of_range(bad):
    with pytest.raises(ValueError):
        EfficiencyParams(**bad)


def test_from_etas_order():
    with pytest.raises(ValueError):
        EfficiencyParams.from_etas(0.9, 0.5)


@pytest.mark.parametrize("n,q", [(1, 1), (2, 0), (2.5, 1)])
def test_code_params_invalid(n, q):
    with pytest.raises(ValueError):
        CodeParams(n, q)


# -- component sums ----------------------------------------------------


@pytest.mark.parametrize("n,expected", [(2, 0.5), (3, 0.75)])
def test_p_qs_unit(n, expected):
    assert am.p_qs(CodeParams(n), EfficiencyParams()) == pytest.approx(expected, abs=1e-15)


def test_p_qs_rational():
    eff = EfficiencyParams.from_etas(0.9, 0.95)
    exact = frac_parts(5, 1, eff.eta1, eff.eta2)[0]
    assert am.p_qs(CodeParams(5), eff) == pytest.approx(float(exact), rel=1e-14)


def test_r_term_limits():
    for n in (2, 5):
        for q in (1, 3, 6):
            assert am.r_term(CodeParams(n, q), EfficiencyParams()) == 0.0
            assert am.r_term(CodeParams(n, q), EfficiencyParams(0.0)) == pytest.approx(1.0)


def test_r_term_binomial():
    eff = EfficiencyParams.from_etas(0.9, 0.9)
    exact = frac_parts(3, 2, eff.eta1, eff.eta2)[1]
    assert am.r_term(CodeParams(3, 2), eff) == pytest.approx(float(exact), rel=1e-13)


@given(st.integers(2, 10), st.integers(1, 2000), st.floats(0, 1))
def test_r_term_closed_form(n, q, e2):
    eff = EfficiencyParams.from_etas(e2, e2)
    closed = 1 - (1 - (1 - e2) ** n) ** q
    assert am.r_term(CodeParams(n, q), eff) == pytest.approx(closed, abs=1e-12)


def test_p_ff_limits():
    for n in (2, 4, 7):
        assert am.p_ff(CodeParams(n, 2), EfficiencyParams()) == 0.0
        assert am.p_ff(CodeParams(n, 2), EfficiencyParams(0.0)) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.integers(1, 6), st.fractions(0, 1, max_denominator=50), st.fractions(0, 1, max_denominator=50))
def test_breakdown_matches_rational_oracle(n, q, f1, f2):
    e1, e2 = sorted((f1, f2))
    eff = EfficiencyParams.from_etas(float(e1), float(e2))
    qs, r, ff, qf, pe = frac_parts(n, q, eff.eta1, eff.eta2)
    b = am.p_e(CodeParams(n, q), eff)
    assert b.p_qs == pytest.approx(float(qs), abs=1e-13)
    assert b.r_term == pytest.approx(float(r), abs=1e-13)
    assert b.p_ff == pytest.approx(float(ff), abs=1e-13)
    assert b.p_qf == pytest.approx(float(qf), abs=1e-13)
    assert b.p_e == pytest.approx(float(pe), abs=1e-13)


def test_decomposition_sweep():
    rng = np.random.default_rng(1000)
    for _ in range(1000):
        n, q = int(rng.integers(2, 21)), int(rng.integers(1, 11))
        eff = EfficiencyParams(*rng.random(3))
        b = am.p_e(CodeParams(n, q), eff)
        assert abs(b.p_qs + b.p_ff + b.p_qf - 1) < 1e-12
        for v in (b.p_qs, b.p_ff, b.p_qf, b.p_e, b.r_term):
            assert -1e-12 <= v <= 1 + 1e-12


@pytest.mark.parametrize("n", range(2, 9))
@pytest.mark.parametrize("q", range(1, 6))
def test_unit_efficiency_closed_form(n, q):
    assert am.p_e(CodeParams(n, q), EfficiencyParams()).p_e == pytest.approx(1 - 2.0 ** (-(n - 1) * q), abs=1e-12)
    exact = frac_parts(n, q, 1, 1)[4]
    assert exact == 1 - Fraction(1, 2 ** ((n - 1) * q))


@given(st.integers(2, 12), effs)
def test_q1_is_p_qs(n, eff):
    b = am.p_e(CodeParams(n, 1), eff)
    assert b.p_e == pytest.approx(b.p_qs, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 15), st.integers(1, 1000), st.floats(0.3, 1.0))
def test_log_closed_form_matches_series(n, q, eta):
    eff = EfficiencyParams.uniform(eta)
    series = am.p_e(CodeParams(n, q), eff).p_e
    if series > 1e-300:
        assert math.exp(am.log_p_e(n, q, eff)) == pytest.approx(series, rel=1e-9, abs=1e-300)


def test_large_q_uses_closed_form():
    eff = EfficiencyParams.uniform(0.95)
    b = am.p_e(CodeParams(10, 5000), eff)
    assert 0 < b.p_e < 1
    assert b.p_e == pytest.approx(math.exp(am.log_p_e(10, 5000, eff)))


# -- optimal q ---------------------------------------------------------


def test_optimal_q_unit_efficiency_takes_cap():
    assert am.optimal_q(2, EfficiencyParams(), 30) == (30, pytest.approx(1 - 2.0**-30))


def test_optimal_q_degenerate():
    assert am.optimal_q(4, EfficiencyParams(0.0), 50) == (1, 0.0)
    assert am.optimal_q(4, EfficiencyParams(0.0)) == (1, 0.0)


@pytest.mark.parametrize("n,eta", [(8, 0.9), (6, 0.95), (15, 0.97), (4, 0.85)])
def test_optimal_q_against_exhaustive_scan(n, eta):
    eff = EfficiencyParams.uniform(eta)
    vals = [am.p_e(CodeParams(n, q), eff).p_e for q in range(1, 251)]
    q_scan = int(np.argmax(vals)) + 1
    assert q_scan < 250
    q, pe = am.optimal_q(n, eff, 250)
    assert q == q_scan and pe == pytest.approx(vals[q - 1], rel=1e-14)
    # the unbounded search lands on the same peak value
    q_free, pe_free = am.optimal_q(n, eff)
    assert pe_free == pytest.approx(max(vals), rel=1e-13)
    # and the real-valued stationary point brackets the integer optimum
    qc = am.continuous_optimum(n, eff)
    assert math.floor(qc) <= q_scan <= math.ceil(qc) or pe_free == pytest.approx(max(vals), rel=1e-15)


def test_optimal_q_prefers_smaller_on_plateau():
    eff = EfficiencyParams.uniform(0.95)
    q, _ = am.optimal_q(22, eff)
    grid = np.unique(np.round(np.logspace(0, 8, 4000)))
    best = max(am.log_p_e(22, float(x), eff) for x in grid)
    assert am.log_p_e(22, q, eff) >= best - am.TIE_TOL
    assert am.log_p_e(22, q - 1, eff) < best - am.TIE_TOL


def test_optimal_q_rejects_bad_cap():
    with pytest.raises(ValueError):
        am.optimal_q(3, EfficiencyParams(), 0)


# -- threshold ----------------------------------------------------------


@pytest.fixture(scope="module")
def default_threshold():
    return am.threshold_search()


def test_threshold_default(default_threshold):
    r = default_threshold
    assert 0.81 <= r.eta_threshold <= 0.83
    assert r.scan_monotone
    assert r.p_e_at_threshold >= r.target
    assert (r.target, r.n_max, r.q_max, r.tol) == (0.99, 40, None, 1e-3)


def test_threshold_low_target_is_lower(default_threshold):
    r = am.threshold_search(target=0.5)
    assert r.eta_threshold < default_threshold.eta_threshold
    # direct check of the bracket on either side
    assert am.best_over_codes(r.eta_threshold - 2 * r.tol, 40, None)[2] < 0.5
    assert am.best_over_codes(r.eta_threshold, 40, None)[2] >= 0.5


def test_threshold_higher_target_is_higher(default_threshold):
    assert am.threshold_search(target=0.999).eta_threshold >= default_threshold.eta_threshold


def test_threshold_small_codes_need_more(default_threshold):
    r = am.threshold_search(n_max=2)
    assert r.eta_threshold > default_threshold.eta_threshold + 0.1
    assert r.best_n == 2


def test_threshold_small_q_cap_is_higher(default_threshold):
    assert am.threshold_search(q_max=50).eta_threshold > default_threshold.eta_threshold


def test_threshold_unreachable():
    with pytest.raises(am.ThresholdUnreachable):
        am.threshold_search(n_max=2, q_max=5, target=0.999)


@pytest.mark.parametrize("kw", [dict(target=1.0), dict(target=0.0), dict(tol=0), dict(n_max=1)])
def test_threshold_bad_arguments(kw):
    with pytest.raises(ValueError):
        am.threshold_search(**kw)


# -- crossover -----------------------------------------------------------


def test_crossover_default():
    r = am.passive_crossover()
    assert r.reachable and 0.94 <= r.eta_cross <= 0.98
    assert (r.baseline, r.profile, r.n, r.q) == ("eta2", "lumped", 5, 2)
    pe = am.p_e(CodeParams(5, 2), EfficiencyParams.lumped(r.eta_cross)).p_e
    assert pe == pytest.approx(r.eta_cross**2, abs=1e-6)


def test_crossover_zero_baseline_is_first_positive_pe():
    r = am.passive_crossover(baseline=lambda eta: 0.0, tol=1e-9)
    assert r.reachable
    eff = EfficiencyParams.lumped
    assert am.p_e(CodeParams(5, 2), eff(r.eta_cross)).p_e > 0
    assert r.eta_cross < 1e-3


def test_crossover_unit_baseline_unreachable():
    r = am.passive_crossover(baseline=lambda eta: 1.0)
    assert not r.reachable and r.eta_cross is None


@pytest.mark.parametrize("baseline", sorted(am.BASELINES))
def test_crossover_baselines_ordered(baseline):
    r = am.passive_crossover(baseline=baseline)
    assert r.baseline == baseline
    if r.reachable:
        assert 0 < r.eta_cross < 1


def test_uniform_profile_has_no_crossover_for_eta2():
    assert not am.passive_crossover(profile="uniform").reachable


# -- surface -------------------------------------------------------------


def test_surface_unit_column():
    cells = am.figure2_surface(range(2, 12), [1.0], q_max=20)
    for c in cells:
        assert c.p_e == pytest.approx(1 - 2.0 ** (-(c.n - 1) * c.q_star), abs=1e-12)


def test_surface_low_efficiency_is_small():
    cells = am.figure2_surface(range(2, 41, 6), [0.3, 0.4, 0.45])
    assert max(c.p_e for c in cells) < 0.05


def test_surface_ordering_independent_of_workers():
    args = (range(2, 9), [0.85, 0.9, 0.95])
    a = am.figure2_surface(*args)
    b = am.figure2_surface(*args, workers=2)
    assert [c.as_dict() for c in a] == [c.as_dict() for c in b]


def test_surface_fixed_q_is_passthrough():
    (c,) = am.figure2_surface([5], [0.96], q_fixed=2)
    b = am.p_e(CodeParams(5, 2), EfficiencyParams.uniform(0.96))
    assert (c.q_star, c.p_qs, c.p_ff, c.p_qf, c.p_e) == (2, b.p_qs, b.p_ff, b.p_qf, b.p_e)


def test_surface_monotone_with_moderate_caps():
    etas = [round(0.8 + 0.005 * i, 3) for i in range(41)]
    cells = am.figure2_surface(range(2, 41), etas, q_max=50)
    assert am.monotonicity_violations(cells) == []


def test_surface_monotone_for_small_n_unbounded_q():
    etas = [round(0.8 + 0.005 * i, 3) for i in range(41)]
    am.figure2_surface(range(2, 22), etas)


def test_surface_raises_on_violation():
    # the printed floor term makes P_E* dip in eta for long codes at huge q
    with pytest.raises(am.MonotonicityError):
        am.figure2_surface([23], [0.94, 0.95])


def test_surface_rejects_empty_ranges():
    with pytest.raises(ValueError):
        am.figure2_surface([], [0.9])
    with pytest.raises(ValueError):
        am.figure2_surface([3], [])
