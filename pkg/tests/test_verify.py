import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballbasis.basis import build_dyadic, build_intervals
from ballbasis.covering import calderon_tree
from ballbasis.errors import PreconditionError
from ballbasis.functionals import local_sharp_maximal, maximal, median, sharp_maximal
from ballbasis.operators import OperatorSpec, apply, estimate
from ballbasis.space import WeightMeasure
from ballbasis.verify import (domination_profile, eps_threshold, exp_tail_bo, exp_tail_report,
                              functional_inequalities, good_lambda_bo, good_lambda_eps_sweep,
                              good_lambda_report, log_linear_fit, norm_comparison,
                              sharp_domination_check)
from ballbasis.weights import certify, make_weight


def lebesgue(b):
    return certify(make_weight("lebesgue", b.space), b, 1.0)


def test_domination_examples():
    d = build_dyadic(1)
    f = np.array([1.0, 2.0])
    prof = domination_profile(f, f, d, "strong", [0.6])
    assert prof.beta_of_alpha[0] == 1.0
    c = domination_profile(np.full(2, 3.0), np.zeros(2), d, "weak", [0.3, 0.9])
    assert np.all(c.beta_of_alpha == 0)
    z = domination_profile(f, np.zeros(2), d, "strong", [0.6, 0.9])
    assert not z.feasible.any()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["weak", "strong"]))
def test_domination_profile_is_tight(seed, mode):
    from ballbasis.functionals import ball_inf, ball_inf_alpha, ball_osc_alpha
    rng = np.random.default_rng(seed)
    b = build_intervals(10, rng.uniform(0.5, 2, 10))
    f, g = rng.normal(size=10), rng.normal(size=10) + 3
    prof = domination_profile(f, g, b, mode, [0.3, 0.6, 0.9])
    for a, beta, k in zip(prof.alphas, prof.beta_of_alpha, prof.witnesses):
        num = ball_osc_alpha(b, f, a)
        den = ball_inf(b, g) if mode == "strong" else ball_inf_alpha(b, g, 1 - a)
        assert np.all(num <= beta * den * (1 + 1e-12))
        assert num[k] == pytest.approx(beta * den[k])


def test_good_lambda_empty_cases():
    d = build_dyadic(4)
    f = np.random.default_rng(0).normal(size=16)
    rep = good_lambda_report(f, np.abs(f), lebesgue(d), d, 0.5, 0.5)
    assert np.all(rep.lhs == 0) and np.all(rep.ratios == 0) and rep.inclusion_ok
    top = good_lambda_report(f, f, lebesgue(d), d, 0.5, 1.0, [np.abs(f).max() * 2])
    assert top.lhs[0] == top.rhs[0] == top.ratios[0] == 0
    assert top.mu_lhs is not None
    with pytest.raises(PreconditionError):
        good_lambda_report(f, f, make_weight("lebesgue", d.space), d, 0.5, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 5))
def test_good_lambda_sets_by_definition(seed, beta):
    rng = np.random.default_rng(seed)
    d = build_dyadic(4, rng.uniform(0.5, 2, 16))
    f, g = rng.normal(size=16), rng.normal(size=16)
    w = certify(WeightMeasure(rng.uniform(0.5, 2, 16)), d, 0.5)
    rep = good_lambda_report(f, g, w, d, 0.5, beta)
    for lam, a, b in zip(rep.lambdas, rep.lhs, rep.rhs):
        assert a == pytest.approx(w.w[(np.abs(f) > 2 * lam) & (np.abs(g) <= lam / beta)].sum())
        assert b == pytest.approx(w.w[np.abs(f) > lam].sum())
        assert a <= b


def test_eps_sweep_shape():
    d = build_dyadic(6)
    h = np.random.default_rng(1).normal(size=64)
    sw = good_lambda_eps_sweep(maximal(h, d), sharp_maximal(h, d), lebesgue(d), d,
                               [0.05, 0.1, 0.2, 0.4, 0.8])
    assert np.all(np.diff(sw.max_ratio) >= -1e-12)   # more eps, larger set


def test_exp_tail_constant_and_monotone():
    d = build_dyadic(5)
    rep = exp_tail_report(np.full(32, 2.0), np.ones(32), d, d.full_ball)
    assert np.all(rep.tail == 0) and rep.status == "tail identically zero" and rep.c == np.inf
    f = np.random.default_rng(2).normal(size=32)
    rep = exp_tail_report(f, local_sharp_maximal(f, d, 0.9), d, d.full_ball)
    assert np.all(np.diff(rep.tail) <= 0)
    B = d.ball(d.full_ball)
    m = median(f, B)
    for t, v in zip(rep.ts, rep.tail):
        ref = np.sum(np.abs(f - m) > t * local_sharp_maximal(f, d, 0.9)) / 32
        assert v == pytest.approx(ref)


def test_exp_tail_against_tree_generations():
    # tail at t = 2 n beta stays below the residual measure after n generations
    d = build_dyadic(8)
    f = np.random.default_rng(3).normal(size=256)
    tree = calderon_tree(d, f, d.full_ball)
    g = local_sharp_maximal(f, d, tree.alpha)
    n_gen = len(tree.delta_measures)
    ts = [2 * n for n in range(1, n_gen + 1)]
    rep = exp_tail_report(f, g, d, d.full_ball, ts)
    for n, v in zip(range(1, n_gen + 1), rep.tail):
        bound = tree.delta_measures[n] if n < n_gen else 0.0
        assert v <= bound + 1e-12


def test_exp_tail_bo_support_precondition():
    b = build_intervals(32)
    B = b.ball(5)
    h = np.zeros(32)
    h[B.members] = 1.0
    rep = exp_tail_bo(OperatorSpec("hilbert_truncated"), h, b, B)
    assert np.all(np.diff(rep.tail) <= 0)
    h[(B.members.max() + 1) % 32] = 1.0
    with pytest.raises(PreconditionError):
        exp_tail_bo(OperatorSpec("hilbert_truncated"), h, b, B)


def test_bo_good_lambda_basics():
    b = build_intervals(64)
    op = estimate(OperatorSpec("hilbert_truncated"), b, 64, 0)
    assert eps_threshold(op) == pytest.approx(min(1 / (3 * op.localization_estimate),
                                                  1 / (9 * op.weak_norm_estimate)))
    f = np.random.default_rng(4).normal(size=64)
    Tf = np.abs(apply(op, f, b.space))
    rep = good_lambda_bo(op, f, b, [0.01, 0.1, 1.0, 10.0], [Tf.max() * 2, Tf.max() / 2])
    assert np.all(rep.ratios[:, 0] == 0)
    assert rep.monotone
    with pytest.raises(PreconditionError):
        good_lambda_bo(OperatorSpec("hilbert_truncated"), f, b, [0.1])


def test_median_branch_consistency():
    b = build_intervals(64)
    op = estimate(OperatorSpec("hilbert_truncated"), b, 64, 0)
    rng = np.random.default_rng(5)
    for _ in range(20):
        f = rng.normal(size=64)
        Tf = apply(op, f, b.space)
        Mf = maximal(f, b)
        for B in b.balls[::37]:
            m = median(Tf, B)
            assert abs(m) <= 2 * op.weak_norm_estimate * Mf[B.members].min() + 1e-12


def test_norm_comparison_examples():
    d = build_dyadic(4)
    w = lebesgue(d)
    g = np.random.default_rng(6).normal(size=16)
    assert all(r["ratio"] == pytest.approx(1) for r in norm_comparison(g, g, w)["rows"])
    assert all(r["ratio"] == pytest.approx(2) for r in norm_comparison(2 * g, g, w)["rows"])
    assert norm_comparison(g, np.zeros(16), w)["max_ratio"] == np.inf


def test_sharp_domination_constant_skipped():
    d = build_dyadic(4)
    prof = sharp_domination_check(np.full(16, 1.5), d, 1.0)
    assert prof.alphas.size == 0 and len(prof.skipped) == d.m


def test_sharp_domination_bounded():
    d = build_dyadic(8)
    f = np.random.default_rng(7).normal(size=256)
    for den in ("starred", "inf"):
        prof = sharp_domination_check(f, d, 1.0, denominator=den)
        assert np.all(np.isfinite(prof.beta_of_alpha))


def test_functional_inequality_counts():
    d = build_dyadic(6)
    f = np.random.default_rng(8).normal(size=64)
    counts = functional_inequalities(f, d, 1.0, 0.5)
    for k in ("sharp_le_2M", "abs_le_M", "starred_sharp_le_inf", "osc_le_inf_local",
              "chebyshev_local_le_sharp"):
        assert counts[k] == 0


def test_log_linear_fit():
    x = np.arange(6.0)
    fit = log_linear_fit(x, 3 * np.exp(-2 * x))
    assert fit.slope == pytest.approx(-2) and fit.r2 == pytest.approx(1) and fit.certified
    assert log_linear_fit(x, np.zeros(6)).degenerate
