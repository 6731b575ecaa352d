import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from ballbasis.basis import BallBasis, build_dyadic, build_intervals
from ballbasis.errors import DegenerateWeightError, ParameterError
from ballbasis.space import PointSpace, WeightMeasure
from ballbasis.weights import ainfty_check, certify, make_weight, ratio


def test_lebesgue_gamma_one():
    d = build_dyadic(4)
    for delta in (0.25, 0.5, 1.0):
        rep = ainfty_check(make_weight("lebesgue", d.space), d, delta)
        assert rep.passed and rep.gamma == pytest.approx(1.0)


def test_concentrated_atom_example():
    sp = PointSpace(np.arange(16.0), np.ones(16))
    b = BallBasis(sp, [list(range(16))])
    w = np.full(16, 0.001 / 15)
    w[7] = 0.999
    rep = ainfty_check(WeightMeasure(w), b, 1.0)
    assert rep.gamma == pytest.approx(0.999 * 16)
    assert rep.witness_set.tolist() == [7]


def test_power_weight_on_unit_grid():
    d = build_dyadic(6)
    rep = ainfty_check(make_weight("power", d.space, a=1.0), d, 0.5)
    assert rep.passed and np.isfinite(rep.gamma)
    with pytest.raises(ParameterError):
        make_weight("power", d.space, a=-1.0)


def test_atomic_weight_fails_threshold():
    # on a finite space gamma <= (mu(B)/min mu)^delta, so failure is relative
    d = build_dyadic(8)
    w = make_weight("atomic", d.space, atom=5, mass=1e6)
    rep = ainfty_check(w, d, 1.0, threshold=100.0)
    assert not rep.passed and rep.witness_set.tolist() == [5]
    assert rep.gamma == pytest.approx(256, rel=1e-3)
    with pytest.raises(ParameterError):
        certify(w, d, 1.0, threshold=100.0)


def test_degenerate_weight():
    d = build_dyadic(2)
    with pytest.raises(DegenerateWeightError):
        ainfty_check(WeightMeasure(np.array([0.0, 1, 1, 1])), d, 0.5)
    with pytest.raises(ParameterError):
        ainfty_check(make_weight("lebesgue", d.space), d, 0.0)


def test_certify_attaches_constants():
    d = build_dyadic(3)
    w = certify(make_weight("power", d.space, a=0.5), d, 0.5)
    assert w.certified and w.delta == 0.5 and w.gamma >= 1


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2 ** 32 - 1), st.floats(0.1, 2.5))
def test_gamma_matches_all_subsets(n, seed, delta):
    rng = np.random.default_rng(seed)
    mu = rng.uniform(0.1, 2, n)
    w = rng.exponential(size=n) * (rng.random(n) < 0.8) + 1e-3
    b = build_intervals(n, mu)
    rep = ainfty_check(WeightMeasure(w), b, delta)
    ref = max(oracles.ainfty_gamma(w[B.members], mu[B.members], delta) for B in b.balls)
    assert rep.gamma == pytest.approx(ref, rel=1e-12)
    again = ratio(WeightMeasure(w), b.space, b.members(rep.witness_ball), rep.witness_set, delta)
    assert again == pytest.approx(rep.gamma, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_gamma_nondecreasing_in_delta(seed):
    rng = np.random.default_rng(seed)
    d = build_dyadic(4, rng.uniform(0.5, 2, 16))
    w = WeightMeasure(rng.exponential(size=16) + 0.01)
    gammas = [ainfty_check(w, d, dl).gamma for dl in (0.1, 0.3, 0.5, 0.8, 1.0, 1.5)]
    assert all(a <= b * (1 + 1e-12) for a, b in zip(gammas, gammas[1:]))
