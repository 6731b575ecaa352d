"""Oscillations, restricted infima, medians, r-averages and maximal functions.

Single-ball functions take a :class:`~ballbasis.basis.Ball`; the ``ball_*``
functions evaluate the same quantity for every ball of a basis at once and
are what the maximal operators are built from. All suprema over balls are
exact enumerations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Ball, BallBasis
from .errors import DomainError, ParameterError
from .space import RTOL, MeasurableSet, as_index


@dataclass(frozen=True)
class FunctionalConfig:
    r: float = 1.0
    alpha: float = 0.5

    def __post_init__(self):
        if not (1 <= self.r < np.inf):
            raise ParameterError("r must satisfy 1 <= r < inf")
        _check_alpha(self.alpha)


def _check_alpha(alpha, closed=False):
    ok = 0 < alpha <= 1 if closed else 0 < alpha < 1
    if not ok:
        raise ParameterError(f"alpha={alpha} outside {'(0, 1]' if closed else '(0, 1)'}")


def _check_r(r):
    if not r >= 1:
        raise ParameterError("r must be >= 1")


# -- single-ball functionals ------------------------------------------------------

def osc(f, E) -> float:
    idx = as_index(E)
    if idx.size == 0:
        raise DomainError("oscillation over the empty set")
    v = np.asarray(f, dtype=float)[idx]
    return float(v.max() - v.min())


def _sorted_window(vals, weights, alpha):
    """Minimal-spread window of sorted values carrying >= alpha of the weight.

    Returns (spread, order, i, j): the optimal set is ``order[i:j]``.
    """
    order = np.argsort(vals, kind="stable")
    v = vals[order]
    cum = np.concatenate([[0.0], np.cumsum(weights[order])])
    need = cum[:-1] + alpha * cum[-1] * (1 - RTOL)
    ends = np.searchsorted(cum, need, side="left")
    valid = ends <= v.size
    starts = np.flatnonzero(valid)
    spread = v[ends[valid] - 1] - v[valid]
    k = int(np.argmin(spread))
    return float(spread[k]), order, int(starts[k]), int(ends[valid][k])


def osc_alpha(f, B: Ball, alpha: float) -> tuple[float, MeasurableSet]:
    """Minimal oscillation of f over subsets of B holding alpha of its measure."""
    _check_alpha(alpha)
    members = np.asarray(B.members)
    vals = np.asarray(f, dtype=float)[members]
    spread, order, i, j = _sorted_window(vals, B.mu, alpha)
    return spread, MeasurableSet(members[order[i:j]])


def inf_alpha(g, B: Ball, alpha: float) -> float:
    """Weighted lower alpha-quantile of |g| on B."""
    _check_alpha(alpha, closed=True)
    v = np.abs(np.asarray(g, dtype=float)[B.members])
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(B.mu[order])
    k = int(np.searchsorted(cum, alpha * cum[-1] * (1 - RTOL), side="left"))
    return float(v[order][min(k, v.size - 1)])


def inf_ball(g, B: Ball) -> float:
    return float(np.min(np.abs(np.asarray(g, dtype=float)[B.members])))


def median(f, B: Ball) -> float:
    """Smallest attained value m with mu{f > m} and mu{f < m} both <= mu(B)/2."""
    return float(_median(np.asarray(f, dtype=float)[B.members], B.mu))


def _median(vals, weights):
    order = np.argsort(vals, kind="stable")
    v, w = vals[order], weights[order]
    cum = np.cumsum(w)
    total = cum[-1]
    uniq, first = np.unique(v, return_index=True)
    last = np.concatenate([first[1:], [v.size]]) - 1
    below = np.where(first > 0, cum[first - 1], 0.0)
    above = total - cum[last]
    half = total / 2 * (1 + RTOL)
    ok = (below <= half) & (above <= half)
    return uniq[np.argmax(ok)]


def avg(f, B: Ball, r: float = 1.0) -> float:
    _check_r(r)
    v = np.abs(np.asarray(f, dtype=float)[B.members])
    w = B.mu
    return float((np.sum(w * v ** r) / np.sum(w)) ** (1.0 / r))


def sharp_avg(f, B: Ball, r: float = 1.0) -> float:
    _check_r(r)
    v = np.asarray(f, dtype=float)[B.members]
    w = B.mu
    mean = np.sum(w * v) / np.sum(w)
    return float((np.sum(w * np.abs(v - mean) ** r) / np.sum(w)) ** (1.0 / r))


def starred_avg(f, B: Ball, r: float = 1.0) -> float:
    basis = B.basis
    return max(avg(f, basis.ball(a), r) for a in basis.supersets(B.id))


def starred_sharp(f, B: Ball, r: float = 1.0) -> float:
    basis = B.basis
    return max(sharp_avg(f, basis.ball(a), r) for a in basis.supersets(B.id))


# -- all-balls evaluation ------------------------------------------------------------

def _grouped(basis: BallBasis, f):
    f = np.asarray(f, dtype=float)
    mu = basis.space.mu
    for ids, idx in basis.groups:
        yield ids, f[idx], mu[idx]


def ball_averages(basis: BallBasis, f, r: float = 1.0) -> np.ndarray:
    _check_r(r)
    f = np.abs(np.asarray(f, dtype=float))
    num = basis.membership @ (basis.space.mu * f ** r)
    return (num / basis.measures) ** (1.0 / r)


def ball_sharp_averages(basis: BallBasis, f, r: float = 1.0) -> np.ndarray:
    _check_r(r)
    out = np.empty(basis.m)
    for ids, v, w in _grouped(basis, f):
        tot = w.sum(axis=1)
        mean = (w * v).sum(axis=1) / tot
        out[ids] = ((w * np.abs(v - mean[:, None]) ** r).sum(axis=1) / tot) ** (1.0 / r)
    return out


def ball_osc_alpha(basis: BallBasis, f, alpha: float) -> np.ndarray:
    """OSC_{B,alpha}(f) for every ball (two-pointer sweep over sorted values)."""
    _check_alpha(alpha)
    out = np.empty(basis.m)
    for ids, v, w in _grouped(basis, f):
        k, s = v.shape
        order = np.argsort(v, axis=1, kind="stable")
        v = np.take_along_axis(v, order, axis=1)
        w = np.take_along_axis(w, order, axis=1)
        cum = np.zeros((k, s + 1))
        np.cumsum(w, axis=1, out=cum[:, 1:])
        target = alpha * cum[:, -1] * (1 - RTOL)
        rows = np.arange(k)
        j = np.ones(k, dtype=np.int64)
        best = np.full(k, np.inf)
        for i in range(s):
            j = np.maximum(j, i + 1)
            need = cum[:, i] + target
            while True:
                short = (cum[rows, j] < need) & (j < s)
                if not short.any():
                    break
                j[short] += 1
            valid = cum[rows, j] >= need
            spread = v[rows, j - 1] - v[:, i]
            best = np.where(valid & (spread < best), spread, best)
        out[ids] = best
    return out


def ball_inf_alpha(basis: BallBasis, g, alpha: float) -> np.ndarray:
    _check_alpha(alpha, closed=True)
    out = np.empty(basis.m)
    for ids, v, w in _grouped(basis, np.abs(np.asarray(g, dtype=float))):
        order = np.argsort(v, axis=1, kind="stable")
        v = np.take_along_axis(v, order, axis=1)
        cum = np.cumsum(np.take_along_axis(w, order, axis=1), axis=1)
        k = np.argmax(cum >= alpha * cum[:, -1:] * (1 - RTOL), axis=1)
        out[ids] = v[np.arange(v.shape[0]), k]
    return out


def ball_inf(basis: BallBasis, g) -> np.ndarray:
    out = np.empty(basis.m)
    for ids, v, _ in _grouped(basis, np.abs(np.asarray(g, dtype=float))):
        out[ids] = v.min(axis=1)
    return out


def ball_medians(basis: BallBasis, f) -> np.ndarray:
    out = np.empty(basis.m)
    for ids, v, w in _grouped(basis, f):
        for row, i in enumerate(ids):
            out[i] = _median(v[row], w[row])
    return out


def starred_averages(basis: BallBasis, f, r: float = 1.0) -> np.ndarray:
    return basis.superset_max(ball_averages(basis, f, r))


def starred_sharp_averages(basis: BallBasis, f, r: float = 1.0) -> np.ndarray:
    return basis.superset_max(ball_sharp_averages(basis, f, r))


# -- maximal operators ----------------------------------------------------------------

def maximal(f, basis: BallBasis, r: float = 1.0) -> np.ndarray:
    """Mf(x): sup of r-averages over balls through x."""
    return basis.per_atom_max(ball_averages(basis, f, r))


def sharp_maximal(f, basis: BallBasis, r: float = 1.0) -> np.ndarray:
    return basis.per_atom_max(ball_sharp_averages(basis, f, r))


def local_sharp_maximal(f, basis: BallBasis, alpha: float) -> np.ndarray:
    return basis.per_atom_max(ball_osc_alpha(basis, f, alpha))
