"""A-infinity weights: fixtures and the exact per-delta constant."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .basis import BallBasis
from .errors import DegenerateWeightError, ParameterError
from .space import MeasurableSet, PointSpace, WeightMeasure


@dataclass
class AinftyReport:
    passed: bool
    gamma: float
    delta: float
    witness_ball: int
    witness_set: MeasurableSet

    def to_dict(self) -> dict:
        return {"pass": self.passed, "gamma": self.gamma, "delta": self.delta,
                "witness": {"ball": self.witness_ball, "subset": self.witness_set.tolist()}}


def ratio(w: WeightMeasure, space: PointSpace, ball_members, subset, delta: float) -> float:
    """(w(E)/w(B)) / (mu(E)/mu(B))**delta for a single pair."""
    B = np.asarray(ball_members)
    E = np.asarray(subset.idx if isinstance(subset, MeasurableSet) else subset)
    wE, wB = w.w[E].sum(), w.w[B].sum()
    mE, mB = space.mu[E].sum(), space.mu[B].sum()
    return float((wE / wB) / (mE / mB) ** delta)


def ainfty_check(w: WeightMeasure, basis: BallBasis, delta: float,
                 threshold: float | None = None) -> AinftyReport:
    """Smallest gamma with w(E)/w(B) <= gamma (mu(E)/mu(B))**delta over all E in B.

    For delta <= 1 the extremal subsets are prefixes of B sorted by density
    w/mu; for delta >= 1 they are single atoms (superadditivity of t**delta).
    Both families are scanned, so the result is exact for every delta > 0.
    """
    if not delta > 0:
        raise ParameterError("delta must be positive")
    mu = basis.space.mu
    wv = np.asarray(w.w, dtype=float)
    if wv.shape != mu.shape:
        raise ParameterError("weight and space disagree on the number of atoms")
    best, best_ball, best_set = -np.inf, -1, None
    for ids, idx in basis.groups:
        wi, mi = wv[idx], mu[idx]
        wB, mB = wi.sum(axis=1), mi.sum(axis=1)
        if np.any(wB <= 0):
            bad = ids[np.flatnonzero(wB <= 0)[0]]
            raise DegenerateWeightError(f"w vanishes on ball {bad}")
        order = np.argsort(-(wi / mi), axis=1, kind="stable")
        cw = np.cumsum(np.take_along_axis(wi, order, axis=1), axis=1)
        cm = np.cumsum(np.take_along_axis(mi, order, axis=1), axis=1)
        pref = (cw / wB[:, None]) / (cm / mB[:, None]) ** delta
        single = (wi / wB[:, None]) / (mi / mB[:, None]) ** delta
        for vals, is_prefix in ((pref, True), (single, False)):
            row, col = np.unravel_index(np.argmax(vals), vals.shape)
            if vals[row, col] > best:
                best = float(vals[row, col])
                best_ball = int(ids[row])
                chosen = idx[row, order[row, :col + 1]] if is_prefix else idx[row, [col]]
                best_set = MeasurableSet(chosen)
    passed = bool(np.isfinite(best)) and (threshold is None or best <= threshold)
    return AinftyReport(passed, best, float(delta), best_ball, best_set)


def certify(w: WeightMeasure, basis: BallBasis, delta: float,
            threshold: float | None = None) -> WeightMeasure:
    """Return ``w`` carrying (gamma, delta) if the check passes, else raise."""
    rep = ainfty_check(w, basis, delta, threshold)
    if not rep.passed:
        raise ParameterError(f"weight fails A-infinity at delta={delta}: gamma={rep.gamma}")
    return replace(w, gamma=rep.gamma, delta=rep.delta)


def make_weight(kind: str, space: PointSpace, a: float = 1.0, atom: int = 0,
                mass: float = 1.0, floor: float = 1.0) -> WeightMeasure:
    """Fixture weights: ``lebesgue``, ``power`` (|x|^a mu) or ``atomic``
    (``floor * mu`` plus ``mass`` at ``atom``)."""
    if kind == "lebesgue":
        return WeightMeasure(space.mu, label="lebesgue")
    if kind == "power":
        if a <= -1:
            raise ParameterError("power exponent must exceed -1")
        x = np.abs(space.x)
        if a < 0 and np.any(x == 0):
            raise ParameterError("negative power at a zero coordinate")
        return WeightMeasure(x ** a * space.mu, label=f"power({a:g})")
    if kind == "atomic":
        if not 0 <= atom < space.n:
            raise ParameterError("atom index out of range")
        w = floor * np.array(space.mu)
        w[atom] += mass
        return WeightMeasure(w, label=f"atomic({atom},{mass:g})")
    raise ParameterError(f"unknown weight kind {kind!r}")
