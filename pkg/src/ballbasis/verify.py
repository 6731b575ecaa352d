"""Certification harness for the domination, good-lambda, exponential-tail and
norm-comparison inequalities.

Every constant the inequalities hide behind "up to a constant" is reported as a
fitted number together with the grid it was fitted on. Fits are least squares
on log-transformed nonzero points and count as certified only with
R^2 >= 0.9 over at least 5 points.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import Ball, BallBasis
from .errors import ParameterError, PreconditionError
from .functionals import (_check_alpha, _check_r, _median, ball_inf, ball_inf_alpha,
                          ball_osc_alpha, local_sharp_maximal, maximal, sharp_maximal,
                          starred_sharp_averages)
from .operators import OperatorSpec, bind
from .space import RTOL, WeightMeasure, lp_norm

MIN_R2 = 0.9
MIN_POINTS = 5
GRID_POINTS = 64


def _safe_ratio(num, den):
    """num/den with 0/0 -> 0 and x/0 -> inf."""
    num, den = np.broadcast_arrays(np.asarray(num, dtype=float), np.asarray(den, dtype=float))
    out = np.divide(num, den, out=np.zeros(num.shape), where=den > 0)
    out[(den <= 0) & (num > 0)] = np.inf
    return out


def log_grid(values, points: int = GRID_POINTS) -> np.ndarray:
    """Logarithmic grid from the smallest nonzero to the largest finite |value|."""
    v = np.abs(np.asarray(values, dtype=float))
    v = v[np.isfinite(v) & (v > 0)]
    if v.size == 0:
        return np.array([1.0])
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        return np.array([lo])
    return np.geomspace(lo, hi, points)


@dataclass
class Fit:
    """Least-squares line through (x, log y) on the points with y > 0."""

    slope: float
    intercept: float
    r2: float
    points: int
    degenerate: bool

    @property
    def certified(self) -> bool:
        return (not self.degenerate and self.points >= MIN_POINTS and self.r2 >= MIN_R2)

    def to_dict(self) -> dict:
        return {"slope": _jf(self.slope), "intercept": _jf(self.intercept), "r2": _jf(self.r2),
                "points": self.points, "degenerate": self.degenerate,
                "certified": self.certified}


def _jf(x):
    x = float(x)
    if np.isnan(x):
        return None
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def log_linear_fit(x, y) -> Fit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (y > 0) & np.isfinite(y)
    if not keep.any():
        # y identically 0: any decay rate fits
        return Fit(-np.inf, -np.inf, np.nan, 0, True)
    xs, ly = x[keep], np.log(y[keep])
    if xs.size < 2 or np.ptp(xs) == 0:
        return Fit(np.nan, float(ly.mean()), np.nan, int(xs.size), True)
    slope, icpt = np.polyfit(xs, ly, 1)
    res = ly - (slope * xs + icpt)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss == 0 else 1 - float(np.sum(res ** 2)) / ss
    return Fit(float(slope), float(icpt), r2, int(xs.size), False)


# -- domination ---------------------------------------------------------------------------

@dataclass
class DominationProfile:
    alphas: np.ndarray
    beta_of_alpha: np.ndarray
    mode: str
    witnesses: list[int | None]
    skipped: list[int] = field(default_factory=list)

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.beta_of_alpha)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "alphas": self.alphas.tolist(),
                "beta_of_alpha": [_jf(b) for b in self.beta_of_alpha],
                "witnesses": self.witnesses, "skipped": self.skipped}


def domination_profile(f, g, basis: BallBasis, mode: str = "weak", alpha_grid=(0.5, 0.75, 0.9)
                       ) -> DominationProfile:
    """beta(alpha) = max over balls of OSC_{B,alpha}(f) / INF-term(g)."""
    if mode not in ("weak", "strong"):
        raise ParameterError("mode must be weak or strong")
    alphas = np.asarray(alpha_grid, dtype=float)
    for a in alphas:
        _check_alpha(a)
    betas, wit = [], []
    strong_den = ball_inf(basis, g) if mode == "strong" else None
    for a in alphas:
        num = ball_osc_alpha(basis, f, a)
        den = strong_den if mode == "strong" else ball_inf_alpha(basis, g, 1 - a)
        ratio = _safe_ratio(num, den)
        k = int(np.argmax(ratio))
        betas.append(float(ratio[k]))
        wit.append(k if ratio[k] > 0 else None)
    return DominationProfile(alphas, np.array(betas), mode, wit)


def sharp_domination_check(f, basis: BallBasis, r: float = 1.0,
                           alpha_grid=(0.5, 0.75, 0.9, 0.99), denominator: str = "starred"
                           ) -> DominationProfile:
    """C(alpha) = max_B OSC_{B,alpha}(Mf) / ((1-alpha)^(-1/r) D_B).

    ``denominator`` is ``starred`` (D_B = <f>*_{#,B}) or ``inf`` (D_B = INF_B(M_# f)).
    Balls with D_B = 0 are skipped; constant f gives an empty profile.
    """
    _check_r(r)
    Mf = maximal(f, basis, r)
    if denominator == "starred":
        den = starred_sharp_averages(basis, f, r)
    elif denominator == "inf":
        den = ball_inf(basis, sharp_maximal(f, basis, r))
    else:
        raise ParameterError("denominator must be starred or inf")
    live = den > 0
    skipped = np.flatnonzero(~live).tolist()
    alphas = np.asarray(alpha_grid, dtype=float)
    if not live.any():
        return DominationProfile(np.array([]), np.array([]), "sharp", [], skipped)
    cs, wit = [], []
    for a in alphas:
        _check_alpha(a)
        ratio = ball_osc_alpha(basis, Mf, a)[live] * (1 - a) ** (1.0 / r) / den[live]
        k = int(np.argmax(ratio))
        cs.append(float(ratio[k]))
        wit.append(int(np.flatnonzero(live)[k]))
    return DominationProfile(alphas, np.array(cs), "sharp", wit, skipped)


# -- good lambda ------------------------------------------------------------------------------

@dataclass
class GoodLambdaReport:
    lambdas: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray
    alpha: float
    beta: float
    gamma: float
    delta: float
    bound: float
    fitted_constant: float
    hypothesis: bool
    inclusion_ok: bool
    mu_lhs: np.ndarray | None = None
    mu_rhs: np.ndarray | None = None

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max(initial=0.0))

    def to_dict(self) -> dict:
        d = {"lambdas": self.lambdas.tolist(), "lhs": self.lhs.tolist(),
             "rhs": self.rhs.tolist(), "ratios": self.ratios.tolist(),
             "alpha": self.alpha, "beta": _jf(self.beta), "gamma": self.gamma,
             "delta": self.delta, "bound": self.bound,
             "fitted_constant": _jf(self.fitted_constant),
             "hypothesis": self.hypothesis, "inclusion_ok": self.inclusion_ok,
             "max_ratio": self.max_ratio}
        if self.mu_lhs is not None:
            d["mu_lhs"] = self.mu_lhs.tolist()
            d["mu_rhs"] = self.mu_rhs.tolist()
        return d

    def table(self) -> tuple[list[str], list[list]]:
        return (["lambda", "lhs", "rhs", "ratio"],
                [[lam, a, b, c] for lam, a, b, c in
                 zip(self.lambdas, self.lhs, self.rhs, self.ratios)])


def _level_measures(f, g, wv, lambdas, beta):
    """w{|f| > 2 lam, |g| <= lam / beta} and w{|f| > lam} for each lam."""
    af, ag = np.abs(f), np.abs(g)
    lam = np.asarray(lambdas, dtype=float)[:, None]
    big = af[None, :] > lam
    good = (af[None, :] > 2 * lam) & (ag[None, :] <= lam / beta)
    return good @ wv, big @ wv, bool(np.all(~good | big))


def good_lambda_report(f, g, w: WeightMeasure, basis: BallBasis, alpha: float, beta: float,
                       lambda_grid=None) -> GoodLambdaReport:
    """Per-lambda w-measures of {|f| > 2 lam, |g| <= lam/beta} against {|f| > lam}.

    ``hypothesis`` records whether (f, g) is weakly dominated with constant
    ``beta`` at ``alpha``; the ratios are computed either way.
    """
    if not w.certified:
        raise PreconditionError("weight must be certified A-infinity first")
    if not basis.is_doubling:
        raise PreconditionError("basis is not doubling")
    _check_alpha(alpha)
    if not beta > 0:
        raise ParameterError("beta must be positive")
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    lambdas = log_grid(f) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    lhs, rhs, inc = _level_measures(f, g, w.w, lambdas, beta)
    ratios = _safe_ratio(lhs, rhs)
    prof = domination_profile(f, g, basis, "weak", [alpha])
    bound = float(w.gamma * (1 - alpha) ** w.delta)
    report = GoodLambdaReport(lambdas, lhs, rhs, ratios, float(alpha), float(beta),
                              float(w.gamma), float(w.delta), bound,
                              float(ratios.max(initial=0.0) / bound),
                              bool(prof.beta_of_alpha[0] <= beta * (1 + RTOL)), inc)
    if np.array_equal(w.w, basis.space.mu):
        report.mu_lhs, report.mu_rhs = lhs.copy(), rhs.copy()
    return report


@dataclass
class EpsSweep:
    """Per-epsilon maxima of good-lambda ratios with beta = 1/eps."""

    eps: np.ndarray
    max_ratio: np.ndarray
    fit: Fit

    def to_dict(self) -> dict:
        return {"eps": self.eps.tolist(), "max_ratio": self.max_ratio.tolist(),
                "fit": self.fit.to_dict()}


def good_lambda_eps_sweep(f, g, w: WeightMeasure, basis: BallBasis, eps_grid,
                          alpha: float = 0.5, lambda_grid=None) -> EpsSweep:
    """max over lambda of w{|f| > 2 lam, |g| <= eps lam} / w{|f| > lam}, per eps.

    The fit is log(max ratio) against log(eps); its slope estimates the power
    of eps in the decay.
    """
    eps = np.asarray(eps_grid, dtype=float)
    if np.any(eps <= 0):
        raise ParameterError("eps must be positive")
    f = np.asarray(f, dtype=float)
    lambdas = log_grid(f) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    mr = []
    for e in eps:
        lhs, rhs, _ = _level_measures(f, np.asarray(g, dtype=float), w.w, lambdas, 1.0 / e)
        mr.append(float(_safe_ratio(lhs, rhs).max(initial=0.0)))
    mr = np.array(mr)
    return EpsSweep(eps, mr, log_linear_fit(np.log(eps), mr))


# -- exponential tails ------------------------------------------------------------------------

@dataclass
class ExpTailReport:
    ts: np.ndarray
    tail: np.ndarray
    C: float
    c: float
    fit: Fit
    ball: int
    median: float | None
    variant: str

    @property
    def certified(self) -> bool:
        return self.fit.certified and self.c > 0

    @property
    def status(self) -> str:
        if self.fit.degenerate and self.fit.points == 0:
            return "tail identically zero"
        if self.certified:
            return "exponential decay certified"
        return "decay observed but not exponential-certified"

    def to_dict(self) -> dict:
        return {"ts": self.ts.tolist(), "tail": self.tail.tolist(), "C": _jf(self.C),
                "c": _jf(self.c), "fit": self.fit.to_dict(), "ball": self.ball,
                "median": self.median, "variant": self.variant, "status": self.status}

    def table(self) -> tuple[list[str], list[list]]:
        return ["t", "tail"], [[t, v] for t, v in zip(self.ts, self.tail)]


def _tail_report(dev, scale, mu, ts, ball, med, variant) -> ExpTailReport:
    """tail(t) = mu{dev > t scale} / mu(B) on the atoms of B."""
    ratio = _safe_ratio(dev, scale)
    if ts is None:
        ts = log_grid(ratio)
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0):
        raise ParameterError("t grid must be nonnegative")
    above = dev[None, :] > ts[:, None] * scale[None, :]
    tail = (above @ mu) / mu.sum()
    fit = log_linear_fit(ts, tail)
    c = -fit.slope
    C = float(np.exp(fit.intercept)) if np.isfinite(fit.intercept) else 0.0
    return ExpTailReport(ts, tail, C, float(c), fit, ball, med, variant)


def _as_ball(basis, B) -> Ball:
    return B if isinstance(B, Ball) else basis.ball(int(B))


def exp_tail_report(f, g, basis: BallBasis, B, t_grid=None) -> ExpTailReport:
    """tail(t) = mu{x in B : |f - m_f(B)| > t |g|} / mu(B) and its exponential fit."""
    if not basis.is_doubling or not basis.has_atom_balls:
        raise PreconditionError("exponential tails need a doubling, atomized basis")
    B = _as_ball(basis, B)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    idx = B.members
    med = float(_median(f[idx], B.mu))
    return _tail_report(np.abs(f[idx] - med), np.abs(g[idx]), B.mu, t_grid, B.id, med, "median")


def exp_tail_bo(op: OperatorSpec, h, basis: BallBasis, B, t_grid=None) -> ExpTailReport:
    """tail(t) = mu{x in B : |Th| > t Mh} / mu(B) for h supported in B."""
    if not basis.is_doubling:
        raise PreconditionError("basis is not doubling")
    B = _as_ball(basis, B)
    h = np.asarray(h, dtype=float)
    outside = np.ones(h.size, dtype=bool)
    outside[B.members] = False
    if np.any(h[outside] != 0):
        raise PreconditionError("h must be supported inside B")
    Th = np.abs(bind(op, basis.space, basis)(h))
    Mh = maximal(h, basis, op.r)
    idx = B.members
    return _tail_report(Th[idx], Mh[idx], B.mu, t_grid, B.id, None, "operator")


# -- BO good lambda ---------------------------------------------------------------------------

def eps_threshold(op: OperatorSpec) -> float:
    """min(1/(3 L), 1/(9 ||T||)) from the sampled estimates on ``op``."""
    if op.weak_norm_estimate is None or op.localization_estimate is None:
        raise PreconditionError("operator needs weak-norm and localization estimates")
    a = np.inf if op.localization_estimate == 0 else 1 / (3 * op.localization_estimate)
    b = np.inf if op.weak_norm_estimate == 0 else 1 / (9 * op.weak_norm_estimate)
    return float(min(a, b))


@dataclass
class BOGoodLambdaReport:
    eps: np.ndarray
    lambdas: np.ndarray
    lhs: np.ndarray          # (eps, lambda)
    rhs: np.ndarray          # (lambda,)
    ratios: np.ndarray       # (eps, lambda)
    max_ratio: np.ndarray    # (eps,)
    in_range: np.ndarray     # eps < eps_T
    eps_T: float
    branch: list[str]        # per lambda: "whole-space" when mu(F) >= mu(X)/4
    fit: Fit
    fit_all: Fit

    @property
    def c(self) -> float:
        return -self.fit.slope

    @property
    def monotone(self) -> bool:
        """max ratio does not grow as eps shrinks."""
        order = np.argsort(self.eps)
        m = self.max_ratio[order]
        return bool(np.all(np.diff(m) >= -RTOL * np.maximum(m[1:], 1e-300)))

    def to_dict(self) -> dict:
        return {"eps": self.eps.tolist(), "lambdas": self.lambdas.tolist(),
                "lhs": self.lhs.tolist(), "rhs": self.rhs.tolist(),
                "ratios": self.ratios.tolist(), "max_ratio": self.max_ratio.tolist(),
                "in_range": self.in_range.tolist(), "eps_T": _jf(self.eps_T),
                "branch": self.branch, "c": _jf(self.c), "fit": self.fit.to_dict(),
                "c_all": _jf(-self.fit_all.slope), "fit_all": self.fit_all.to_dict(),
                "monotone": self.monotone}

    def table(self) -> tuple[list[str], list[list]]:
        return (["eps", "max_ratio", "in_range"],
                [[e, m, bool(i)] for e, m, i in zip(self.eps, self.max_ratio, self.in_range)])


def good_lambda_bo(op: OperatorSpec, f, basis: BallBasis, eps_grid, lambda_grid=None
                   ) -> BOGoodLambdaReport:
    """mu{|Tf| > lam, Mf <= eps lam} / mu{|Tf| > lam} over an (eps, lambda) grid.

    The fit is log(max over lambda) against 1/eps, using only eps < eps_T;
    ``fit_all`` repeats it over every eps for comparison.
    """
    if not basis.is_doubling:
        raise PreconditionError("basis is not doubling")
    eps_T = eps_threshold(op)
    eps = np.asarray(eps_grid, dtype=float)
    if np.any(eps <= 0):
        raise ParameterError("eps must be positive")
    f = np.asarray(f, dtype=float)
    Tf = np.abs(bind(op, basis.space, basis)(f))
    Mf = maximal(f, basis, op.r)
    mu = basis.space.mu
    lambdas = log_grid(Tf) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    big = Tf[None, :] > lambdas[:, None]
    rhs = big @ mu
    lhs = np.stack([(big & (Mf[None, :] <= e * lambdas[:, None])) @ mu for e in eps])
    ratios = _safe_ratio(lhs, rhs[None, :])
    mr = ratios.max(axis=1, initial=0.0)
    in_range = eps < eps_T
    total = basis.space.total
    branch = ["whole-space" if r >= total / 4 else "cover" for r in rhs]
    fit = log_linear_fit(1 / eps[in_range], mr[in_range])
    fit_all = log_linear_fit(1 / eps, mr)
    return BOGoodLambdaReport(eps, lambdas, lhs, rhs, ratios, mr, in_range, eps_T, branch,
                              fit, fit_all)


# -- norm comparison ----------------------------------------------------------------------------

def norm_comparison(f, g, w: WeightMeasure, p_grid=(1.0, 2.0, 4.0)) -> dict:
    """Per-p ratio ||f||_{L^p(w)} / ||g||_{L^p(w)}."""
    if not w.certified:
        raise PreconditionError("weight must be certified A-infinity first")
    rows = []
    for p in p_grid:
        a, b = lp_norm(f, p, w), lp_norm(g, p, w)
        rows.append({"p": float(p), "num": a, "den": b,
                     "ratio": float(_safe_ratio(a, b))})
    return {"rows": rows, "max_ratio": max(r["ratio"] for r in rows),
            "gamma": w.gamma, "delta": w.delta}


# -- pointwise inequality audit ----------------------------------------------------------------

def functional_inequalities(f, basis: BallBasis, r: float = 1.0, alpha: float = 0.5) -> dict:
    """Violation counts for the pointwise and per-ball maximal-function inequalities."""
    f = np.asarray(f, dtype=float)
    Mf = maximal(f, basis, r)
    Ms = sharp_maximal(f, basis, r)
    Ma = local_sharp_maximal(f, basis, alpha)

    def tol(x):
        return RTOL * (1 + np.abs(x))
    return {
        "sharp_le_2M": int(np.sum(Ms > 2 * Mf + tol(Mf))),
        "alpha_local_le_sharp": int(np.sum(alpha * Ma > Ms + tol(Ms))),
        # Chebyshev form, which holds for every f: (1-alpha)^(1/r) M_{#,a} <= 2 M_#
        "chebyshev_local_le_sharp": int(np.sum((1 - alpha) ** (1 / r) * Ma
                                               > 2 * Ms + tol(Ms))),
        "abs_le_M": int(np.sum(np.abs(f) > Mf + tol(Mf))),
        "starred_sharp_le_inf": int(np.sum(starred_sharp_averages(basis, f, r)
                                           > ball_inf(basis, Ms) + tol(Ms.max()))),
        "osc_le_inf_local": int(np.sum(ball_osc_alpha(basis, f, alpha)
                                       > ball_inf(basis, Ma) + tol(Ma.max()))),
    }
