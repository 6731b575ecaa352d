"""Concrete subadditive operators and sampled lower bounds for their constants.

Kinds: ``maximal`` (needs a basis), ``hilbert_truncated``, ``carleson_modulated``
and ``martingale_transform`` (needs a dyadic or martingale basis). Kernels
exclude the self term, which on a grid of spacing h is truncation at scale h.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .basis import BallBasis
from .errors import ParameterError, StructuralError
from .functionals import maximal
from .sampling import pmap, random_function, rng_for
from .space import PointSpace, lp_norm

KINDS = ("maximal", "hilbert_truncated", "martingale_transform", "carleson_modulated")


@dataclass(frozen=True)
class FrequencyFamily:
    """Modulations exp(2 pi i xi x) for each xi in ``xis``."""

    xis: tuple[float, ...]

    def __post_init__(self):
        xis = tuple(float(x) for x in self.xis)
        if not xis or not all(np.isfinite(xis)):
            raise ParameterError("frequency family must be a nonempty list of finite reals")
        object.__setattr__(self, "xis", xis)

    @classmethod
    def default(cls, space: PointSpace, count: int | None = None) -> "FrequencyFamily":
        """``k / (n h)`` for k < count, with h the grid spacing.

        On a unit-spaced grid this is {k/n}; on [0, 1) it is the integers.
        """
        n = space.n
        count = n if count is None else int(count)
        if count < 1:
            raise ParameterError("need at least one frequency")
        x = np.sort(space.x)
        h = float(np.min(np.diff(x))) if n > 1 else 1.0
        return cls(tuple(k / (n * h) for k in range(count)))


@dataclass
class OperatorSpec:
    kind: str
    r: float = 1.0
    signs: tuple[int, ...] | None = None
    frequencies: FrequencyFamily | None = None
    weak_norm_estimate: float | None = None
    localization_estimate: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown operator kind {self.kind!r}")
        if not 1 <= self.r < np.inf:
            raise ParameterError("r must satisfy 1 <= r < inf")
        if self.signs is not None:
            self.signs = tuple(int(s) for s in self.signs)
            if any(s not in (-1, 1) for s in self.signs):
                raise ParameterError("martingale signs must be +1 or -1")
        if isinstance(self.frequencies, (list, tuple)):
            self.frequencies = FrequencyFamily(tuple(self.frequencies))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["frequencies"] = None if self.frequencies is None else list(self.frequencies.xis)
        d["signs"] = None if self.signs is None else list(self.signs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OperatorSpec":
        d = dict(d)
        if d.get("frequencies") is not None:
            d["frequencies"] = FrequencyFamily(tuple(d["frequencies"]))
        return cls(**d)


def _line_coords(space: PointSpace) -> np.ndarray:
    x = space.x
    if np.unique(x).size != x.size:
        raise StructuralError("coordinate collision: kernel operators need distinct coordinates")
    return x


def kernel_matrix(space: PointSpace) -> np.ndarray:
    """K[i, j] = mu_j / (x_i - x_j) off the diagonal, 0 on it."""
    x = _line_coords(space)
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.inf)
    return space.mu[None, :] / d


def partitions_of(basis: BallBasis) -> list[np.ndarray]:
    """Nested label arrays, coarsest first."""
    if basis.partitions is not None:
        return basis.partitions
    if basis.kind == "dyadic":
        n = basis.space.n
        depth = n.bit_length() - 1
        i = np.arange(n)
        return [i >> (depth - k) for k in range(depth + 1)]
    raise StructuralError("martingale transform needs a dyadic or martingale basis")


def _cond_exp(f, labels, mu):
    _, inv = np.unique(labels, return_inverse=True)
    num = np.bincount(inv, weights=f * mu)
    den = np.bincount(inv, weights=mu)
    return (num / den)[inv]


def bind(op: OperatorSpec, space: PointSpace, basis: BallBasis | None = None):
    """Precompute what ``op`` needs on ``space`` and return ``f -> Tf``."""
    if basis is not None and basis.space is not space:
        raise StructuralError("basis lives on a different space")
    if op.kind == "maximal":
        if basis is None:
            raise StructuralError("the maximal operator needs a basis")
        return lambda f: maximal(f, basis, op.r)
    if op.kind == "hilbert_truncated":
        Km = kernel_matrix(space)
        return lambda f: Km @ np.asarray(f, dtype=float)
    if op.kind == "carleson_modulated":
        Km = kernel_matrix(space)
        fam = op.frequencies or FrequencyFamily.default(space)
        mod = np.exp(2j * np.pi * np.outer(space.x, fam.xis))
        return lambda f: np.abs(Km @ (mod * np.asarray(f, dtype=float)[:, None])).max(axis=1)
    # martingale transform
    if basis is None:
        raise StructuralError("the martingale transform needs a basis")
    parts = partitions_of(basis)
    signs = op.signs or tuple((-1) ** k for k in range(len(parts) - 1))
    if len(signs) != len(parts) - 1:
        raise ParameterError(f"need {len(parts) - 1} signs, got {len(signs)}")
    mu = space.mu

    def mt(f):
        f = np.asarray(f, dtype=float)
        E = [_cond_exp(f, p, mu) for p in parts]
        return sum(s * (E[k + 1] - E[k]) for k, s in enumerate(signs))
    return mt


def apply(op: OperatorSpec, f, space: PointSpace, basis: BallBasis | None = None) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (space.n,):
        raise StructuralError("function and space disagree on the number of atoms")
    return np.asarray(bind(op, space, basis)(f), dtype=float)


# -- sampled constants ---------------------------------------------------------------

def _weak_ratio(Tf, f, mu, r) -> float:
    v = np.abs(Tf)
    order = np.argsort(-v, kind="stable")
    vs = v[order]
    cm = np.cumsum(mu[order])
    # mu{|Tf| > lambda} for lambda just below v_k includes every tie of v_k
    last = np.searchsorted(-vs, -vs, side="right") - 1
    level = vs * cm[last] ** (1.0 / r)
    return float(level.max() / lp_norm(f, r, mu))


def weak_norm_estimate(op: OperatorSpec, space: PointSpace, r: float | None = None,
                       sample_budget: int = 256, rng_seed: int = 0,
                       basis: BallBasis | None = None) -> float:
    """Largest sampled lambda mu{|Tf| > lambda}^(1/r) / ||f||_r (exact sup over lambda).

    Sample k cycles through constant, signs, gaussian and spike functions, so
    the constant function is always sample 0. A lower bound on the weak-type norm.
    """
    if sample_budget < 1:
        raise ParameterError("sample budget must be >= 1")
    r = op.r if r is None else float(r)
    T = bind(op, space, basis)
    fams = ("constant", "random-signs", "random-gaussian", "spike")
    mu = space.mu

    def one(k):
        f = random_function(fams[k % 4], space.n, rng_for(rng_seed, k))
        if not np.any(f):
            return 0.0
        return _weak_ratio(T(f), f, mu, r)
    return float(max(pmap(one, range(sample_budget))))


def localization_ratio(T, f, basis: BallBasis, b: int, r: float) -> float:
    """OSC_B(T(f 1_{X minus B*})) / <f>*_B for one ball; 0 when the numerator is 0."""
    h = int(basis.hull[b])
    g = np.array(f, dtype=float)
    g[basis.members(h)] = 0.0
    if not np.any(g):
        return 0.0
    star = _starred_one(basis, f, b, r)
    if star == 0:
        return np.nan
    v = np.asarray(T(g))[basis.members(b)]
    return float((v.max() - v.min()) / star)


def _starred_one(basis, f, b, r):
    sup = basis.supersets(b)
    f = np.abs(np.asarray(f, dtype=float))
    mu = basis.space.mu
    num = basis.membership[sup] @ (mu * f ** r)
    return float(np.max((num / basis.measures[sup]) ** (1.0 / r)))


def localization_estimate(op: OperatorSpec, basis: BallBasis, sample_budget: int = 256,
                          rng_seed: int = 0) -> float:
    """Largest sampled localization ratio over (f, B) pairs; a lower bound.

    Sample k draws f from (signs, gaussian, spike)[k % 3] and a ball uniformly
    among those whose hull is not the whole space.
    """
    if sample_budget < 1:
        raise ParameterError("sample budget must be >= 1")
    space = basis.space
    T = bind(op, space, basis)
    fams = ("random-signs", "random-gaussian", "spike")
    cand = np.flatnonzero(basis.sizes[basis.hull] < space.n)
    if cand.size == 0:
        return 0.0

    def one(k):
        rng = rng_for(rng_seed, k)
        f = random_function(fams[k % 3], space.n, rng)
        b = int(cand[rng.integers(cand.size)])
        return localization_ratio(T, f, basis, b, op.r)
    vals = np.array(pmap(one, range(sample_budget)))
    vals = vals[np.isfinite(vals)]
    return float(vals.max(initial=0.0))


def estimate(op: OperatorSpec, basis: BallBasis, sample_budget: int = 256,
             rng_seed: int = 0) -> OperatorSpec:
    """Copy of ``op`` carrying both sampled constants."""
    d = op.to_dict()
    d["weak_norm_estimate"] = weak_norm_estimate(op, basis.space, op.r, sample_budget,
                                                 rng_seed, basis)
    d["localization_estimate"] = localization_estimate(op, basis, sample_budget, rng_seed)
    d["meta"] = dict(op.meta, sample_budget=sample_budget, rng_seed=rng_seed)
    return OperatorSpec.from_dict(d)
