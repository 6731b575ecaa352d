"""Finite weighted point spaces, atom-union sets, functions and weights.

Functions on a space are plain float arrays of length ``n``. Sets are
:class:`MeasurableSet` instances holding sorted, duplicate-free atom indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ParameterError, StructuralError

# Relative slack used whenever two measures computed by different summation
# orders are compared.
RTOL = 1e-12


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


class MeasurableSet:
    """A finite union of atoms, stored as sorted unique indices."""

    __slots__ = ("idx",)

    def __init__(self, members: Iterable[int] = ()):
        idx = np.unique(np.asarray(list(members) if not isinstance(members, np.ndarray) else members,
                                   dtype=np.int64))
        if idx.size and idx[0] < 0:
            raise StructuralError(f"negative atom index {idx[0]}")
        idx.setflags(write=False)
        self.idx = idx

    @classmethod
    def from_mask(cls, mask) -> "MeasurableSet":
        return cls(np.flatnonzero(np.asarray(mask, dtype=bool)))

    def mask(self, n: int) -> np.ndarray:
        self.check(n)
        m = np.zeros(n, dtype=bool)
        m[self.idx] = True
        return m

    def check(self, n: int) -> None:
        if self.idx.size and self.idx[-1] >= n:
            raise StructuralError(f"atom index {self.idx[-1]} out of range for space of {n} atoms")

    def __len__(self):
        return int(self.idx.size)

    def __iter__(self):
        return iter(self.idx.tolist())

    def __contains__(self, i):
        j = np.searchsorted(self.idx, i)
        return bool(j < self.idx.size and self.idx[j] == i)

    def __or__(self, other):
        return MeasurableSet(np.union1d(self.idx, other.idx))

    def __and__(self, other):
        return MeasurableSet(np.intersect1d(self.idx, other.idx, assume_unique=True))

    def __sub__(self, other):
        return MeasurableSet(np.setdiff1d(self.idx, other.idx, assume_unique=True))

    def __xor__(self, other):
        return MeasurableSet(np.setxor1d(self.idx, other.idx, assume_unique=True))

    def __le__(self, other):
        return bool(np.isin(self.idx, other.idx, assume_unique=True).all())

    def __ge__(self, other):
        return other <= self

    def __eq__(self, other):
        if not isinstance(other, MeasurableSet):
            return NotImplemented
        return np.array_equal(self.idx, other.idx)

    def __hash__(self):
        return hash(self.idx.tobytes())

    def isdisjoint(self, other) -> bool:
        return len(self & other) == 0

    def tolist(self) -> list[int]:
        return self.idx.tolist()

    def __repr__(self):
        return f"MeasurableSet({self.idx.tolist()})"


def as_index(S) -> np.ndarray:
    if isinstance(S, MeasurableSet):
        return S.idx
    if hasattr(S, "members"):
        return np.asarray(S.members)
    return np.asarray(S, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class PointSpace:
    """Atoms with coordinates (n, d) and strictly positive weights ``mu``."""

    coords: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        mu = _frozen(self.mu)
        coords = np.array(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        coords.setflags(write=False)
        if mu.ndim != 1 or mu.size < 1:
            raise StructuralError("a point space needs at least one atom")
        if coords.shape[0] != mu.size:
            raise StructuralError("coords and mu disagree on the number of atoms")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise StructuralError("atom weights must be finite and strictly positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def grid(cls, n: int, weights=None, scale: float = 1.0) -> "PointSpace":
        """``n`` atoms at ``scale * i``; uniform weight ``scale`` unless given."""
        coords = scale * np.arange(n, dtype=float)
        mu = np.full(n, scale) if weights is None else weights
        return cls(coords, mu)

    @property
    def n(self) -> int:
        return int(self.mu.size)

    @property
    def total(self) -> float:
        return float(np.sum(self.mu))

    @property
    def x(self) -> np.ndarray:
        return self.coords[:, 0]

    def measure(self, S) -> float:
        return measure(self, S)

    def everything(self) -> MeasurableSet:
        return MeasurableSet(np.arange(self.n))


@dataclass(frozen=True, eq=False)
class WeightMeasure:
    """Nonnegative per-atom weight ``w``; ``gamma``/``delta`` are set only by
    :func:`ballbasis.weights.certify`."""

    w: np.ndarray
    gamma: float | None = None
    delta: float | None = None
    label: str = field(default="custom")

    def __post_init__(self):
        w = _frozen(self.w)
        if w.ndim != 1:
            raise StructuralError("weight must be a vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise StructuralError("weight entries must be finite and nonnegative")
        object.__setattr__(self, "w", w)

    @classmethod
    def lebesgue(cls, space: PointSpace) -> "WeightMeasure":
        return cls(space.mu, label="lebesgue")

    @property
    def certified(self) -> bool:
        return self.gamma is not None and self.delta is not None

    def measure(self, S) -> float:
        idx = as_index(S)
        if idx.size and (idx.min() < 0 or idx.max() >= self.w.size):
            raise StructuralError("set index out of range")
        return float(np.sum(self.w[idx]))


def measure(space: PointSpace, S) -> float:
    idx = as_index(S)
    if idx.size and (idx.min() < 0 or idx.max() >= space.n):
        raise StructuralError(f"set index out of range for space of {space.n} atoms")
    return float(np.sum(space.mu[idx]))


def superlevel_set(f, lam: float, mode: str = "abs_gt") -> MeasurableSet:
    f = np.asarray(f, dtype=float)
    if mode == "abs_gt":
        mask = np.abs(f) > lam
    elif mode == "gt":
        mask = f > lam
    elif mode == "lt":
        mask = f < lam
    else:
        raise ParameterError(f"unknown superlevel mode {mode!r}")
    return MeasurableSet.from_mask(mask)


def lp_norm(f, p: float, w) -> float:
    if not p > 0:
        raise ParameterError("p must be positive")
    w = w.w if isinstance(w, WeightMeasure) else np.asarray(w, dtype=float)
    f = np.abs(np.asarray(f, dtype=float))
    if np.isinf(p):
        return float(f[w > 0].max(initial=0.0))
    # scale out the max to keep |f|^p finite for large p
    top = f[w > 0].max(initial=0.0)
    if top == 0:
        return 0.0
    return float(top * np.sum(w * (f / top) ** p) ** (1.0 / p))


def restrict(f, S) -> np.ndarray:
    """``f * 1_S``."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    idx = as_index(S)
    out[idx] = f[idx]
    return out
