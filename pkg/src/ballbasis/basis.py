"""Explicit ball families with hull maps, and the axiom verifier.

A basis is stored as a sparse ball-by-atom incidence matrix. Ball ids are row
positions. Dyadic and interval bases carry extra structure (parent pointers,
endpoints) used for closed-form hulls and fast superset sweeps; everything
else falls back to generic sparse enumeration.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, ResourceError, StructuralError
from .space import RTOL, MeasurableSet, PointSpace

MAX_DYADIC_DEPTH = 24
MAX_INTERVAL_ATOMS = 4096
# dense blocks used by the generic hull / B4 sweeps
_BLOCK = 512


@dataclass(frozen=True, eq=False)
class Ball:
    id: int
    members: np.ndarray
    basis: "BallBasis" = field(repr=False)
    level: int | None = None

    @property
    def space(self) -> PointSpace:
        return self.basis.space

    @property
    def mu(self) -> np.ndarray:
        return self.space.mu[self.members]

    @property
    def measure(self) -> float:
        return float(np.sum(self.space.mu[self.members]))

    @property
    def set(self) -> MeasurableSet:
        return MeasurableSet(self.members)

    def __contains__(self, x):
        j = np.searchsorted(self.members, x)
        return bool(j < self.members.size and self.members[j] == x)

    def __len__(self):
        return int(self.members.size)


class BallBasis:
    """A finite ball family over a :class:`PointSpace`.

    ``hull`` maps ball id to ball id; entries of ``-1`` mean no ball satisfies
    the hull containment condition. When ``hull`` is omitted the minimal valid
    hull is computed (smallest measure, ties to the smallest id).
    """

    def __init__(self, space: PointSpace, members, hull=None, levels=None,
                 kind: str = "custom", parent=None, endpoints=None, partitions=None):
        self.space = space
        self.kind = kind
        rows = [np.unique(np.asarray(m, dtype=np.int64)) for m in members]
        if not rows:
            raise StructuralError("a basis needs at least one ball")
        for i, r in enumerate(rows):
            if r.size == 0:
                raise StructuralError(f"ball {i} is empty")
            if r[0] < 0 or r[-1] >= space.n:
                raise StructuralError(f"ball {i} has atoms outside the space")
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([r.size for r in rows])
        indices = np.concatenate(rows)
        data = np.ones(indices.size, dtype=np.int32)
        self.membership = sp.csr_matrix((data, indices, indptr), shape=(len(rows), space.n))
        self.levels = None if levels is None else np.asarray(levels, dtype=np.int64)
        self.parent = None if parent is None else np.asarray(parent, dtype=np.int64)
        self.endpoints = endpoints
        self.partitions = partitions
        self.measures = np.asarray(self.membership @ space.mu, dtype=float)
        self.sizes = np.diff(indptr)
        if hull is None:
            hull = minimal_hulls(self)
        self.hull = np.asarray(hull, dtype=np.int64)
        if self.hull.shape != (self.m,):
            raise StructuralError("hull map must have one entry per ball")
        self._eta = None

    # -- basic access -------------------------------------------------------
    @property
    def m(self) -> int:
        return self.membership.shape[0]

    def __len__(self):
        return self.m

    def members(self, i: int) -> np.ndarray:
        a, b = self.membership.indptr[i], self.membership.indptr[i + 1]
        return self.membership.indices[a:b]

    def ball(self, i: int) -> Ball:
        lvl = None if self.levels is None else int(self.levels[i])
        return Ball(int(i), self.members(i), self, lvl)

    @property
    def balls(self) -> list[Ball]:
        return [self.ball(i) for i in range(self.m)]

    def hull_of(self, B) -> Ball:
        i = B.id if isinstance(B, Ball) else int(B)
        h = int(self.hull[i])
        if h < 0:
            raise StructuralError(f"ball {i} has no valid hull")
        return self.ball(h)

    @cached_property
    def by_atom(self) -> sp.csc_matrix:
        return self.membership.tocsc()

    def containing(self, x: int) -> np.ndarray:
        """Ids of balls containing atom ``x``."""
        c = self.by_atom
        return c.indices[c.indptr[x]:c.indptr[x + 1]]

    @cached_property
    def groups(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Balls grouped by cardinality: ``(ids, members[k, s])`` per size."""
        out = []
        ind, ptr = self.membership.indices, self.membership.indptr
        for s in np.unique(self.sizes):
            ids = np.flatnonzero(self.sizes == s)
            out.append((ids, ind[ptr[ids][:, None] + np.arange(s)]))
        return out

    @cached_property
    def has_atom_balls(self) -> bool:
        singles = np.flatnonzero(self.sizes == 1)
        atoms = self.membership.indices[self.membership.indptr[singles]]
        return bool(np.unique(atoms).size == self.space.n)

    @cached_property
    def full_ball(self) -> int:
        full = np.flatnonzero(self.sizes == self.space.n)
        return int(full[0]) if full.size else -1

    @property
    def K(self) -> float:
        """Hull constant of the stored hull map (inf if some hull is missing)."""
        if np.any(self.hull < 0):
            return float("inf")
        return float(np.max(self.measures[self.hull] / self.measures))

    @property
    def eta(self) -> float:
        """Minimal doubling constant (inf when the basis is not doubling)."""
        if self._eta is None:
            self._eta = doubling_constant(self)[0]
        return self._eta

    @property
    def is_doubling(self) -> bool:
        return bool(np.isfinite(self.eta))

    def with_hull(self, hull) -> "BallBasis":
        """Copy with an explicit (possibly invalid) hull map."""
        return BallBasis(self.space, [self.members(i) for i in range(self.m)], hull=hull,
                         levels=self.levels, kind="custom")

    # -- containment ----------------------------------------------------------
    @cached_property
    def _intersections(self) -> sp.csr_matrix:
        return (self.membership @ self.membership.T).tocsr()

    def containment_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """All ``(sub, sup)`` with ball ``sub`` contained in ball ``sup``."""
        if self.kind == "dyadic":
            subs, sups = [], []
            for i in range(self.m):
                j = i
                while j >= 0:
                    subs.append(i)
                    sups.append(j)
                    j = int(self.parent[j])
            return np.array(subs), np.array(sups)
        inter = self._intersections.tocoo()
        keep = inter.data == self.sizes[inter.row]
        return inter.row[keep].astype(np.int64), inter.col[keep].astype(np.int64)

    def superset_max(self, values) -> np.ndarray:
        """``out[B] = max over balls A containing B of values[A]``."""
        values = np.asarray(values, dtype=float)
        if self.kind == "dyadic":
            out = values.copy()
            for i in range(1, self.m):  # heap order: parents precede children
                out[i] = max(out[i], out[self.parent[i]])
            return out
        if self.kind == "intervals":
            n = self.space.n
            a, b = self.endpoints
            grid = np.full((n, n), -np.inf)
            grid[a, b] = values
            grid = np.maximum.accumulate(grid, axis=0)
            grid = np.maximum.accumulate(grid[:, ::-1], axis=1)[:, ::-1]
            return grid[a, b]
        sub, sup = self.containment_pairs()
        out = np.full(self.m, -np.inf)
        np.maximum.at(out, sub, values[sup])
        return out

    def supersets(self, i: int) -> np.ndarray:
        B = self.members(i)
        counts = np.asarray(self.membership[:, B].sum(axis=1)).ravel()
        return np.flatnonzero(counts == B.size)

    def per_atom_max(self, values) -> np.ndarray:
        """``out[x] = max over balls B containing x of values[B]`` (values >= 0)."""
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise ParameterError("per_atom_max expects nonnegative ball values")
        weighted = sp.csc_matrix(self.by_atom.multiply(values[:, None]))
        return np.asarray(weighted.max(axis=0).todense()).ravel()

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "atoms": self.space.n,
            "coords": self.space.coords.tolist(),
            "weights": self.space.mu.tolist(),
            "balls": [{"id": i, "members": self.members(i).tolist(),
                       "level": None if self.levels is None else int(self.levels[i])}
                      for i in range(self.m)],
            "hull": {str(i): int(h) for i, h in enumerate(self.hull)},
            "constants": {"K": _json_float(self.K), "eta": _json_float(self.eta)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BallBasis":
        space = PointSpace(np.asarray(d["coords"], dtype=float), np.asarray(d["weights"], dtype=float))
        balls = sorted(d["balls"], key=lambda b: b["id"])
        if [b["id"] for b in balls] != list(range(len(balls))):
            raise StructuralError("ball ids must be 0..m-1")
        hull = [int(d["hull"][str(i)]) for i in range(len(balls))]
        levels = None if any(b.get("level") is None for b in balls) else [b["level"] for b in balls]
        return cls(space, [b["members"] for b in balls], hull=hull, levels=levels)


def _json_float(x):
    return None if x is None or not np.isfinite(x) else float(x)


# -- generic hull / doubling computations --------------------------------------

def _qualifying(basis: BallBasis) -> sp.csr_matrix:
    """Q[B, A] = 1 iff A meets B and mu(A) <= 2 mu(B)."""
    inter = basis._intersections.tocoo()
    mu = basis.measures
    keep = mu[inter.col] <= 2 * mu[inter.row] * (1 + RTOL)
    return sp.csr_matrix((np.ones(keep.sum(), dtype=np.int32), (inter.row[keep], inter.col[keep])),
                         shape=(basis.m, basis.m))


def _hull_unions(basis: BallBasis, rows: np.ndarray) -> np.ndarray:
    """Dense (len(rows), n) mask of the union of qualifying balls for each row."""
    Q = _qualifying(basis)[rows]
    return np.asarray((Q @ basis.membership).todense()) > 0


def minimal_hulls(basis: BallBasis) -> np.ndarray:
    if basis.kind == "dyadic":
        return _dyadic_hulls(basis)
    if basis.kind == "intervals":
        return _interval_hulls(basis)
    return _generic_hulls(basis)


def _generic_hulls(basis: BallBasis) -> np.ndarray:
    m = basis.m
    out = np.full(m, -1, dtype=np.int64)
    M = basis.membership
    # balls ordered by (measure, id) so the first candidate wins ties
    order = np.lexsort((np.arange(m), basis.measures))
    for start in range(0, m, _BLOCK):
        rows = np.arange(start, min(m, start + _BLOCK))
        U = _hull_unions(basis, rows)
        usize = U.sum(axis=1)
        cover = np.asarray((sp.csr_matrix(U.astype(np.int32)) @ M.T).todense())
        ok = cover == usize[:, None]
        ok_sorted = ok[:, order]
        has = ok_sorted.any(axis=1)
        first = np.argmax(ok_sorted, axis=1)
        out[rows[has]] = order[first[has]]
    return out


def _dyadic_hulls(basis: BallBasis) -> np.ndarray:
    mu, parent = basis.measures, basis.parent
    out = np.arange(basis.m)
    for i in range(basis.m):
        j = i
        while parent[j] >= 0 and mu[parent[j]] <= 2 * mu[i] * (1 + RTOL):
            j = parent[j]
        out[i] = j
    return out


def _interval_hulls(basis: BallBasis) -> np.ndarray:
    a, b = basis.endpoints
    P = np.concatenate([[0.0], np.cumsum(basis.space.mu)])
    n = basis.space.n
    cap = 2 * basis.measures * (1 + RTOL)
    # leftmost c with mu[c..a] <= cap, rightmost d with mu[b..d] <= cap
    lo = np.searchsorted(P, P[a + 1] - cap, side="left")
    lo = np.minimum(lo, a)
    hi = np.searchsorted(P, P[b] + cap, side="right") - 2
    hi = np.maximum(np.minimum(hi, n - 1), b)
    return interval_id(n, lo, hi)


def doubling_constant(basis: BallBasis) -> tuple[float, int | None]:
    """Minimal eta and, if the basis is not doubling, a witness ball id."""
    mu = basis.measures
    total = basis.space.total
    small = mu < total / 2 * (1 - RTOL)
    best = np.full(basis.m, np.inf)
    if basis.kind == "intervals":
        n = basis.space.n
        a, b = basis.endpoints
        P = np.concatenate([[0.0], np.cumsum(basis.space.mu)])
        for i in np.flatnonzero(small):
            starts = np.arange(a[i] + 1)
            need = P[starts] + 2 * mu[i] * (1 - RTOL)
            ends = np.searchsorted(P, need, side="left") - 1
            ends = np.maximum(ends, b[i])
            ok = ends < n
            if ok.any():
                best[i] = np.min(P[ends[ok] + 1] - P[starts[ok]]) / mu[i]
    else:
        sub, sup = basis.containment_pairs()
        ratio = mu[sup] / mu[sub]
        keep = (ratio >= 2 * (1 - RTOL)) & small[sub]
        np.minimum.at(best, sub[keep], ratio[keep])
    bad = np.flatnonzero(small & ~np.isfinite(best))
    if bad.size:
        return float("inf"), int(bad[0])
    return float(np.max(best[small], initial=2.0)), None


# -- constructors ---------------------------------------------------------------

def _check_weights(weights, n):
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise StructuralError(f"expected {n} weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise StructuralError("weights must be finite and strictly positive")
    return w


def build_dyadic(depth: int, weights=None) -> BallBasis:
    """All dyadic intervals of [0, 1) down to 2**depth atoms; ids in heap order.

    Atoms sit at cell midpoints (i + 1/2) / 2**depth.
    """
    if not 1 <= depth <= MAX_DYADIC_DEPTH:
        raise ParameterError(f"depth must be in [1, {MAX_DYADIC_DEPTH}]")
    n = 2 ** depth
    w = _check_weights(weights, n)
    space = PointSpace((np.arange(n) + 0.5) / n, np.full(n, 1.0 / n) if w is None else w)
    members, levels, parent = [], [], []
    for k in range(depth + 1):
        size = n >> k
        for j in range(2 ** k):
            members.append(np.arange(j * size, (j + 1) * size))
            levels.append(k)
            parent.append(-1 if k == 0 else (len(members) - 2) // 2)
    return BallBasis(space, members, levels=levels, kind="dyadic", parent=parent)


def interval_id(n: int, a, b):
    """Id of interval [a, b] in the (length, start) ordering of build_intervals."""
    a = np.asarray(a)
    length = np.asarray(b) - a + 1
    # offset(l) = sum_{k<l} (n - k + 1) for k = 1..l-1
    offset = (length - 1) * n - (length - 1) * (length - 2) // 2
    return offset + a


def build_intervals(n: int, weights=None) -> BallBasis:
    """All contiguous index intervals of a line of ``n`` unit cells.

    Atom i sits at the cell midpoint i + 1/2 with default weight 1.
    """
    if n < 1:
        raise ParameterError("n must be positive")
    if n > MAX_INTERVAL_ATOMS:
        raise ResourceError(f"interval basis limited to {MAX_INTERVAL_ATOMS} atoms")
    w = _check_weights(weights, n)
    space = PointSpace(np.arange(n) + 0.5, np.ones(n) if w is None else w)
    a_list, b_list, members = [], [], []
    for length in range(1, n + 1):
        for a in range(n - length + 1):
            a_list.append(a)
            b_list.append(a + length - 1)
            members.append(np.arange(a, a + length))
    endpoints = (np.array(a_list), np.array(b_list))
    return BallBasis(space, members, levels=[b - a + 1 for a, b in zip(*endpoints)],
                     kind="intervals", endpoints=endpoints)


def build_martingale(partitions, weights=None, coords=None) -> BallBasis:
    """Cells of nested partitions, coarsest first; the finest must be the atoms.

    Each partition is a label array (atom -> cell label). Cells repeated at a
    finer level keep the id of their first (coarsest) occurrence.
    """
    parts = [np.asarray(p) for p in partitions]
    if not parts:
        raise StructuralError("need at least one partition")
    n = parts[0].size
    if any(p.shape != (n,) for p in parts):
        raise StructuralError("all partitions must label the same atoms")
    if np.unique(parts[-1]).size != n:
        raise StructuralError("finest partition must be the atoms")
    for coarse, fine in zip(parts, parts[1:]):
        for lab in np.unique(fine):
            if np.unique(coarse[fine == lab]).size != 1:
                raise StructuralError("partitions are not nested")
    w = _check_weights(weights, n)
    space = PointSpace((np.arange(n) + 0.5) / n if coords is None else coords,
                       np.full(n, 1.0 / n) if w is None else w)
    seen, members, levels = set(), [], []
    for k, p in enumerate(parts):
        cells = [np.flatnonzero(p == lab) for lab in np.unique(p)]
        for cell in sorted(cells, key=lambda c: c[0]):
            key = cell.tobytes()
            if key not in seen:
                seen.add(key)
                members.append(cell)
                levels.append(k)
    return BallBasis(space, members, levels=levels, kind="martingale",
                     partitions=[p.copy() for p in parts])


def balls_containing(basis: BallBasis, x: int) -> list[Ball]:
    if not 0 <= x < basis.space.n:
        raise StructuralError(f"atom {x} out of range")
    return [basis.ball(i) for i in basis.containing(x)]


# -- verifier ---------------------------------------------------------------------

@dataclass
class AxiomReport:
    b1: bool
    b2: bool
    b3: str
    b4: bool
    b4_stored: bool
    K: float
    K_stored: float
    doubling: bool
    eta: float
    full_space: bool
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.b1 and self.b2 and self.b4 and self.b4_stored and self.full_space

    def to_dict(self) -> dict:
        return {
            "B1": self.b1, "B2": self.b2, "B3": self.b3,
            "B4": self.b4, "B4_stored_hull": self.b4_stored,
            "K": _json_float(self.K), "K_stored": _json_float(self.K_stored),
            "doubling": self.doubling, "eta": _json_float(self.eta),
            "full_space": self.full_space, "passed": self.passed, "witnesses": self.witnesses,
        }


def verify_axioms(basis: BallBasis) -> AxiomReport:
    """Exhaustive check of B1, B2, B4 (stored and minimal hulls), doubling and the full-space ball.

    Failures carry witnesses: ball ids and atom indices that re-fail the
    corresponding inequality.
    """
    if basis.m > 20000:
        raise ResourceError("axiom verification limited to 20000 balls")
    wit = {}
    mu = basis.measures
    b1 = bool(np.all(basis.sizes > 0) and np.all(mu > 0) and np.all(np.isfinite(mu)))

    co = (basis.membership.T @ basis.membership).tocsr()
    n = basis.space.n
    covered = np.asarray((co > 0).sum(axis=1)).ravel()
    b2 = bool(np.all(covered == n))
    if not b2:
        x = int(np.flatnonzero(covered < n)[0])
        row = np.zeros(n, dtype=bool)
        row[co[x].indices] = True
        wit["B2"] = {"pair": [x, int(np.flatnonzero(~row)[0])]}

    b3 = "certified" if basis.has_atom_balls else "not verified"

    # stored hull: every qualifying A inside hull(B), and the size constant
    b4_stored = True
    Q = _qualifying(basis).tocoo()
    hB = basis.hull[Q.row]
    missing = hB < 0
    if missing.any():
        b4_stored = False
        i = int(np.flatnonzero(missing)[0])
        wit["B4_stored"] = {"ball": int(Q.row[i]), "reason": "no hull assigned"}
    else:
        sub, sup = basis.containment_pairs()
        codes = Q.col.astype(np.int64) * basis.m + hB
        ok = np.isin(codes, sub * basis.m + sup)
        if not ok.all():
            b4_stored = False
            i = int(np.flatnonzero(~ok)[0])
            wit["B4_stored"] = {"ball": int(Q.row[i]), "other": int(Q.col[i]), "hull": int(hB[i])}

    minimal = _generic_hulls(basis)
    b4 = bool(np.all(minimal >= 0))
    if b4:
        K = float(np.max(mu[minimal] / mu))
    else:
        K = float("inf")
        i = int(np.flatnonzero(minimal < 0)[0])
        Qi = _qualifying(basis)[i].indices
        wit["B4"] = {"ball": i, "qualifying": Qi.tolist(),
                     "reason": "no ball contains the union of qualifying balls"}

    eta, bad = doubling_constant(basis)
    doubling = bool(np.isfinite(eta))
    if not doubling:
        wit["doubling"] = {"ball": bad}
    basis._eta = eta

    hulls = basis.hull[basis.hull >= 0]
    full_space = bool(basis.full_ball >= 0 and np.any(basis.sizes[hulls] == n))
    if not full_space:
        wit["full_space"] = {"reason": "no hull equals the whole space"}

    return AxiomReport(b1, b2, b3, b4, b4_stored, K, basis.K, doubling, eta, full_space, wit)

