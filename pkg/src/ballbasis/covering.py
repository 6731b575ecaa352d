"""Covering machinery: greedy disjoint selection, density points, well-balanced
balls, balanced covers and the Calderon tree behind the exponential estimate.

Every construction re-checks its postconditions before returning.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .basis import Ball, BallBasis
from .errors import AlgorithmFailure, ParameterError, PreconditionError, StructuralError
from .functionals import _median, osc, osc_alpha
from .space import RTOL, MeasurableSet, as_index


def _ids(basis: BallBasis, balls) -> list[int]:
    return [b.id if isinstance(b, Ball) else int(b) for b in balls]


def _hull_cover_mask(basis: BallBasis, ids) -> np.ndarray:
    mask = np.zeros(basis.space.n, dtype=bool)
    for i in ids:
        mask[basis.members(int(basis.hull[i]))] = True
    return mask


def besicovitch_select(basis: BallBasis, E, G) -> list[Ball]:
    """Pairwise disjoint balls from ``G`` whose hulls cover ``E``.

    Greedy: largest measure first (ties to the smallest id), skipping balls
    that meet an earlier pick, until the hulls cover ``E``.
    """
    E = as_index(E)
    cand = sorted(set(_ids(basis, G)), key=lambda i: (-basis.measures[i], i))
    union = np.zeros(basis.space.n, dtype=bool)
    for i in cand:
        union[basis.members(i)] = True
    if not union[E].all():
        raise PreconditionError("the family does not cover E")
    taken = np.zeros(basis.space.n, dtype=bool)
    covered = np.zeros(basis.space.n, dtype=bool)
    chosen: list[int] = []
    for i in cand:
        if covered[E].all():
            break
        mem = basis.members(i)
        if taken[mem].any():
            continue
        chosen.append(i)
        taken[mem] = True
        h = basis.hull[i]
        if h < 0:
            raise AlgorithmFailure(f"ball {i} has no hull", [basis.ball(j) for j in chosen])
        covered[basis.members(h)] = True
    if not covered[E].all():
        raise AlgorithmFailure("hulls of the selection do not cover E",
                               [basis.ball(j) for j in chosen])
    return [basis.ball(i) for i in chosen]


def density_check(basis: BallBasis, E, x: int, gamma: float) -> bool:
    """True iff some ball through x has mu(B & E) > gamma mu(B)."""
    if not 0 < gamma < 1:
        raise ParameterError("gamma must lie in (0, 1)")
    rows = basis.containing(x)
    ind = np.zeros(basis.space.n)
    ind[as_index(E)] = basis.space.mu[as_index(E)]
    inside = basis.membership[rows] @ ind
    return bool(np.any(inside > gamma * basis.measures[rows]))


@dataclass
class WellBalancedBall:
    ball: Ball
    F: MeasurableSet
    slacks: dict

    @property
    def ok(self) -> bool:
        return all(v >= 0 for v in self.slacks.values())


def _f_measure_per_ball(basis: BallBasis, Fmask: np.ndarray, rows=None) -> np.ndarray:
    M = basis.membership if rows is None else basis.membership[rows]
    return np.asarray(M @ (basis.space.mu * Fmask), dtype=float)


def _doubling_witness(basis: BallBasis, a0: int) -> int:
    mu = basis.measures
    sup = basis.supersets(a0)
    ok = sup[(mu[sup] >= 2 * mu[a0] * (1 - RTOL)) & (mu[sup] <= basis.eta * mu[a0] * (1 + RTOL))]
    if ok.size == 0:
        raise StructuralError(f"no doubling witness for ball {a0}")
    return int(min(ok, key=lambda i: (mu[i], i)))


def well_balanced(basis: BallBasis, F, x: int, _Fball=None) -> WellBalancedBall:
    F = MeasurableSet(as_index(F))
    total = basis.space.total
    muF = basis.space.measure(F)
    if not muF < total / 4:
        raise PreconditionError("need mu(F) < mu(X)/4")
    if not basis.is_doubling:
        raise PreconditionError("basis is not doubling")
    Fmask = F.mask(basis.space.n)
    fm = _f_measure_per_ball(basis, Fmask) if _Fball is None else _Fball
    mu = basis.measures
    rows = basis.containing(x)
    fam = rows[fm[rows] >= mu[rows] / 2 * (1 - RTOL)]
    if fam.size == 0:
        raise PreconditionError(f"atom {x} is not a density point of F")
    r = mu[fam].max()
    # largest member of the family (strictly above r/2), ties to smallest id
    a0 = int(min(fam[mu[fam] > r / 2], key=lambda i: (-mu[i], i)))
    B = _doubling_witness(basis, a0)
    H = int(basis.hull[B])
    eta, K = basis.eta, basis.K
    slacks = {
        "hull_lower": fm[H] - mu[H] / (2 * eta * K),
        "hull_upper": mu[H] / 2 - fm[H],
        "ball_lower": fm[B] - mu[B] / (2 * eta),
        "ball_upper": mu[B] / 2 - fm[B],
    }
    tol = RTOL * mu[H]
    slacks = {k: (0.0 if -tol < v < 0 else float(v)) for k, v in slacks.items()}
    out = WellBalancedBall(basis.ball(B), F, slacks)
    if not out.ok:
        raise AlgorithmFailure(f"ball {B} is not well balanced: {slacks}", out)
    return out


@dataclass
class BalancedCover:
    balls: list[Ball]
    F: MeasurableSet
    Fprime: MeasurableSet
    check: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.check[k] for k in ("covers", "meets", "sum_bound", "balanced"))

    def to_dict(self) -> dict:
        return {"balls": [b.id for b in self.balls], "F": self.F.tolist(),
                "Fprime": self.Fprime.tolist(), "check": self.check}


def balanced_cover(basis: BallBasis, F, Fprime) -> BalancedCover:
    F = MeasurableSet(as_index(F))
    Fp = MeasurableSet(as_index(Fprime))
    if not Fp <= F:
        raise PreconditionError("F' must be a subset of F")
    if not basis.has_atom_balls:
        raise PreconditionError("balanced covers need an atomized basis")
    total = basis.space.total
    muF = basis.space.measure(F)
    if not muF < total / 4:
        raise PreconditionError("need mu(F) < mu(X)/4")
    eta, K = basis.eta, basis.K
    bound = 2 * eta * K * muF
    if len(Fp) == 0:
        return BalancedCover([], F, Fp, {"covers": True, "meets": True, "sum_bound": True,
                                         "balanced": True, "sum": 0.0, "bound": bound,
                                         "max_balance": 0.0})
    Fmask = F.mask(basis.space.n)
    fm = _f_measure_per_ball(basis, Fmask)
    family = sorted({well_balanced(basis, F, x, _Fball=fm).ball.id for x in Fp})
    picked = besicovitch_select(basis, Fp, family)
    hulls = [int(basis.hull[g.id]) for g in picked]
    mu = basis.measures
    cover = np.zeros(basis.space.n, dtype=bool)
    meets = True
    for h in hulls:
        mem = basis.members(h)
        cover[mem] = True
        meets &= bool(np.isin(mem, Fp.idx).any())
    s = float(sum(mu[h] for h in hulls))
    balance = [fm[h] / mu[h] for h in hulls]
    check = {
        "covers": bool(cover[Fp.idx].all()),
        "meets": meets,
        "sum_bound": s <= bound * (1 + RTOL),
        "balanced": all(b <= 0.5 * (1 + RTOL) for b in balance),
        "sum": s,
        "bound": bound,
        "max_balance": float(max(balance)),
    }
    return BalancedCover([basis.ball(h) for h in hulls], F, Fp, check)


# -- Calderon tree -----------------------------------------------------------------

def admissible_alpha(basis: BallBasis) -> float:
    """Smallest alpha for which the child-measure and overlap bounds are guaranteed."""
    return max(0.75, 1 - 1 / (8 * basis.eta * basis.K ** 3))


@dataclass
class TreeNode:
    ball: int
    generation: int
    parent: int | None
    good_set: MeasurableSet
    hull_osc_alpha: float
    children: list[int] = field(default_factory=list)


@dataclass
class CalderonTree:
    root: Ball
    alpha: float
    nodes: list[TreeNode]
    generations: list[list[int]]
    delta_measures: list[float]
    decay_constant: float
    checks: dict
    violations: list[dict]
    terminated: bool

    @property
    def ok(self) -> bool:
        return self.terminated and not self.violations

    def to_dict(self) -> dict:
        return {
            "root": self.root.id, "alpha": self.alpha,
            "nodes": [{"ball": nd.ball, "generation": nd.generation, "parent": nd.parent,
                       "good_set": nd.good_set.tolist(), "children": nd.children,
                       "hull_osc_alpha": nd.hull_osc_alpha} for nd in self.nodes],
            "generations": self.generations,
            "delta_measures": self.delta_measures,
            "decay_constant": self.decay_constant,
            "checks": self.checks, "violations": self.violations,
            "terminated": self.terminated,
        }


def calderon_tree(basis: BallBasis, f, B, alpha: float | None = None, strict: bool = True,
                  max_nodes: int = 200_000) -> CalderonTree:
    """Generations of balls with good sets, grown until no residual is left.

    With ``strict`` an alpha below :func:`admissible_alpha` is rejected and any
    violated invariant raises :class:`AlgorithmFailure`. With ``strict=False``
    any alpha in [3/4, 1) is accepted, violations are collected in the result,
    and a branch whose children repeat an ancestor is cut (it would regrow the
    same subtree forever).
    """
    if not basis.has_atom_balls or not basis.is_doubling:
        raise PreconditionError("the tree needs a doubling, atomized basis")
    f = np.asarray(f, dtype=float)
    root = B if isinstance(B, Ball) else basis.ball(int(B))
    amin = admissible_alpha(basis)
    alpha = amin if alpha is None else float(alpha)
    if not 0.75 <= alpha < 1:
        raise ParameterError("alpha must lie in [3/4, 1)")
    if strict and alpha < amin * (1 - RTOL):
        raise ParameterError(f"alpha={alpha} below the admissible threshold {amin}")
    K = basis.K
    mu = basis.measures
    total = basis.space.total
    nodes: list[TreeNode] = []
    violations: list[dict] = []
    terminated = True

    def fail(kind, **info):
        info["check"] = kind
        violations.append(info)
        if strict:
            raise AlgorithmFailure(f"Calderon tree invariant {kind} violated: {info}", nodes)

    queue = deque([(root.id, 0, None)])
    while queue:
        if len(nodes) >= max_nodes:
            terminated = False
            fail("node_budget", nodes=len(nodes))
            break
        a, gen, parent = queue.popleft()
        h = int(basis.hull[a])
        hull = basis.ball(h)
        value, E = osc_alpha(f, hull, alpha)
        me = basis.space.measure(E)
        if me < alpha * mu[h] * (1 - RTOL) or osc(f, E) > 2 * value + RTOL * (1 + abs(value)):
            fail("good_set", node=len(nodes), ball=a)
        k = len(nodes)
        nodes.append(TreeNode(a, gen, parent, E, value))
        if parent is not None:
            nodes[parent].children.append(k)
        bad = MeasurableSet(hull.members) - E
        if not basis.space.measure(bad) < total / 4:
            terminated = False
            fail("bad_set_size", node=k, ball=a)
            continue
        Fp = MeasurableSet(basis.members(a)) - E
        if len(Fp) == 0:
            continue
        cover = balanced_cover(basis, bad, Fp)
        if not cover.ok:
            fail("cover", node=k, ball=a, detail=cover.check)
        kids = [g.id for g in cover.balls]
        s = float(sum(mu[g] for g in kids))
        shrink = s <= mu[a] / (4 * K) * (1 + RTOL)
        if not shrink:
            fail("child_measure", node=k, ball=a, child_sum=s, bound=mu[a] / (4 * K))
        chain = set()
        j = k
        while j is not None:
            chain.add(nodes[j].ball)
            j = nodes[j].parent
        if any(g in chain for g in kids):
            # a ball repeating one of its ancestors regrows the same subtree forever
            terminated = False
            fail("nonterminating", node=k, ball=a)
            continue
        for g in kids:
            queue.append((g, gen + 1, k))

    generations: list[list[int]] = []
    for k, nd in enumerate(nodes):
        while len(generations) <= nd.generation:
            generations.append([])
        generations[nd.generation].append(k)

    # overlap of good sets between parent and child
    overlap_ok = True
    for k, nd in enumerate(nodes):
        for c in nd.children:
            if len(nd.good_set & nodes[c].good_set) == 0:
                overlap_ok = False
                fail("overlap", node=k, child=c)

    n = basis.space.n
    delta_measures = []
    for g in range(len(generations)):
        mask = np.zeros(n, dtype=bool)
        for k in (k for gg in generations[g:] for k in gg):
            mask[basis.members(nodes[k].ball)] = True
        delta_measures.append(float(np.sum(basis.space.mu[mask])))
    mB = mu[root.id]
    decay = max((4 ** g * d / mB for g, d in enumerate(delta_measures) if g >= 1), default=0.0)

    chain_ratio = _chain_check(basis, f, root, nodes, generations) if terminated else float("nan")
    if terminated and chain_ratio > 1 + 1e-9:
        fail("chain", ratio=chain_ratio)

    sums_ok = not any(v["check"] == "child_measure" for v in violations)
    checks = {
        "good_set": not any(v["check"] == "good_set" for v in violations),
        "child_measure": sums_ok,
        "overlap": overlap_ok,
        "chain_ratio": chain_ratio,
        "decay_constant": decay,
        "generations": len(generations),
        "alpha_admissible": alpha >= amin * (1 - RTOL),
    }
    return CalderonTree(root, alpha, nodes, generations, delta_measures, decay, checks,
                        violations, terminated)


def _chain_check(basis, f, root, nodes, generations) -> float:
    """Max over atoms of root of |f(x) - median| / (2 * sum of hull oscillations
    along the chain ending at a node whose good set holds x)."""
    n = basis.space.n
    med = _median(f[root.members], basis.space.mu[root.members])
    # deepest generation whose balls contain x, and a node there with x in E
    level = np.full(n, -1)
    for g, ks in enumerate(generations):
        for k in ks:
            level[basis.members(nodes[k].ball)] = g
    worst = 0.0
    for x in root.members:
        g = level[x]
        host = None
        for k in generations[g]:
            if x in nodes[k].good_set and x in basis.ball(nodes[k].ball):
                host = k
                break
        if host is None:
            return float("inf")
        total, k = 0.0, host
        while k is not None:
            total += nodes[k].hull_osc_alpha
            k = nodes[k].parent
        dev = abs(f[x] - med)
        if dev > 0:
            worst = max(worst, float("inf") if total == 0 else dev / (2 * total))
    return worst
