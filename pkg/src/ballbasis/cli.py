"""Command-line front end.

Exit codes: 0 success, 1 a checked inequality or construction invariant failed,
2 usage or input error. Errors are also written to stderr as one JSON object.
Every report embeds the tool version and a hash of the effective configuration,
and contains nothing run-dependent, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .basis import BallBasis, build_dyadic, build_intervals, build_martingale, verify_axioms
from .covering import admissible_alpha, calderon_tree
from .errors import AlgorithmFailure, BallBasisError
from .functionals import (avg, inf_alpha, inf_ball, local_sharp_maximal, maximal, median,
                          osc_alpha, sharp_avg, sharp_maximal, starred_avg, starred_sharp)
from .io import config_hash, csv_text, dumps, read_space_csv, space_csv, write_text
from .operators import KINDS, FrequencyFamily, OperatorSpec, apply, bind, estimate
from .sampling import FAMILIES, random_function, rng_for
from .verify import (domination_profile, exp_tail_bo, exp_tail_report, good_lambda_bo,
                     good_lambda_report, norm_comparison)
from .weights import ainfty_check, certify, make_weight

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
# argument dests that name output locations; excluded from the config hash
OUTPUT_KEYS = {"out", "csv", "outdir", "config", "cmd", "sub", "handler"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- argument groups -----------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON file whose keys set defaults for this command")
    p.add_argument("--out", help="JSON report path (default: stdout)")
    p.add_argument("--csv", help="plot-ready CSV path")


def _basis_args(p):
    p.add_argument("--kind", choices=["dyadic", "intervals", "martingale"], default="dyadic")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--partitions", help="JSON file: list of label lists, coarsest first")
    p.add_argument("--weights", help="CSV with index, coord..., mu columns")
    p.add_argument("--basis", help="basis JSON written by 'basis build'")


def _func_args(p, prefix="f"):
    p.add_argument(f"--{prefix}-kind", choices=list(FAMILIES) + ["file"],
                   default="random-gaussian")
    p.add_argument(f"--{prefix}-file", help="CSV with a value column")
    p.add_argument("--seed", type=int, default=0)


def _g_args(p):
    p.add_argument("--g", choices=["maximal", "sharp", "local-sharp", "abs", "file"],
                   default="local-sharp")
    p.add_argument("--g-file")
    p.add_argument("--r", type=float, default=1.0)


def _op_args(p, default="hilbert_truncated"):
    p.add_argument("--op", choices=KINDS, default=default)
    p.add_argument("--freqs", type=int, help="number of modulation frequencies")
    p.add_argument("--signs", type=int, nargs="+")
    p.add_argument("--budget", type=int, default=256, help="samples per estimate")


def _weight_args(p):
    p.add_argument("--weight", choices=["lebesgue", "power", "atomic"], default="lebesgue")
    p.add_argument("--a", type=float, default=1.0, help="power exponent")
    p.add_argument("--atom", type=int, default=0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--floor", type=float, default=1.0)


def build_parser() -> Parser:
    root = Parser(prog="ballbasis", description=__doc__.splitlines()[0])
    root.add_argument("--version", action="version", version=f"ballbasis {__version__}")
    cmds = root.add_subparsers(dest="cmd", required=True, parser_class=Parser)

    basis = cmds.add_parser("basis", help="build or check a ball basis")
    bsub = basis.add_subparsers(dest="sub", required=True, parser_class=Parser)
    for name, fn in (("build", cmd_basis_build), ("check", cmd_basis_check)):
        p = bsub.add_parser(name)
        _common(p)
        _basis_args(p)
        p.set_defaults(handler=fn)

    fn = cmds.add_parser("functional").add_subparsers(dest="sub", required=True,
                                                      parser_class=Parser)
    p = fn.add_parser("eval")
    _common(p)
    _basis_args(p)
    _func_args(p)
    p.add_argument("--functional", required=True, choices=sorted(FUNCTIONALS))
    p.add_argument("--ball", default="root")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--r", type=float, default=1.0)
    p.set_defaults(handler=cmd_functional)

    op = cmds.add_parser("op").add_subparsers(dest="sub", required=True, parser_class=Parser)
    for name, fnc in (("apply", cmd_op_apply), ("estimate", cmd_op_estimate)):
        p = op.add_parser(name)
        _common(p)
        _basis_args(p)
        _func_args(p)
        _op_args(p)
        p.add_argument("--r", type=float, default=1.0)
        p.set_defaults(handler=fnc)

    p = cmds.add_parser("dominate")
    _common(p)
    _basis_args(p)
    _func_args(p)
    _g_args(p)
    p.add_argument("--mode", choices=["weak", "strong"], default="weak")
    p.add_argument("--alphas", type=float, nargs="+", default=[0.5, 0.75, 0.9, 0.99])
    p.add_argument("--alpha", type=float, default=0.9, help="alpha used by --g local-sharp")
    p.set_defaults(handler=cmd_dominate)

    p = cmds.add_parser("goodlambda")
    _common(p)
    _basis_args(p)
    _func_args(p)
    _g_args(p)
    _weight_args(p)
    _op_args(p)
    p.add_argument("--bo", action="store_true", help="operator form: |Tf| against Mf")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--lambdas", type=float, nargs="+")
    p.add_argument("--eps", type=float, nargs="+")
    p.set_defaults(handler=cmd_goodlambda)

    p = cmds.add_parser("exptail")
    _common(p)
    _basis_args(p)
    _func_args(p)
    _g_args(p)
    _op_args(p)
    p.add_argument("--bo", action="store_true", help="operator form: |Th| > t Mh, h inside the ball")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--ball", default="root")
    p.add_argument("--ts", type=float, nargs="+")
    p.set_defaults(handler=cmd_exptail)

    p = cmds.add_parser("normcomp")
    _common(p)
    _basis_args(p)
    _func_args(p)
    _weight_args(p)
    _op_args(p)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--p", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(handler=cmd_normcomp)

    tree = cmds.add_parser("tree").add_subparsers(dest="sub", required=True, parser_class=Parser)
    p = tree.add_parser("build")
    _common(p)
    _basis_args(p)
    _func_args(p)
    p.add_argument("--alpha", type=float, help="default: smallest admissible alpha")
    p.add_argument("--ball", default="root")
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(handler=cmd_tree)

    w = cmds.add_parser("weights").add_subparsers(dest="sub", required=True, parser_class=Parser)
    p = w.add_parser("check")
    _common(p)
    _basis_args(p)
    _weight_args(p)
    p.add_argument("--deltas", type=float, nargs="+", default=[0.5, 1.0])
    p.add_argument("--threshold", type=float)
    p.set_defaults(handler=cmd_weights)

    rep = cmds.add_parser("report").add_subparsers(dest="sub", required=True, parser_class=Parser)
    p = rep.add_parser("bundle")
    _common(p)
    _basis_args(p)
    _func_args(p)
    _weight_args(p)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--outdir", required=True)
    p.set_defaults(handler=cmd_bundle)
    return root


# -- config files ------------------------------------------------------------------------

def _leaf_parser(root: Parser, argv) -> Parser:
    """The subparser that handles ``argv``'s command."""
    parser = root
    for tok in argv:
        sub = next((a for a in parser._actions
                    if isinstance(a, argparse._SubParsersAction)), None)
        if sub is None:
            break
        if tok in sub.choices:
            parser = sub.choices[tok]
    return parser


def _apply_config(parser: Parser, path: str) -> None:
    """Validate the config file against the command's options and use it as defaults."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    actions = {a.dest: a for a in parser._actions if a.dest not in OUTPUT_KEYS | {"help"}}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise UsageError(f"config key {key!r} is not an option of {parser.prog}")
        act = actions[dest]
        conv = act.type or (lambda v: v)
        try:
            if act.nargs in ("+", "*"):
                if not isinstance(value, list):
                    raise TypeError("expected a list")
                value = [conv(v) for v in value]
            elif isinstance(act, (argparse._StoreTrueAction, argparse.BooleanOptionalAction)):
                if not isinstance(value, bool):
                    raise TypeError("expected a boolean")
            elif value is not None:
                if isinstance(value, (list, dict)):
                    raise TypeError("expected a scalar")
                value = conv(value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if act.choices is not None and value is not None:
            vals = value if isinstance(value, list) else [value]
            if any(v not in act.choices for v in vals):
                raise UsageError(f"config key {key!r}: {value!r} not in {list(act.choices)}")
        act.default = value
        act.required = False


# -- shared builders ---------------------------------------------------------------------

def make_basis(ns) -> BallBasis:
    if ns.basis:
        with open(ns.basis, encoding="utf-8") as fh:
            return BallBasis.from_dict(json.load(fh))
    weights = read_space_csv(ns.weights)[0].mu if ns.weights else None
    if ns.kind == "dyadic":
        return build_dyadic(ns.depth, weights)
    if ns.kind == "intervals":
        return build_intervals(ns.n, weights)
    if not ns.partitions:
        raise UsageError("--kind martingale needs --partitions")
    with open(ns.partitions, encoding="utf-8") as fh:
        return build_martingale(json.load(fh), weights)


def make_function(ns, n: int, prefix: str = "f") -> np.ndarray:
    kind = getattr(ns, f"{prefix}_kind")
    if kind == "file":
        path = getattr(ns, f"{prefix}_file")
        if not path:
            raise UsageError(f"--{prefix}-kind file needs --{prefix}-file")
        _, values = read_space_csv(path)
        if values is None or values.size != n:
            raise UsageError(f"{path}: need a value column with {n} rows")
        return values
    return random_function(kind, n, rng_for(ns.seed, 0))


def make_g(ns, f, basis) -> np.ndarray:
    if ns.g == "maximal":
        return maximal(f, basis, ns.r)
    if ns.g == "sharp":
        return sharp_maximal(f, basis, ns.r)
    if ns.g == "local-sharp":
        return local_sharp_maximal(f, basis, ns.alpha)
    if ns.g == "abs":
        return np.abs(f)
    if not ns.g_file:
        raise UsageError("--g file needs --g-file")
    _, values = read_space_csv(ns.g_file)
    if values is None or values.size != basis.space.n:
        raise UsageError(f"{ns.g_file}: need a value column with {basis.space.n} rows")
    return values


def make_op(ns, basis) -> OperatorSpec:
    fam = FrequencyFamily.default(basis.space, ns.freqs) if ns.freqs else None
    return OperatorSpec(ns.op, r=getattr(ns, "r", 1.0), signs=ns.signs, frequencies=fam)


def make_weight_measure(ns, basis):
    return make_weight(ns.weight, basis.space, a=ns.a, atom=ns.atom, mass=ns.mass,
                       floor=ns.floor)


def resolve_ball(basis, spec) -> int:
    if str(spec) == "root":
        b = basis.full_ball
        if b is None or b < 0:
            raise UsageError("basis has no ball equal to the whole space")
        return int(b)
    try:
        b = int(spec)
    except ValueError:
        raise UsageError(f"--ball must be 'root' or an integer id, got {spec!r}") from None
    if not 0 <= b < basis.m:
        raise UsageError(f"ball {b} out of range")
    return b


# -- commands: each returns (ok, result, csv-or-None) --------------------------------------

def cmd_basis_build(ns):
    basis = make_basis(ns)
    return True, basis.to_dict(), space_csv(basis.space)


def cmd_basis_check(ns):
    rep = verify_axioms(make_basis(ns))
    d = rep.to_dict()
    rows = [[k, d[k]] for k in ("B1", "B2", "B3", "B4", "B4_stored_hull", "doubling", "full_space", "K", "eta")]
    return rep.passed, d, csv_text(["check", "value"], rows)


FUNCTIONALS = {
    "osc_alpha": "ball", "inf_alpha": "ball", "inf": "ball", "median": "ball",
    "avg": "ball", "sharp_avg": "ball", "starred_avg": "ball", "starred_sharp": "ball",
    "maximal": "atoms", "sharp_maximal": "atoms", "local_sharp_maximal": "atoms",
}


def cmd_functional(ns):
    basis = make_basis(ns)
    f = make_function(ns, basis.space.n)
    name = ns.functional
    if FUNCTIONALS[name] == "atoms":
        vals = {"maximal": lambda: maximal(f, basis, ns.r),
                "sharp_maximal": lambda: sharp_maximal(f, basis, ns.r),
                "local_sharp_maximal": lambda: local_sharp_maximal(f, basis, ns.alpha)}[name]()
        return True, {"functional": name, "values": vals}, space_csv(basis.space, vals)
    B = basis.ball(resolve_ball(basis, ns.ball))
    res = {"functional": name, "ball": B.id}
    if name == "osc_alpha":
        v, E = osc_alpha(f, B, ns.alpha)
        res.update(value=v, witness=E.tolist())
    else:
        res["value"] = {
            "inf_alpha": lambda: inf_alpha(f, B, ns.alpha), "inf": lambda: inf_ball(f, B),
            "median": lambda: median(f, B), "avg": lambda: avg(f, B, ns.r),
            "sharp_avg": lambda: sharp_avg(f, B, ns.r),
            "starred_avg": lambda: starred_avg(f, B, ns.r),
            "starred_sharp": lambda: starred_sharp(f, B, ns.r)}[name]()
    return True, res, csv_text(["functional", "ball", "value"], [[name, B.id, res["value"]]])


def cmd_op_apply(ns):
    basis = make_basis(ns)
    f = make_function(ns, basis.space.n)
    op = make_op(ns, basis)
    Tf = apply(op, f, basis.space, basis)
    return True, {"operator": op.to_dict(), "f": f, "Tf": Tf}, space_csv(basis.space, Tf)


def cmd_op_estimate(ns):
    basis = make_basis(ns)
    op = estimate(make_op(ns, basis), basis, ns.budget, ns.seed)
    d = op.to_dict()
    rows = [["weak_norm_estimate", d["weak_norm_estimate"]],
            ["localization_estimate", d["localization_estimate"]]]
    return True, d, csv_text(["constant", "lower_bound"], rows)


def cmd_dominate(ns):
    basis = make_basis(ns)
    f = make_function(ns, basis.space.n)
    prof = domination_profile(f, make_g(ns, f, basis), basis, ns.mode, ns.alphas)
    rows = [[a, b, w] for a, b, w in zip(prof.alphas, prof.beta_of_alpha, prof.witnesses)]
    return True, prof.to_dict(), csv_text(["alpha", "beta", "witness_ball"], rows)


def cmd_goodlambda(ns):
    basis = make_basis(ns)
    f = make_function(ns, basis.space.n)
    if ns.bo:
        op = estimate(make_op(ns, basis), basis, ns.budget, ns.seed)
        eps = ns.eps or np.geomspace(0.01, 1.0, 16).tolist()
        rep = good_lambda_bo(op, f, basis, eps, ns.lambdas)
        header, rows = rep.table()
        out = rep.to_dict()
        out["operator"] = op.to_dict()
        return rep.monotone, out, csv_text(header, rows)
    w = certify(make_weight_measure(ns, basis), basis, ns.delta)
    rep = good_lambda_report(f, make_g(ns, f, basis), w, basis, ns.alpha, ns.beta, ns.lambdas)
    header, rows = rep.table()
    return rep.inclusion_ok, rep.to_dict(), csv_text(header, rows)


def cmd_exptail(ns):
    basis = make_basis(ns)
    b = resolve_ball(basis, ns.ball)
    f = make_function(ns, basis.space.n)
    if ns.bo:
        h = np.zeros_like(f)
        h[basis.members(b)] = f[basis.members(b)]
        rep = exp_tail_bo(make_op(ns, basis), h, basis, b, ns.ts)
    else:
        rep = exp_tail_report(f, make_g(ns, f, basis), basis, b, ns.ts)
    header, rows = rep.table()
    monotone = bool(np.all(np.diff(rep.tail[np.argsort(rep.ts)]) <= 0))
    return monotone, rep.to_dict(), csv_text(header, rows)


def cmd_normcomp(ns):
    basis = make_basis(ns)
    w = certify(make_weight_measure(ns, basis), basis, ns.delta)
    op = make_op(ns, basis)
    T = bind(op, basis.space, basis)
    rows, per = [], []
    for s in range(ns.samples):
        h = (make_function(ns, basis.space.n) if ns.f_kind == "file"
             else random_function(ns.f_kind, basis.space.n, rng_for(ns.seed, s)))
        rep = norm_comparison(T(h), maximal(h, basis, ns.r), w, ns.p)
        per.append(rep["max_ratio"])
        rows += [[s, r["p"], r["ratio"]] for r in rep["rows"]]
    half = len(per) // 2
    res = {"operator": op.to_dict(), "gamma": w.gamma, "delta": w.delta, "max_ratios": per,
           "max_ratio": max(per),
           "batch_max": [max(per[:half], default=0.0), max(per[half:], default=0.0)]}
    return bool(np.all(np.isfinite(per))), res, csv_text(["sample", "p", "ratio"], rows)


def cmd_tree(ns):
    basis = make_basis(ns)
    f = make_function(ns, basis.space.n)
    b = resolve_ball(basis, ns.ball)
    tree = calderon_tree(basis, f, b, ns.alpha, strict=ns.strict)
    d = tree.to_dict()
    d["admissible_alpha"] = admissible_alpha(basis)
    mB = basis.measures[b]
    rows = [[k, m, m / mB, 4.0 ** k * m / mB] for k, m in enumerate(tree.delta_measures)]
    return tree.ok, d, csv_text(["generation", "delta_measure", "fraction", "scaled_4k"], rows)


def cmd_weights(ns):
    basis = make_basis(ns)
    w = make_weight_measure(ns, basis)
    reps = [ainfty_check(w, basis, d, ns.threshold) for d in ns.deltas]
    rows = [[r.delta, r.gamma, r.passed] for r in reps]
    return (all(r.passed for r in reps), {"weight": w.label, "reports": [r.to_dict() for r in reps]},
            csv_text(["delta", "gamma", "pass"], rows))


def cmd_bundle(ns):
    basis = make_basis(ns)
    f = make_function(ns, basis.space.n)
    os.makedirs(ns.outdir, exist_ok=True)
    parts = {}
    ax = verify_axioms(basis)
    parts["axioms"] = (ax.passed, ax.to_dict(), None)
    g = local_sharp_maximal(f, basis, ns.alpha)
    prof = domination_profile(f, g, basis, "strong", [0.5, 0.75, ns.alpha])
    parts["domination"] = (True, prof.to_dict(), csv_text(
        ["alpha", "beta"], list(zip(prof.alphas, prof.beta_of_alpha))))
    root = resolve_ball(basis, "root")
    tail = exp_tail_report(f, g, basis, root)
    parts["exptail"] = (True, tail.to_dict(), csv_text(*tail.table()))
    wrep = ainfty_check(make_weight_measure(ns, basis), basis, 1.0)
    parts["weights"] = (wrep.passed, wrep.to_dict(), None)
    tree = calderon_tree(basis, f, root, None, strict=False)
    parts["tree"] = (tree.ok, tree.to_dict(), csv_text(
        ["generation", "delta_measure"], list(enumerate(tree.delta_measures))))
    manifest = {}
    for name, (ok, res, csv) in parts.items():
        write_text(os.path.join(ns.outdir, f"{name}.json"), dumps(res))
        files = [f"{name}.json"]
        if csv is not None:
            write_text(os.path.join(ns.outdir, f"{name}.csv"), csv)
            files.append(f"{name}.csv")
        manifest[name] = {"ok": ok, "files": files}
    ok = all(v["ok"] for v in manifest.values())
    return ok, {"outdir_files": manifest}, None


# -- entry point -----------------------------------------------------------------------------

def _emit_error(kind: str, message: str, code: int, partial=None) -> int:
    err = {"error": kind, "message": message, "exit": code}
    if partial is not None:
        err["partial"] = partial
    sys.stderr.write(dumps(err))
    return code


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            _apply_config(_leaf_parser(parser, argv), known.config)
        ns = parser.parse_args(argv)
    except UsageError as exc:
        return _emit_error("usage", str(exc), EXIT_USAGE)
    except SystemExit as exc:       # --help / --version
        return int(exc.code or 0)
    cfg = {k: v for k, v in sorted(vars(ns).items()) if k not in OUTPUT_KEYS}
    cfg["command"] = " ".join(x for x in (ns.cmd, getattr(ns, "sub", None)) if x)
    try:
        ok, result, csv = ns.handler(ns)
    except UsageError as exc:
        return _emit_error("usage", str(exc), EXIT_USAGE)
    except AlgorithmFailure as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_FAIL)
    except (BallBasisError, OSError) as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_USAGE)
    report = {"tool": "ballbasis", "version": __version__, "command": cfg["command"],
              "config": cfg, "config_hash": config_hash(cfg), "ok": bool(ok),
              "result": result}
    text = dumps(report)
    if ns.out:
        write_text(ns.out, text)
    else:
        sys.stdout.write(text)
    if ns.csv and csv is not None:
        write_text(ns.csv, csv)
    return EXIT_OK if ok else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
