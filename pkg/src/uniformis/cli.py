"""Command-line entry point: ``uniformis <subcommand> ...``.

Inputs are JSON documents validated against the schemas shipped in
``uniformis/schemas``.  Every input is loaded and checked before any work
starts.  Traces are line-delimited JSON records, one object per line, so a
long solve streams as it runs.

Exit codes: 0 success, 1 usage or input error, 2 non-convergence,
3 contract, hypothesis or check violation.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import fixedpoint as fp
from .core import ContractionConstants, PseudometricFamily, float_tol, saturate
from .hausdorff import PointCloud, hausdorff_pseudometric, hausdorff_rho, hausdorff_via_inflation
from .multifun import (ClosureError, MultiFunction, check_f_contractive, check_residual_inequality,
                       check_weak_lower_sc, check_weak_upper_sc, envelope_membership)
from .noncompactness import alpha_bounds, certify_k_set_contraction, expr_from_dict, op_from_dict
from .variational import HypothesisViolation, OrderContext, bishop_phelps_search, ekeland_search

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGED = 2
EXIT_VIOLATION = 3

class InputError(Exception):
    """A missing, unparsable or schema-invalid input file."""


# trace records


def format_record(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), allow_nan=True)


def parse_record(line: str) -> dict:
    rec = json.loads(line)
    if not isinstance(rec, dict) or "type" not in rec:
        raise ValueError("a trace record is a JSON object with a 'type' field")
    return rec


class TraceWriter:
    """Writes records to PATH, to stdout for '-', or nowhere."""

    def __init__(self, path: str | None):
        self.path = path
        self._fh = None
        if path == "-":
            self._fh = sys.stdout
        elif path is not None:
            self._fh = open(path, "w")

    def write(self, record: dict) -> None:
        if self._fh is not None:
            self._fh.write(format_record(_plain(record)) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None and self._fh is not sys.stdout:
            self._fh.close()


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    outputs: dict[str, str | None] = field(default_factory=dict)

    def record(self) -> dict:
        return {"type": "manifest", **_plain(asdict(self))}


# input loading


@lru_cache(maxsize=None)
def schema(kind: str) -> dict:
    text = resources.files("uniformis").joinpath("schemas", f"{kind}.schema.json").read_text()
    return json.loads(text)


def _near_line(text: str, path) -> int | None:
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(keys[-1]), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def validate(doc, kind: str, source: str = "<input>", text: str | None = None) -> None:
    """Raise InputError naming the offending field (and a line, when known)."""
    validator = jsonschema.Draft202012Validator(schema(kind))
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is None:
        return
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    line = _near_line(text, err.absolute_path) if text else None
    loc = f"{source}:{line}" if line else source
    raise InputError(f"{loc}: field '{where}': {err.message}")


def read_input(path: str, kind: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    validate(doc, kind, path, text)
    return doc


def _build(path: str, fn: Callable):
    try:
        return fn()
    except (ValueError, KeyError, TypeError) as e:
        raise InputError(f"{path}: {e}") from None


def load_space(path: str) -> PseudometricFamily:
    doc = read_input(path, "space")
    fam = _build(path, lambda: PseudometricFamily.from_dict(doc))
    return saturate(fam) if doc.get("saturate") else fam


def load_cloud(path: str, dimension: int) -> PointCloud:
    doc = read_input(path, "cloud")
    return _build(path, lambda: PointCloud.from_dict(doc, dimension))


def load_operator(path: str, dimension: int) -> MultiFunction:
    doc = read_input(path, "operator")
    return _build(path, lambda: MultiFunction.from_dict(doc, dimension))


def load_potentials(path: str, family: PseudometricFamily) -> fp.PotentialFamily:
    doc = read_input(path, "potentials")
    return _build(path, lambda: fp.PotentialFamily.from_dict(doc, family))


# argument value parsing


def _point(text: str, dimension: int) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise InputError(f"cannot parse point {text!r}; expected comma-separated numbers") from None
    if v.size != dimension:
        raise InputError(f"point {text!r} has {v.size} coordinates, the space has {dimension}")
    return v


def _per_index(text: str, family: PseudometricFamily, what: str) -> dict[str, float]:
    """'0.5' for every index, or 'd1=0.5,d2=0.25'."""
    try:
        if "=" not in text:
            return {lam: float(text) for lam in family.indices}
        out = {}
        for part in text.split(","):
            lam, val = part.split("=")
            out[lam.strip()] = float(val)
    except ValueError:
        raise InputError(f"cannot parse {what} {text!r}") from None
    unknown = set(out) - set(family.indices)
    if unknown:
        raise InputError(f"{what}: unknown indices {sorted(unknown)}")
    return out


def _constants(text: str, family: PseudometricFamily) -> ContractionConstants:
    try:
        return ContractionConstants(_per_index(text, family, "k")).for_family(family)
    except (ValueError, KeyError) as e:
        raise InputError(f"k: {e}") from None


def _single_valued(T: MultiFunction, path: str) -> Callable:
    spec = T.spec or {}
    if spec.get("kind") != "affine_branches" or len(spec["branches"]) != 1:
        raise InputError(f"{path}: this solver needs a single-valued map (one affine branch)")
    return lambda x: T(x).points[0]


# output helpers


class Console:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, *parts) -> None:
        if not self.quiet:
            print(*parts)


def _fmt(x) -> str:
    x = np.asarray(x, float)
    return f"{x.item():.12g}" if x.size == 1 else "(" + ", ".join(f"{v:.12g}" for v in x) + ")"


def _solver_cfg(args) -> fp.SolverConfig:
    return fp.SolverConfig(tol=args.tol, max_iter=args.max_iter)


def _emit_trace(trace: fp.SolverTrace, tw: TraceWriter) -> None:
    for rec in trace.records():
        tw.write(rec)


def _solver_exit(trace: fp.SolverTrace) -> int:
    return EXIT_OK if trace.termination == fp.CONVERGED else EXIT_NONCONVERGED


# subcommands; each gets (args, console, trace writer, manifest) after inputs are resolved


def prepare_hausdorff(args):
    fam = load_space(args.space)
    A, B = load_cloud(args.a, fam.dimension), load_cloud(args.b, fam.dimension)
    if args.index is not None and args.index not in fam.indices:
        raise InputError(f"--index: unknown index {args.index!r}; have {list(fam.indices)}")
    inputs = {"space": args.space, "a": args.a, "b": args.b}

    def run(out, tw):
        tol = args.tol
        ok = True
        for lam in [args.index] if args.index else fam.indices:
            h = hausdorff_pseudometric(fam, lam, A, B)
            oracle = hausdorff_via_inflation(fam, lam, A, B, tol=tol)
            agree = abs(h - oracle) <= max(tol, 1e-6)
            ok &= agree
            tw.write({"type": "hausdorff", "index": lam, "value": h, "oracle": oracle, "agree": agree})
            out(f"H[{lam}] = {h:.12g}  (inflation oracle {oracle:.12g}, {'agree' if agree else 'DISAGREE'})")
        rho = hausdorff_rho(fam, A, B)
        tw.write({"type": "summary", "rho": rho, "oracle_agreement": ok})
        out(f"H[rho] = {rho:.12g}")
        return EXIT_OK if ok else EXIT_VIOLATION

    return inputs, run


def prepare_alpha(args):
    doc = read_input(args.expr, "expr")
    expr = _build(args.expr, lambda: expr_from_dict(doc, args.dimension))

    def run(out, tw):
        try:
            res = alpha_bounds(expr)
        except ValueError as e:
            out(f"inconsistent expression: {e}")
            tw.write({"type": "summary", "error": str(e)})
            return EXIT_VIOLATION
        for step in res.trace:
            tw.write({"type": "step", "path": step.path, "node": step.node, "rule": step.rule,
                      "interval": step.interval.to_list()})
            out(str(step))
        tw.write({"type": "summary", "interval": res.interval.to_list()})
        out(f"alpha in {res.interval.to_list()}")
        return EXIT_OK

    return {"expr": args.expr}, run


def prepare_certify(args):
    doc = read_input(args.op, "op")
    op = _build(args.op, lambda: op_from_dict(doc))

    def run(out, tw):
        res = certify_k_set_contraction(op, args.k)
        for node, rule, factor in res.trace:
            tw.write({"type": "step", "node": node, "rule": rule, "factor": factor})
            out(f"{node:<16} {rule:<10} factor {factor:g}")
        if res.certified:
            tw.write({"type": "summary", "certified": True, "factor": res.factor, "k": args.k})
            out(f"certified: alpha(op(A)) <= {res.factor:g} alpha(A), within k = {args.k:g}")
            return EXIT_OK
        tw.write({"type": "summary", "certified": False, "reason": res.reason, "blocking_node": res.blocking_node})
        out(f"refused at {res.blocking_node}: {res.reason}")
        return EXIT_VIOLATION

    return {"op": args.op}, run


def _sample_pairs(grid: PointCloud, n: int, seed: int):
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(grid), size=n)
    j = rng.integers(0, len(grid), size=n)
    return [(grid[a], grid[b]) for a, b in zip(i, j)]


def prepare_check(args):
    fam = load_space(args.space)
    T = load_operator(args.operator, fam.dimension)
    grid = load_cloud(args.grid, fam.dimension)
    inputs = {"space": args.space, "operator": args.operator, "grid": args.grid}
    what = args.what
    if what in ("weak-lsc", "weak-usc"):
        if args.index is None or args.alpha is None:
            raise InputError(f"check --what {what} needs --index and --alpha")
    if args.index is not None and args.index not in fam.indices:
        raise InputError(f"--index: unknown index {args.index!r}")
    if what == "fcontractive" and args.k is None:
        raise InputError("check --what fcontractive needs --k")
    k = _constants(args.k, fam) if what == "fcontractive" else None
    K = None
    if what == "inward":
        if args.hull is None:
            raise InputError("check --what inward needs --hull")
        K = load_cloud(args.hull, fam.dimension)
        inputs["hull"] = args.hull

    def run(out, tw):
        tol = args.tol
        if what in ("weak-lsc", "weak-usc"):
            checker = check_weak_lower_sc if what == "weak-lsc" else check_weak_upper_sc
            rep = checker(T, fam, args.index, args.alpha, grid, args.probe_radius, args.refinements)
            for v in rep.violations:
                tw.write({"type": "violation", "witness": v.witness, **v.values})
            passed, tested, summary = rep.passed, rep.samples_tested, rep.summary()
        elif what == "residual-inequality":
            rep = check_residual_inequality(T, fam, args.index, _sample_pairs(grid, args.pairs, args.seed), tol)
            for v in rep.violations:
                tw.write({"type": "violation", "witness": v.witness, **v.values})
            passed, tested, summary = rep.passed, rep.samples_tested, rep.summary()
        elif what == "fcontractive":
            rep = check_f_contractive(T, fam, k, _sample_pairs(grid, args.pairs, args.seed), tol)
            for v in rep.violations:
                tw.write({"type": "violation", "witness": v.witness, **v.values})
            passed, tested = rep.passed, rep.samples_tested
            summary = "worst ratios " + ", ".join(f"{lam}={r:.6g}" for lam, r in rep.worst_ratio.items())
        else:
            passed, tested, skipped = True, 0, 0
            for x in grid:
                try:
                    images = T(x)
                    results = [envelope_membership(K, x, t, fam, tol=tol) for t in images]
                except ValueError:
                    skipped += 1  # base point outside co(K)
                    continue
                tested += 1
                if not all(results):
                    passed = False
                    tw.write({"type": "violation", "witness": [x.tolist()], "images": images.points.tolist()})
            summary = f"{tested} base points in co(K), {skipped} outside skipped"
        tw.write({"type": "summary", "what": what, "passed": passed, "samples_tested": tested})
        out(f"{what}: {'PASS' if passed else 'FAIL'} on {tested} samples; {summary}")
        return EXIT_OK if passed else EXIT_VIOLATION

    return inputs, run


def prepare_picard(args):
    fam = load_space(args.space)
    T = load_operator(args.operator, fam.dimension)
    f = _single_valued(T, args.operator)
    k = _constants(args.k, fam)
    x0 = _point(args.x0, fam.dimension)

    def run(out, tw):
        x, trace = fp.picard_solve(f, fam, k, x0, _solver_cfg(args))
        _emit_trace(trace, tw)
        out(f"{trace.termination} after {len(trace.residuals)} iterations: x = {_fmt(x)}, "
            f"residual {trace.notes['residual']:.3g}")
        return _solver_exit(trace)

    return {"space": args.space, "operator": args.operator}, run


def prepare_nadler(args):
    fam = load_space(args.space)
    T = load_operator(args.operator, fam.dimension)
    k = _constants(args.k, fam)
    x0 = _point(args.x0, fam.dimension)

    def run(out, tw):
        try:
            x, trace = fp.nadler_solve(T, fam, k, x0, _solver_cfg(args), branch=args.branch)
        except IndexError:
            out(f"branch {args.branch} does not exist")
            return EXIT_USAGE
        _emit_trace(trace, tw)
        out(f"{trace.termination} after {len(trace.residuals)} iterations: x = {_fmt(x)}, "
            f"residual {trace.notes['residual']:.3g}, step bounds "
            f"{'hold' if trace.notes['contraction_step_bound'] else 'FAIL'}")
        return _solver_exit(trace)

    return {"space": args.space, "operator": args.operator}, run


def prepare_caristi(args):
    fam = load_space(args.space)
    T = load_operator(args.operator, fam.dimension)
    x0 = _point(args.x0, fam.dimension)
    inputs = {"space": args.space, "operator": args.operator}
    if args.potentials is not None:
        phi, selection = load_potentials(args.potentials, fam), None
        inputs["potentials"] = args.potentials
    elif args.k is not None:
        phi = fp.caristi_contraction_potentials(T, fam, _constants(args.k, fam))
        selection = fp.metric_selection
    else:
        raise InputError("solve-caristi needs --potentials or --k")

    def run(out, tw):
        x, trace = fp.caristi_descent(T, fam, phi, x0, _solver_cfg(args), selection)
        _emit_trace(trace, tw)
        out(f"{trace.termination} after {len(trace.residuals)} steps: x = {_fmt(x)}, "
            f"residual {trace.notes['residual']:.3g}")
        return _solver_exit(trace)

    return inputs, run


def prepare_inward(args):
    fam = load_space(args.space)
    T = load_operator(args.operator, fam.dimension)
    f = _single_valued(T, args.operator)
    K = load_cloud(args.hull, fam.dimension)
    k = _constants(args.k, fam)
    x0 = _point(args.x0, fam.dimension)

    def run(out, tw):
        try:
            x, trace, witnesses = fp.inward_solve(f, K, fam, k, x0, _solver_cfg(args), args.margin)
        except fp.InwardnessError as e:
            if e.trace is not None:
                _emit_trace(e.trace, tw)
            out(f"infeasible: {e}")
            return EXIT_VIOLATION
        for n, w in enumerate(witnesses):
            tw.write({"type": "witness", "n": n, "f": w.f, "c": w.c, "residuals": w.residuals})
        _emit_trace(trace, tw)
        out(f"{trace.termination} after {len(trace.residuals)} steps: x = {_fmt(x)}, "
            f"step inequality {'holds' if trace.notes['descent_inequality'] else 'FAILS'}")
        if not trace.notes["descent_inequality"]:
            return EXIT_VIOLATION
        return _solver_exit(trace)

    return {"space": args.space, "operator": args.operator, "hull": args.hull}, run


def _order_inputs(args):
    fam = load_space(args.space)
    phi = load_potentials(args.potentials, fam)
    grid = load_cloud(args.grid, fam.dimension)
    x0 = _point(args.x0, fam.dimension)
    try:
        ctx = OrderContext(fam, phi)
    except (ValueError, KeyError) as e:
        raise InputError(f"{args.space}: {e}") from None
    return fam, ctx, grid, x0, {"space": args.space, "potentials": args.potentials, "grid": args.grid}


def _report_conditions(rep, out, tw) -> int:
    tw.write({"type": "summary", "point": rep.point, "conditions": rep.conditions,
              "strict_margin": rep.strict_margin, "checked_against": rep.checked_against, "scope": rep.scope})
    conds = ", ".join(f"{c} {'ok' if v else 'FAIL'}" for c, v in rep.conditions.items())
    out(f"x* = {_fmt(rep.point)} ({rep.scope}); {conds}; checked against {rep.checked_against} candidates")
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def prepare_bishop_phelps(args):
    fam, ctx, grid, x0, inputs = _order_inputs(args)

    def run(out, tw):
        try:
            _, rep = bishop_phelps_search(ctx, x0, grid)
        except (ValueError, fp.ContractViolation) as e:
            out(f"violation: {e}")
            return EXIT_VIOLATION
        return _report_conditions(rep, out, tw)

    return inputs, run


def prepare_ekeland(args):
    fam, ctx, grid, x0, inputs = _order_inputs(args)
    delta = _per_index(args.delta, fam, "delta")
    if set(delta) != set(fam.indices):
        raise InputError(f"--delta needs a value for every index {list(fam.indices)}")

    def run(out, tw):
        try:
            _, rep = ekeland_search(ctx, x0, delta, grid)
        except (HypothesisViolation, ValueError, fp.ContractViolation) as e:
            tw.write({"type": "summary", "error": str(e)})
            out(f"hypothesis violated: {e}")
            return EXIT_VIOLATION
        return _report_conditions(rep, out, tw)

    return inputs, run


def prepare_demo(args):
    from .demos import REGISTRY

    if args.list:
        names = []
    elif args.name == "all":
        names = list(REGISTRY)
    elif args.name in REGISTRY:
        names = [args.name]
    else:
        raise InputError(f"unknown demo {args.name!r}; available: {', '.join(REGISTRY)}")

    def run(out, tw):
        if args.list:
            for name, demo in REGISTRY.items():
                print(f"{name:<28} {demo.description}")
            return EXIT_OK
        code = EXIT_OK
        for name in names:
            passed, detail = REGISTRY[name].run()
            tw.write({"type": "demo", "name": name, "passed": passed, "detail": detail})
            print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
            if not passed:
                code = EXIT_VIOLATION
        return code

    return {}, run


# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--tol", type=float, default=None, help="solver/check tolerance (default: UNIFORMIS_FLOAT_TOL or 1e-9)")
    g.add_argument("--max-iter", type=int, default=10_000)
    g.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    g.add_argument("--trace", metavar="PATH", default=None, help="line-delimited JSON trace ('-' for stdout)")
    g.add_argument("--quiet", action="store_true", help="suppress the human-readable summary")

    parser = _Parser(prog="uniformis", description="Fixed points and set measures on uniform spaces.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, prepare, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(prepare=prepare)
        return p

    def space_op(p):
        p.add_argument("--space", required=True)
        p.add_argument("--operator", required=True)

    p = add("hausdorff", prepare_hausdorff, "Hausdorff pseudometrics between two clouds")
    p.add_argument("--space", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--index")

    p = add("alpha", prepare_alpha, "interval bounds on the noncompactness measure of a set expression")
    p.add_argument("--expr", required=True)
    p.add_argument("--dimension", type=int)

    p = add("certify-ksc", prepare_certify, "certify a set operator as a k-set contraction")
    p.add_argument("--op", required=True)
    p.add_argument("--k", type=float, required=True)

    p = add("check", prepare_check, "empirical property checks for a multi-function")
    p.add_argument("--what", required=True,
                   choices=["weak-lsc", "weak-usc", "residual-inequality", "fcontractive", "inward"])
    space_op(p)
    p.add_argument("--grid", required=True, help="cloud file of sample points")
    p.add_argument("--index")
    p.add_argument("--alpha", type=float)
    p.add_argument("--probe-radius", type=float, default=0.1)
    p.add_argument("--refinements", type=int, default=8)
    p.add_argument("--k")
    p.add_argument("--hull")
    p.add_argument("--pairs", type=int, default=1000)

    p = add("solve-picard", prepare_picard, "Picard iteration for a single-valued contraction")
    space_op(p)
    p.add_argument("--k", required=True)
    p.add_argument("--x0", required=True)

    p = add("solve-nadler", prepare_nadler, "Nadler iteration for a contractive multi-function")
    space_op(p)
    p.add_argument("--k", required=True)
    p.add_argument("--x0", required=True)
    p.add_argument("--branch", type=int)

    p = add("solve-caristi", prepare_caristi, "potential descent along image points")
    space_op(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--potentials")
    p.add_argument("--k", help="use the contraction potentials d(x, Tx)/(1 - k)")

    p = add("solve-inward", prepare_inward, "fixed point of a weakly inward contraction on co(K)")
    space_op(p)
    p.add_argument("--hull", required=True)
    p.add_argument("--k", required=True)
    p.add_argument("--x0", required=True)
    p.add_argument("--margin", type=float, default=0.9)

    for name, prepare, help_ in (("bishop-phelps", prepare_bishop_phelps, "maximal point above x0"),
                                 ("ekeland", prepare_ekeland, "Ekeland point near an approximate minimizer")):
        p = add(name, prepare, help_)
        p.add_argument("--space", required=True)
        p.add_argument("--potentials", required=True)
        p.add_argument("--grid", required=True)
        p.add_argument("--x0", required=True)
        if name == "ekeland":
            p.add_argument("--delta", required=True)

    p = add("demo", prepare_demo, "run a bundled end-to-end example and print PASS/FAIL")
    p.add_argument("name", nargs="?", default="all")
    p.add_argument("--list", action="store_true")
    return parser


def _config(args) -> dict:
    skip = {"prepare", "command", "trace", "quiet"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.tol is None:
        args.tol = float_tol()
    out = Console(args.quiet)
    try:
        inputs, run = args.prepare(args)
        tw = TraceWriter(args.trace)
    except InputError as e:
        print(f"uniformis {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"uniformis {args.command}: cannot open trace: {e}", file=sys.stderr)
        return EXIT_USAGE
    manifest = RunManifest(args.command, inputs, _config(args), {"trace": args.trace})
    try:
        tw.write(manifest.record())
        try:
            return run(out, tw)
        except (fp.ContractViolation, ClosureError) as e:
            tw.write({"type": "summary", "error": str(e)})
            print(f"uniformis {args.command}: {e}", file=sys.stderr)
            return EXIT_VIOLATION
        except fp.Divergence as e:
            print(f"uniformis {args.command}: {e}", file=sys.stderr)
            return EXIT_NONCONVERGED
    finally:
        tw.close()


def main() -> None:
    sys.exit(dispatch())
