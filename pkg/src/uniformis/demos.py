"""Curated end-to-end examples, one per result in scope.

Each demo builds its inputs from the bundled JSON-style documents below,
runs the relevant solver or checker and compares against a known answer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fixedpoint as fp
from .core import ContractionConstants, PseudometricFamily
from .hausdorff import PointCloud, hausdorff_pseudometric, hausdorff_via_inflation
from .multifun import (MultiFunction, check_residual_inequality, check_weak_lower_sc,
                       check_weak_upper_sc, invariant_set_iterate)
from .noncompactness import (alpha_bounds, certify_k_set_contraction, check_alpha_transfer,
                             expr_from_dict, op_from_dict)
from .variational import OrderContext, bishop_phelps_search, ekeland_search, maximal_elements

LINE = {"dimension": 1, "separating": True,
        "pseudometrics": [{"label": "d1", "kind": "coordinate_abs", "params": {"coord": 0}}]}
PLANE = {"dimension": 2, "separating": True,
         "pseudometrics": [{"label": "d1", "kind": "coordinate_abs", "params": {"coord": 0}},
                           {"label": "d2", "kind": "coordinate_abs", "params": {"coord": 1}}]}
TWO_BRANCH = {"kind": "affine_branches",
              "branches": [{"scale": 1 / 3, "offset": [0.0]}, {"scale": 1 / 3, "offset": [1.0]}]}
ABS_POTENTIAL = {"potentials": {"d1": {"kind": "abs"}}}
GRID_41 = {"points": [round(-1 + 0.05 * i, 10) for i in range(41)]}


@dataclass(frozen=True)
class Demo:
    description: str
    run: Callable[[], tuple[bool, str]]


def _line():
    return PseudometricFamily.from_dict(LINE)


def hausdorff_two_point():
    fam = _line()
    A, B = PointCloud.of([0, 1], 1), PointCloud.of([0], 1)
    h = hausdorff_pseudometric(fam, "d1", A, B)
    oracle = hausdorff_via_inflation(fam, "d1", A, B)
    return abs(h - 1) <= 1e-12 and abs(oracle - 1) <= 1e-6, f"H = {h:g}, inflation oracle {oracle:.9f}"


def residual_inequality():
    fam = _line()
    T = MultiFunction.from_dict(TWO_BRANCH, 1)
    rng = np.random.default_rng(0)
    pairs = rng.uniform(-5, 5, size=(1000, 2, 1))
    rep = check_residual_inequality(T, fam, None, pairs)
    return rep.passed, rep.summary()


def semicontinuity_constant():
    fam = _line()
    T = MultiFunction.constant([[0.0]])
    grid = np.linspace(-1, 1, 21)[:, None]
    lsc = check_weak_lower_sc(T, fam, "d1", 0.5, grid, 0.1)
    usc = check_weak_upper_sc(T, fam, "d1", 0.5, grid, 0.1)
    return lsc.passed and usc.passed, f"{lsc.summary()}; {usc.summary()}"


def invariant_set():
    table = {(0.0,): [1.0], (1.0,): [2.0], (2.0,): [1.0, 0.0], (3.0,): [0.0]}
    T = MultiFunction.from_table(table)
    C = invariant_set_iterate(T, [0.0], PointCloud.of([0, 1, 2, 3], 1))
    got = sorted(C.points[:, 0].tolist())
    return got == [0.0, 1.0, 2.0], f"least invariant set containing 0: {got}"


def alpha_scale():
    res = alpha_bounds(expr_from_dict({"op": "scale", "beta": 0.5,
                                       "arg": {"op": "atom", "name": "A", "alpha": [2, 2]}}))
    ok = res.interval.to_list() == [1.0, 1.0] and res.trace[-1].rule == "scale"
    return ok, f"alpha(0.5 A) in {res.interval.to_list()} via '{res.trace[-1].rule}'"


def ksc_certificate():
    op = op_from_dict({"op": "translate", "offset": [1.0],
                       "arg": {"op": "hull", "arg": {"op": "scale", "beta": 0.5, "arg": {"op": "arg"}}}})
    res = certify_k_set_contraction(op, 0.6)
    return res.certified and res.factor == 0.5, f"factor {getattr(res, 'factor', None)} within k = 0.6"


def alpha_transfer_two_branch():
    fam = _line()
    T = MultiFunction.from_dict(TWO_BRANCH, 1)
    rng = np.random.default_rng(1)
    clouds = [PointCloud(rng.uniform(0, 3, size=(100, 1))) for _ in range(5)]
    rep = check_alpha_transfer(T, fam, ContractionConstants({"d1": 1 / 3}), clouds, budget=3)
    return rep.passed, f"worst slack {rep.worst_slack:.4f} over {len(clouds)} clouds"


def picard_affine():
    fam = _line()
    x, trace = fp.picard_solve(lambda x: (x + 1) / 2, fam, ContractionConstants({"d1": 0.5}), [0.0])
    ok = trace.termination == fp.CONVERGED and abs(x[0] - 1) <= 1e-8 and trace.a_priori_bound_satisfied
    return ok, f"x = {x[0]:.12g} after {len(trace.residuals)} iterations"


def nadler_two_branch():
    fam = _line()
    T = MultiFunction.from_dict(TWO_BRANCH, 1)
    k = ContractionConstants({"d1": 1 / 3})
    finals, ok = [], True
    for branch, target in ((0, 0.0), (1, 1.5)):
        x, trace = fp.nadler_solve(T, fam, k, [0.9], branch=branch)
        finals.append(x[0])
        ok &= (trace.termination == fp.CONVERGED and abs(x[0] - target) <= 1e-7
               and trace.notes["contraction_step_bound"])
    return ok, f"branches reach {finals[0]:.3g} and {finals[1]:.9g}; fixed points {{0, 1.5}}"


def caristi_halving():
    fam = PseudometricFamily.from_dict(PLANE)
    T = MultiFunction.affine_branches([(0.5, 0.0)], 2)
    phi = fp.PotentialFamily.from_dict({"potentials": {"d1": {"kind": "abs", "scale": 2},
                                                       "d2": {"kind": "abs", "scale": 2}}}, fam)
    x, trace = fp.caristi_descent(T, fam, phi, [1.0, -2.0])
    return float(np.max(np.abs(x))) <= 1e-6, f"terminal point {x.tolist()} after {len(trace.residuals)} steps"


def caristi_contraction_potentials():
    fam = _line()
    T = MultiFunction.from_dict(TWO_BRANCH, 1)
    phi = fp.caristi_contraction_potentials(T, fam, ContractionConstants({"d1": 1 / 3}))
    x, trace = fp.caristi_descent(T, fam, phi, [0.9], selection=fp.metric_selection)
    ok = min(abs(x[0]), abs(x[0] - 1.5)) <= 1e-6
    return ok, f"descent with d(x, Tx)/(1 - k) ends at {x[0]:.9g}"


def residual_decrease():
    fam = _line()
    T = MultiFunction.affine_branches([(0.5, 0.0)], 1)
    rep = fp.check_residual_decrease(lambda x: x / 2, T, fam, {"d1": -0.5}, np.linspace(-1, 1, 21)[:, None],
                                     x0=[1.0])
    ok = rep.passed and rep.fixed_point is not None and abs(rep.fixed_point[0]) <= 1e-6
    where = "none" if rep.fixed_point is None else f"{rep.fixed_point[0]:.3g}"
    return ok, f"{rep.samples_tested} samples, fixed point {where}"


def _abs_order():
    fam = _line()
    return OrderContext(fam, fp.PotentialFamily.from_dict(ABS_POTENTIAL, fam)), PointCloud.from_dict(GRID_41, 1)


def bishop_phelps_abs():
    ctx, grid = _abs_order()
    xs, rep = bishop_phelps_search(ctx, [0.5], grid)
    return rep.passed and abs(xs[0]) <= 1e-12, f"x* = {xs[0]:g}, conditions {rep.conditions}"


def ekeland_abs():
    ctx, grid = _abs_order()
    xs, rep = ekeland_search(ctx, [0.3], {"d1": 0.3}, grid)
    oracle = maximal_elements(ctx, grid)
    ok = rep.passed and abs(xs[0]) <= 1e-12 and oracle.contains(xs) and rep.checked_against == 40
    return ok, f"x* = {xs[0]:g}, conditions {rep.conditions}, checked against {rep.checked_against}"


def inward_affine():
    fam = _line()
    K = PointCloud.of([0, 1], 1)
    x, trace, ws = fp.inward_solve(lambda x: 1.2 - x / 2, K, fam, ContractionConstants({"d1": 0.5}), [0.0])
    ok = (abs(x[0] - 0.8) <= 1e-7 and trace.notes["descent_inequality"]
          and abs(ws[0].f[0] - 1) <= 1e-9 and abs(ws[0].c - 1.2) <= 1e-9)
    return ok, f"x* = {x[0]:.10g}; first witness f = {ws[0].f[0]:g}, c = {ws[0].c:g}"


REGISTRY: dict[str, Demo] = {
    "hausdorff-two-point": Demo("H between {0,1} and {0} is 1, matching the inflation oracle",
                                hausdorff_two_point),
    "residual-inequality": Demo("residual Lipschitz inequality for T(x) = {x/3, x/3 + 1}",
                                residual_inequality),
    "semicontinuity-constant": Demo("weak lower and upper semi-continuity of a constant map",
                                    semicontinuity_constant),
    "invariant-set": Demo("least invariant set on a four-point universe", invariant_set),
    "alpha-scale": Demo("alpha(0.5 A) = [1, 1] when alpha(A) = 2", alpha_scale),
    "ksc-certificate": Demo("translate(hull(0.5 A)) is a 0.5-set contraction", ksc_certificate),
    "alpha-transfer-two-branch": Demo("empirical alpha(T(A)) <= alpha(A)/3 + 0.05 for T(x) = {x/3, x/3 + 1}",
                                      alpha_transfer_two_branch),
    "picard-affine": Demo("Picard iteration for f(x) = (x + 1)/2 reaches 1", picard_affine),
    "nadler-two-branch": Demo("Nadler branches of {x/3, x/3 + 1} reach 0 and 1.5", nadler_two_branch),
    "caristi-halving": Demo("Caristi descent for x/2 on the plane reaches the origin", caristi_halving),
    "caristi-contraction-potentials": Demo("descent with contraction potentials reaches a fixed point",
                                           caristi_contraction_potentials),
    "residual-decrease": Demo("residual decrease with r = -1/2 yields the fixed point of x/2",
                              residual_decrease),
    "bishop-phelps-abs": Demo("maximal point above 0.5 for phi = |x| is 0", bishop_phelps_abs),
    "ekeland-abs": Demo("Ekeland point for phi = |x|, x0 = 0.3, delta = 0.3 is 0", ekeland_abs),
    "inward-affine": Demo("weakly inward T(x) = 1.2 - x/2 on [0, 1] has fixed point 0.8", inward_affine),
}
