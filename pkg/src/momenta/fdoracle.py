"""Finite-difference oracle for von Mises derivatives.

For T_{.1..p}(F; x_1..x_p) consider

    G(e_1..e_p) = T((1 - sum e_i) F + sum e_i delta_{x_i}).

Because the derivatives here are taken in the centered directions
delta_{x_i} - F, the mixed partial of G at 0 equals T_{.1..p} exactly.
We estimate it with a mixed central difference (same step in every
direction), which requires evaluating T on signed mixtures; every
functional in this package is a smooth function of weighted moments, so
its evaluator extends to signed weights without modification.  The
central difference has error O(eps^2); two-level Richardson
extrapolation over the schedule removes the eps^2 and eps^4 terms.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .dists import DiscreteDist
from .gateaux import FunctionalSpec

DEFAULT_EPS_SCHEDULE = (1e-2, 5e-3, 2.5e-3)


class OracleEvaluationFailed(Exception):
    """Raised on non-finite evaluations ('oracle-evaluation-failed')."""


Evaluator = Callable[[np.ndarray, np.ndarray], float]


def spec_evaluator(spec: FunctionalSpec) -> Evaluator:
    return spec.eval_numeric


def fd_gateaux_oracle(T_eval: Evaluator, F: DiscreteDist,
                      points: Sequence[float], p: int | None = None,
                      eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
                      ) -> float:
    if p is None:
        p = len(points)
    if len(points) != p:
        raise ValueError(f"need {p} points, got {len(points)}")
    base_x = np.array([float(x) for x, _ in F.atoms])
    base_w = np.array([float(w) for _, w in F.atoms])
    extra_x = np.array([float(x) for x in points])

    def G(eps_vec: np.ndarray) -> float:
        pts = np.concatenate([base_x, extra_x])
        wts = np.concatenate([base_w * (1.0 - eps_vec.sum()), eps_vec])
        val = T_eval(pts, wts)
        if not math.isfinite(val):
            raise OracleEvaluationFailed(
                "oracle-evaluation-failed: non-finite functional value")
        return val

    signs = list(itertools.product((-1.0, 1.0), repeat=p))

    def mixed_difference(eps: float) -> float:
        total = 0.0
        for s in signs:
            sv = np.array(s)
            total += math.prod(s) * G(sv * eps)
        return total / (2.0 * eps) ** p

    estimates = [mixed_difference(e) for e in eps_schedule]
    # Richardson: successive steps halve, error = c1 eps^2 + c2 eps^4 + ...
    level = list(estimates)
    order = 2
    while len(level) > 1:
        level = [(4 ** (order // 2) * b - a) / (4 ** (order // 2) - 1)
                 for a, b in zip(level, level[1:])]
        order += 2
    result = level[0]
    if not math.isfinite(result):
        raise OracleEvaluationFailed(
            "oracle-evaluation-failed: non-finite extrapolation")
    return result


def schedule_for_order(p: int) -> tuple[float, ...]:
    """Step schedule balancing truncation vs cancellation per order.

    The functionals arbitrated at p >= 3 are polynomial in the mixture
    weights, where the central difference has no truncation error at all;
    larger steps purely reduce cancellation noise.
    """
    if p <= 2:
        return DEFAULT_EPS_SCHEDULE
    if p == 3:
        return (4e-2, 2e-2, 1e-2)
    return (1.6e-1, 8e-2, 4e-2)


def numeric_bracket(specs, key, F: DiscreteDist) -> float:
    """Estimate a bracket integral with no symbolic machinery: evaluate
    each derivative factor at atom tuples via the FD oracle, then take the
    expectation over independent copies as a finite weighted sum."""
    from .brackets import BracketKey  # local import to avoid a cycle

    labels = key.labels()
    atoms = [(float(x), float(w)) for x, w in F.atoms]
    cache: dict[tuple, float] = {}

    def factor_value(spec, arg_points: tuple[float, ...]) -> float:
        ck = (id(spec), arg_points)
        if ck not in cache:
            cache[ck] = fd_gateaux_oracle(
                spec.eval_numeric, F, list(arg_points),
                eps_schedule=schedule_for_order(len(arg_points)))
        return cache[ck]

    total = 0.0
    for combo in itertools.product(range(len(atoms)), repeat=len(labels)):
        assign = dict(zip(labels, combo))
        weight = math.prod(atoms[i][1] for i in combo)
        term = weight
        for f in key.factors:
            spec = specs[f.tag] if isinstance(specs, dict) else specs
            pts = tuple(atoms[assign[l]][0] for l in f.labels)
            term *= factor_value(spec, pts) ** f.power
        total += term
    return total


def symbolic_vs_fd(spec: FunctionalSpec, expr, F: DiscreteDist,
                   points: Sequence[float]) -> tuple[float, float]:
    """Evaluate a symbolic DerivExpr and the FD oracle at the same inputs."""
    max_order = 2
    for hm, poly in expr.terms.items():
        max_order = max(max_order, poly.max_central_order(),
                        *(pw for _, pw in hm or ((0, 2),)))
    values = {k: float(v) for k, v in F.moment_values(max_order + 2).items()}
    mu = float(F.mean)
    hvals = {i + 1: float(x) - mu for i, x in enumerate(points)}
    sym = expr.evaluate(hvals, values)
    num = fd_gateaux_oracle(spec.eval_numeric, F, points)
    return sym, num
