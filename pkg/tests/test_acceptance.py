"""Acceptance criteria, one test per numbered criterion.

Each test implements its criterion faithfully, at the stated tolerance.
Criteria that the printed source material cannot satisfy (because the
transcribed displays carry typos that the derivation engine and the
numeric oracles both contradict) are left to fail honestly; the errata
ledger records the analysis.  Tags: [PAPER] printed identity transcribed
from the source text; [DERIVED] computed independently of the engine;
[TRIVIAL] basic contract.
"""

import math
from fractions import Fraction as Q

import pytest

from momenta.appendix_b import appendix_b_table, count_report, errata_report
from momenta.asymptotics import (Variant, bias_correction, cumulant_coeffs,
                                 debias_estimate, edgeworth_model)
from momenta.brackets import evaluate_bracket
from momenta.enumeration import (_count_vectors, exact_mean_T,
                                 sample_moment_values)
from momenta.fdoracle import fd_gateaux_oracle, schedule_for_order
from momenta.functionals import get_entry
from momenta.gateaux import (CentralMomentF, DerivExpr,
                             central_moment_derivative, central_sym,
                             format_deriv)
from momenta.montecarlo import (ExperimentConfig, figure41_experiment,
                                mc_cumulant_estimate, parse_source,
                                plugin_estimator, skewness_cdf_experiment)
from momenta.partitions import bell_partial, bell_partial_eval
from momenta.poly import MomentPoly
from momenta.report import rows_to_csv_text


def H(label, power=1, coef=1):
    return DerivExpr.h(label, power, coef)


def C(r):
    return MomentPoly.central(r)


def P(poly):
    return DerivExpr.from_poly(poly)


def sym_sum(build, p):
    out = DerivExpr.zero()
    for i in range(1, p + 1):
        others = [j for j in range(1, p + 1) if j != i]
        out = out + build(i, others)
    return out


EXACT_NORMAL = {"mu": Q(0), "mu2": Q(1), "mu3": Q(0), "mu4": Q(3),
                "mu5": Q(0), "mu6": Q(15), "mu7": Q(0), "mu8": Q(105),
                "mu9": Q(0), "mu10": Q(945), "mu11": Q(0),
                "mu12": Q(10395)}


# -------------------------------------------------------------------------
# Criterion 1: Bell tables (symbolic equality, zero tolerance, < 1 s)
# -------------------------------------------------------------------------

def test_criterion_1_bell_tables():
    # [PAPER] B_r1 = s_r, B_rr = s_1^r for r <= 8; B_32 = 3 s_1 s_2;
    # B_42 = 4 s_1 s_3 + 3 s_2^2; B_43 = 6 s_1^2 s_2.
    for r in range(1, 9):
        e_r = tuple(1 if i == r - 1 else 0 for i in range(r))
        assert bell_partial(r, 1) == {e_r: 1}
        e_1r = tuple([r] + [0] * (r - 1))
        assert bell_partial(r, r) == {e_1r: 1}
    assert bell_partial(3, 2) == {(1, 1, 0): 3}
    assert bell_partial(4, 2) == {(1, 0, 1, 0): 4, (0, 2, 0, 0): 3}
    assert bell_partial(4, 3) == {(2, 1, 0, 0): 6}
    # [DERIVED] generating-function oracle for r <= 6:
    # sum_j B_rj(s) t^j = r! [u^r] exp(t * sum_k s_k u^k / k!)
    s = [Q(2), Q(-1), Q(3), Q(1, 2), Q(5), Q(-2)]
    t = Q(3, 7)
    R = 6
    f = [Q(0)] + [t * s[k - 1] / math.factorial(k) for k in range(1, R + 1)]
    exp_f = [Q(1)] + [Q(0)] * R
    term = [Q(1)] + [Q(0)] * R
    for m in range(1, R + 1):
        new = [Q(0)] * (R + 1)
        for i, a in enumerate(term):
            if a == 0:
                continue
            for j, b in enumerate(f):
                if i + j <= R and b != 0:
                    new[i + j] += a * b
        term = [c / m for c in new]
        exp_f = [a + b for a, b in zip(exp_f, term)]
    for r in range(1, R + 1):
        lhs = sum(bell_partial_eval(r, j, s) * t ** j
                  for j in range(1, r + 1))
        assert lhs == math.factorial(r) * exp_f[r]


# -------------------------------------------------------------------------
# Criterion 2: central-moment derivative displays (< 10 s)
# -------------------------------------------------------------------------

def _printed_displays():
    """[PAPER] the fourteen printed derivative displays, transcribed
    verbatim (including any typos)."""
    d = {}
    d["mu_{2.1}"] = (2, 1, H(1, 2) - P(C(2)))
    for r in (3, 4, 5):
        d[f"mu_{{{r}.1}}"] = (r, 1, H(1, r) - P(C(r))
                              + H(1, 1, -Q(r) * C(r - 1)))
    d["mu_{2.12}"] = (2, 2, -2 * H(1) * H(2))
    d["mu_{3.12}"] = (3, 2, sym_sum(
        lambda i, o: -3 * (H(i, 2) - P(C(2))) * H(o[0]), 2))
    d["mu_{4.12}"] = (4, 2, H(1) * H(2) * (12 * C(2)) + sym_sum(
        lambda i, o: -4 * (H(i, 3) - P(C(3))) * H(o[0]), 2))
    d["mu_{5.12}"] = (5, 2, H(1) * H(2) * (20 * C(3)) + sym_sum(
        lambda i, o: -5 * (H(i, 4) - P(C(4))) * H(o[0]), 2))
    d["mu_{3.123}"] = (3, 3, 12 * H(1) * H(2) * H(3))
    d["mu_{4.123}"] = (4, 3, sym_sum(
        lambda i, o: 12 * (H(i, 2) - P(C(2))) * H(o[0]) * H(o[1]), 3))
    # printed: 20 sum^3 (h1^3 - mu3) h2 h3 - 60 h1 h2 h3  (the last term
    # lacks the mu2 factor required by degree-5 homogeneity)
    d["mu_{5.123}"] = (5, 3, -60 * H(1) * H(2) * H(3) + sym_sum(
        lambda i, o: 20 * (H(i, 3) - P(C(3))) * H(o[0]) * H(o[1]), 3))
    d["mu_{4.1234}"] = (4, 4, 72 * H(1) * H(2) * H(3) * H(4))
    d["mu_{5.1234}"] = (5, 4, sym_sum(
        lambda i, o: 60 * (H(i, 2) - P(C(2)))
        * H(o[0]) * H(o[1]) * H(o[2]), 4))
    d["mu_{5.12345}"] = (5, 5, -480 * H(1) * H(2) * H(3) * H(4) * H(5))
    return d


def test_criterion_2_derivative_displays(dist_a):
    # The engine must match every printed display except the flagged
    # mu_{3.123}, whose sign is settled by the FD oracle below.
    mismatches = [name
                  for name, (r, p, printed) in _printed_displays().items()
                  if central_moment_derivative(r, p) != printed]
    # [DERIVED] FD arbitration of mu_{3.123}, tol 1e-6 after extrapolation
    pts = [0.3, 1.7, 2.4]
    vals = dist_a.moment_values(10)
    mu = float(dist_a.mean)
    fd = fd_gateaux_oracle(CentralMomentF(3).eval_numeric, dist_a, pts,
                           eps_schedule=schedule_for_order(3))
    eng = central_moment_derivative(3, 3).evaluate(
        {i + 1: x - mu for i, x in enumerate(pts)}, vals)
    printed = 12.0
    for x in pts:
        printed *= x - mu
    assert fd == pytest.approx(eng, abs=1e-6, rel=1e-6)
    assert fd == pytest.approx(printed, abs=1e-6, rel=1e-6)
    # [PAPER] every other display must match symbolically.  Four printed
    # displays carry typos (a missing mu2 factor in mu_{5.123} and flipped
    # signs in mu_{4.1234}, mu_{5.1234}, mu_{5.12345}); the FD oracle sides
    # with the engine on each (tests/test_gateaux.py), so this assertion
    # fails honestly.  See the errata ledger.
    assert set(mismatches) <= {"mu_{3.123}"}, \
        f"printed displays contradicted by the engine: {sorted(mismatches)}"


# -------------------------------------------------------------------------
# Criterion 3: bracket table regeneration (< 2 min)
# -------------------------------------------------------------------------

def test_criterion_3_small_n_exact_match():
    # [PAPER] claimed counts {2, 5, 13} at N = 2, 3, 4 with every entry
    # matching the transcription structurally.  The complete regeneration
    # yields 16 entries at N = 4 and the numeric oracle sides with the
    # engine against two transcribed values, so this fails honestly; see
    # the errata ledger.
    rep = count_report(4)
    problems = []
    for row in rep:
        if row["regenerated"] != row["claimed"]:
            problems.append(f"N={row['N']}: regenerated {row['regenerated']}"
                            f" vs claimed {row['claimed']}")
    diff = errata_report(4, arbitrate=False)["rows"]
    for r in diff:
        if r["status"] == "mismatch":
            problems.append(f"{r['key']}: transcription mismatch")
    assert not problems, "; ".join(problems)


def test_criterion_3_regeneration_and_arbitration():
    # [DERIVED] for N = 5..7 every entry is regenerated, every mismatch
    # carries a numeric-arbitration verdict, and at least 90% of the
    # transcribable entries match or are resolved.
    rep = errata_report(7, arbitrate=True)
    rows = [r for r in rep["rows"] if r["status"] in ("match", "mismatch")]
    assert rows
    resolved = 0
    for r in rows:
        if r["status"] == "match":
            resolved += 1
        elif r["verdict"] and r["verdict"]["winner"] in ("engine", "paper"):
            resolved += 1
    assert resolved / len(rows) >= 0.90
    # regeneration covers every N up to 7
    assert {e.N for e in appendix_b_table(7)} == {2, 3, 4, 5, 6, 7}


# -------------------------------------------------------------------------
# Criterion 4: exact cumulant-coefficient anchors (< 30 s)
# -------------------------------------------------------------------------

NORMAL_SUB = {central_sym(3): MomentPoly.zero(),
              central_sym(5): MomentPoly.zero(),
              central_sym(4): 3 * C(2) ** 2,
              central_sym(6): 15 * C(2) ** 3}


def test_criterion_4_exact_anchors():
    problems = []

    def check(label, got, want):
        if got != want:
            problems.append(f"{label}: engine {got} != printed {want}")

    # [PAPER] T = mu_2 anchors
    cc2 = cumulant_coeffs(CentralMomentF(2), order=2)
    check("mu2 a11", cc2.a11, -C(2))
    check("mu2 a21", cc2.a21, C(4) - C(2) ** 2)
    # printed a32 = mu6 - 3 mu4 mu2 + 2 mu2^3; the engine derivation
    # carries an additional -6 mu3^2 term (enumeration-verified), so this
    # check fails honestly; see the errata ledger.
    check("mu2 a32", cc2.a32, C(6) - 3 * C(4) * C(2) + 2 * C(2) ** 3)

    # [PAPER] T = mu_3 anchors
    cc3 = cumulant_coeffs(CentralMomentF(3), order=1)
    check("mu3 a11", cc3.a11, -3 * C(3))
    check("mu3 [111]", evaluate_bracket(CentralMomentF(3), "111"),
          12 * C(3))
    check("mu3 [1122]", evaluate_bracket(CentralMomentF(3), "1122"),
          MomentPoly.zero())

    # [PAPER] T = mu_3 at normal moments
    cc3b = cumulant_coeffs(CentralMomentF(3), order=3)
    check("mu3@normal a21", cc3b.a21.subs(NORMAL_SUB), 6 * C(2) ** 3)
    # printed a22 = -24 mu2^3; the engine derives -18 mu2^3 and the MC
    # oracle sides with the engine, so this fails honestly; see the
    # errata ledger.
    check("mu3@normal a22", cc3b.a22.subs(NORMAL_SUB), -24 * C(2) ** 3)

    assert not problems, "; ".join(problems)


# -------------------------------------------------------------------------
# Criterion 5: enumeration-oracle bias, exact (< 1 min)
# -------------------------------------------------------------------------

ATOMS = (Q(1), Q(2), Q(4))
PROBS = (Q(1, 2), Q(1, 4), Q(1, 4))


def test_criterion_5_enumeration_bias():
    from momenta.dists import DiscreteDist
    vals = DiscreteDist.from_pairs(list(zip(ATOMS, PROBS))).moment_values(
        8, exact=True)
    for n in (4, 5, 6):
        # [PAPER] E mu_2(Fhat) = (1 - 1/n) mu_2 and
        # E mu_3(Fhat) = (1 - 1/n)(1 - 2/n) mu_3, exactly
        assert exact_mean_T(CentralMomentF(2), ATOMS, PROBS, n) == \
            (1 - Q(1, n)) * vals["mu2"]
        assert exact_mean_T(CentralMomentF(3), ATOMS, PROBS, n) == \
            (1 - Q(1, n)) * (1 - Q(2, n)) * vals["mu3"]
    # the exact biases reproduce the symbolic a11, a12 exactly
    for r, order in ((2, 1), (3, 2)):
        cc = cumulant_coeffs(CentralMomentF(r), order=3)
        a11 = cc.a11.evaluate(vals, exact=True)
        a12 = cc.a12.evaluate(vals, exact=True)
        for n in (4, 5, 6):
            bias = exact_mean_T(CentralMomentF(r), ATOMS, PROBS, n) \
                - vals[f"mu{r}"]
            assert bias == a11 * Q(1, n) + a12 * Q(1, n) ** 2
    # [PAPER] FACTORIAL_SERIES corrections are exactly unbiased
    for r, order in ((2, 1), (3, 2)):
        T = CentralMomentF(r)
        bc = bias_correction(T, order, Variant.FACTORIAL_SERIES)
        for n in (4, 5, 6):
            total = Q(0)
            for counts in _count_vectors(len(ATOMS), n):
                weight = (Q(math.factorial(n))
                          / math.prod(math.factorial(c) for c in counts))
                for a, c in zip(PROBS, counts):
                    weight *= a ** c
                mv = sample_moment_values(ATOMS, counts,
                                          max(r + 2 * order, 2))
                plug = T.value_poly().evaluate(mv, exact=True)
                total += weight * debias_estimate(bc, plug, mv, n,
                                                  exact=True)
            assert total == vals[f"mu{r}"]


# -------------------------------------------------------------------------
# Criterion 6: standardized skewness at normal (minutes-scale)
# -------------------------------------------------------------------------

def test_criterion_6_nu3_normal_mc_validation():
    spec = get_entry("nu3").spec
    cc = cumulant_coeffs(spec, order=3)
    # [PAPER] engine a21 at normal moments equals 6 exactly
    # (nu6 - 6 nu4 + 9 = 15 - 18 + 9)
    assert cc.a21.evaluate(EXACT_NORMAL, exact=True) == 6
    a22 = cc.a22.evaluate(EXACT_NORMAL, exact=True)
    a43 = cc.a43.evaluate(EXACT_NORMAL, exact=True)
    assert a22 == -36
    assert a43 == 1296
    # [DERIVED] MC regression oracle at reps = 1e7 per n: the engine
    # values must sit inside the 3-SE band.  The printed closed forms that
    # disagree with the engine here are ledgered, not adopted.
    est, r_max = plugin_estimator(spec)
    res = mc_cumulant_estimate(est, r_max=r_max, truth=0.0,
                               dist=parse_source("normal"),
                               n_grid=(20, 40, 80, 160), reps=10 ** 7)
    assert abs(res.a21 - 6.0) <= 3 * res.a21_se
    assert abs(res.a22 - float(a22)) <= 3 * res.a22_se
    assert abs(res.a43 - float(a43)) <= 3 * res.a43_se


# -------------------------------------------------------------------------
# Criterion 7: Edgeworth CDF at desk scale (~2 min)
# -------------------------------------------------------------------------

def test_criterion_7_edgeworth_cdf_desk_scale():
    # [DERIVED] sup-norm distance between the O(n^-2) expansion and a
    # 1e6-replication empirical CDF over x in [-3, 3].
    grid = [x / 4.0 for x in range(-12, 13)]
    sup = {}
    for n in (25, 100):
        rows = skewness_cdf_experiment(n, 10 ** 6, grid)
        sup[n] = max(abs(r["deviation"]) for r in rows)
        if n == 100:
            for r in rows:
                assert abs(r["deviation"]) <= max(0.01, 4 * r["se"])
    assert sup[100] < sup[25]  # the expansion improves with n


# -------------------------------------------------------------------------
# Criterion 8: Figure 4.1 reproduction (~1 min)
# -------------------------------------------------------------------------

def test_criterion_8_bias_correction_wins():
    # [PAPER] with reps = 1e4 and n in {10, ..., 100}, the corrected
    # estimator must beat the usual one in >= 90% of grid cells for the
    # five finite-moment sources.  All five sources are symmetric, so the
    # true skewness is 0, the usual estimator is already unbiased in
    # expectation, and the correction only adds noise: the observed win
    # rate sits near the 50% a coin would achieve, not 90%.  The test is
    # kept faithful to the printed claim and fails honestly; see the
    # errata ledger.
    cfg = ExperimentConfig(
        kind="figure41", replications=10 ** 4,
        n_grid=tuple(range(10, 101, 10)),
        sources=("normal", "t5", "t10", "logistic", "laplace"))
    rows = figure41_experiment(cfg)
    by_cell = {}
    for r in rows:
        by_cell.setdefault((r["dist"], r["n"]), {})[r["estimator"]] = r
    wins = sum(1 for cell in by_cell.values()
               if abs(cell["corrected"]["bias"]) < abs(cell["usual"]["bias"]))
    assert len(by_cell) == 50
    assert wins / len(by_cell) >= 0.90, \
        f"corrected beat usual in {wins}/{len(by_cell)} cells"


# -------------------------------------------------------------------------
# Criterion 9: determinism (zero tolerance)
# -------------------------------------------------------------------------

def test_criterion_9_determinism():
    # [TRIVIAL] bit-identical simulation reruns
    cfg = ExperimentConfig(kind="figure41", seed=41, replications=500,
                           n_grid=(10, 20), sources=("normal", "t2"))
    r1 = figure41_experiment(cfg)
    r2 = figure41_experiment(cfg)
    assert r1 == r2
    assert rows_to_csv_text(r1) == rows_to_csv_text(r2)
    # structurally identical symbolic recomputation
    d1 = format_deriv(central_moment_derivative(5, 3))
    d2 = format_deriv(central_moment_derivative(5, 3))
    assert d1 == d2
    t1 = [(e.N, e.key.text(), str(e.value)) for e in appendix_b_table(5)]
    t2 = [(e.N, e.key.text(), str(e.value)) for e in appendix_b_table(5)]
    assert t1 == t2
