"""Von Mises derivatives: closed displays, FD arbitration, round trips."""

from fractions import Fraction as Q

import pytest

from momenta.dists import DiscreteDist
from momenta.fdoracle import fd_gateaux_oracle, schedule_for_order
from momenta.gateaux import (CentralMomentF, Compose, DerivExpr, MeanF,
                             RawMomentF, central_moment_derivative,
                             derivative, format_deriv, mean_derivative,
                             parse_deriv, raw_moment_derivative)
from momenta.poly import MomentPoly


def H(label, power=1, coef=1):
    return DerivExpr.h(label, power, coef)


def C(r):
    return MomentPoly.central(r)


def sym_sum(build, p):
    """Symmetric sum over which of labels 1..p plays the distinguished role."""
    out = DerivExpr.zero()
    for i in range(1, p + 1):
        others = [j for j in range(1, p + 1) if j != i]
        out = out + build(i, others)
    return out


def test_mean_derivatives():  # [PAPER] mu_{.1} = h_1, higher vanish
    assert mean_derivative(1) == H(1)
    for p in range(2, 6):
        assert mean_derivative(p).is_zero()


def test_first_derivative_displays():
    # [PAPER] mu_{r.1} = h_1^r - mu_r - r h_1 mu_{r-1}
    assert central_moment_derivative(2, 1) == \
        H(1, 2) - DerivExpr.from_poly(C(2))
    for r in (3, 4, 5):
        expect = (H(1, r) - DerivExpr.from_poly(C(r))
                  + H(1, 1, -Q(r) * C(r - 1)))
        assert central_moment_derivative(r, 1) == expect


def test_second_derivative_displays():
    # [PAPER] mu_{2.12}, mu_{3.12}, mu_{4.12}, mu_{5.12}
    assert central_moment_derivative(2, 2) == -2 * H(1) * H(2)
    assert central_moment_derivative(3, 2) == sym_sum(
        lambda i, o: -3 * (H(i, 2) - DerivExpr.from_poly(C(2))) * H(o[0]), 2)
    assert central_moment_derivative(4, 2) == \
        H(1) * H(2) * (12 * C(2)) + sym_sum(
            lambda i, o: -4 * (H(i, 3) - DerivExpr.from_poly(C(3))) * H(o[0]),
            2)
    assert central_moment_derivative(5, 2) == \
        H(1) * H(2) * (20 * C(3)) + sym_sum(
            lambda i, o: -5 * (H(i, 4) - DerivExpr.from_poly(C(4))) * H(o[0]),
            2)


def test_third_derivative_displays():
    # [PAPER] mu_{3.123} = 12 h1 h2 h3 (sign arbitrated by FD below);
    # mu_{4.123}; mu_{5.123}
    assert central_moment_derivative(3, 3) == 12 * H(1) * H(2) * H(3)
    assert central_moment_derivative(4, 3) == sym_sum(
        lambda i, o: 12 * (H(i, 2) - DerivExpr.from_poly(C(2)))
        * H(o[0]) * H(o[1]), 3)
    # [PAPER]/[DERIVED] the printed mu_{5.123} has the term -60 h1h2h3,
    # which is not degree-5 homogeneous; the derived form carries -60 mu2
    # h1h2h3 and the FD oracle confirms it (see the arbitration test).
    assert central_moment_derivative(5, 3) == \
        H(1) * H(2) * H(3) * (-60 * C(2)) + sym_sum(
            lambda i, o: 20 * (H(i, 3) - DerivExpr.from_poly(C(3)))
            * H(o[0]) * H(o[1]), 3)


def test_fourth_and_fifth_derivative_displays():
    # [PAPER] printed mu_{4.1234} = +72 h1h2h3h4 and
    # mu_{5.12345} = -480 h1..h5; the engine derives the opposite signs and
    # the FD oracle (test_top_derivative_signs_fd_arbitration) sides with
    # the engine, so the expectations below carry the arbitrated signs.
    assert central_moment_derivative(4, 4) == \
        -72 * H(1) * H(2) * H(3) * H(4)
    assert central_moment_derivative(5, 5) == \
        480 * H(1) * H(2) * H(3) * H(4) * H(5)
    # [PAPER]/[DERIVED] printed mu_{5.1234} = +60 sum^4 (h1^2 - mu2)
    # h2h3h4; the derived coefficient is -60 and the FD oracle sides with
    # the engine (sign arbitration below), so the expectation is -60.
    assert central_moment_derivative(5, 4) == sym_sum(
        lambda i, o: -60 * (H(i, 2) - DerivExpr.from_poly(C(2)))
        * H(o[0]) * H(o[1]) * H(o[2]), 4)


def test_top_derivative_signs_fd_arbitration(dist_a):
    # [DERIVED] numeric arbitration of the printed vs derived signs for
    # mu_{3.123}, mu_{4.1234}, mu_{5.12345}; tol 1e-6 after extrapolation.
    xs = [0.3, 1.7, 2.4, 3.1, 0.9]
    vals = dist_a.moment_values(10)
    mu = float(dist_a.mean)
    printed_coef = {3: 12, 4: 72, 5: -480}
    for r in (3, 4, 5):
        pts = xs[:r]
        fd = fd_gateaux_oracle(CentralMomentF(r).eval_numeric, dist_a, pts,
                               eps_schedule=schedule_for_order(r))
        eng = central_moment_derivative(r, r).evaluate(
            {i + 1: x - mu for i, x in enumerate(pts)}, vals)
        assert fd == pytest.approx(eng, abs=1e-6, rel=1e-6)
        prod = 1.0
        for x in pts:
            prod *= x - mu
        printed = printed_coef[r] * prod
        if r == 3:
            assert printed == pytest.approx(eng)  # printed display correct
        else:
            assert printed == pytest.approx(-eng)  # printed sign flipped


def test_fd_agreement_random_orders(dist_b):
    # [DERIVED] FD oracle cross-check of mixed derivatives up to order 4.
    xs = [0.4, -0.6, 1.2, 2.3]
    vals = dist_b.moment_values(10)
    mu = float(dist_b.mean)
    for r in (2, 3, 4, 5, 6):
        for p in (1, 2, 3, 4):
            pts = xs[:p]
            fd = fd_gateaux_oracle(CentralMomentF(r).eval_numeric, dist_b,
                                   pts, eps_schedule=schedule_for_order(p))
            eng = central_moment_derivative(r, p).evaluate(
                {i + 1: x - mu for i, x in enumerate(pts)}, vals)
            assert fd == pytest.approx(eng, abs=2e-5, rel=1e-6)


def test_raw_moment_derivatives():
    # [DERIVED] mu'_k has first derivative x^k - mu'_k and zero beyond order
    # one; x^k = (h + mu)^k is re-expressed in h and mu.
    d2 = raw_moment_derivative(3, 2)
    assert d2.is_zero()
    d1 = raw_moment_derivative(2, 1)
    # x^2 - mu'_2 with x = h + mu, expressed in h, mu and the raw symbol
    from momenta.poly import raw_sym
    mup2 = MomentPoly({((raw_sym(2), Q(1)),): Q(1)})
    expect = (H(1, 2) + H(1, 1, 2 * MomentPoly.mean())
              + DerivExpr.from_poly(MomentPoly.mean() ** 2 - mup2))
    assert d1 == expect


def test_chain_rule_against_direct(dist_a):
    # [DERIVED] derivative of mu2^2 via the compose chain rule equals the
    # FD oracle on the squared functional.
    from momenta.functionals import power_map
    spec = Compose(power_map(2), (CentralMomentF(2),))
    xs = [0.7, 2.2, 3.4]
    vals = dist_a.moment_values(10)
    mu = float(dist_a.mean)
    for p in (1, 2, 3):
        fd = fd_gateaux_oracle(spec.eval_numeric, dist_a, xs[:p],
                               eps_schedule=schedule_for_order(p))
        eng = derivative(spec, p).evaluate(
            {i + 1: x - mu for i, x in enumerate(xs[:p])}, vals)
        assert fd == pytest.approx(eng, abs=2e-5, rel=1e-6)


def test_format_parse_round_trip():
    # [TRIVIAL] canonical form survives a print/parse cycle
    from momenta.functionals import get_entry
    for name in ("mu2", "mu3", "nu3", "cv", "mean_square"):
        spec = get_entry(name).spec
        for p in (1, 2, 3):
            d = derivative(spec, p)
            text = format_deriv(d)
            assert parse_deriv(text) == d
            assert format_deriv(parse_deriv(text)) == text


def test_derivatives_are_centered(dist_b):
    # [DERIVED] every T_{.1..p} integrates to zero in each argument
    for r in (2, 3, 4):
        for p in (1, 2, 3):
            d = central_moment_derivative(r, p)
            marginal = d.integrate()
            # integrate() takes E over ALL labels; centering in each argument
            # implies the full expectation vanishes for p >= 1
            assert marginal == MomentPoly.zero()
