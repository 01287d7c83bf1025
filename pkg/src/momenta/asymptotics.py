"""Cumulant coefficients, Edgeworth expansions, and bias-reduced estimators.

Everything here is assembled from bracket functions of a FunctionalSpec:
cumulant coefficients a_ri, the Edgeworth CDF/quantile of the standardized
statistic Y_n = (n/a_21)^(1/2) (T(Fhat) - T(F)), and the two bias-reduction
series (powers of 1/n and factorial 1/(n-1)_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .brackets import evaluate_bracket
from .gateaux import FunctionalSpec
from .partitions import falling_factorial
from .poly import MomentPoly, Q

__all__ = [
    "DegenerateVariance", "ExpansionNonmonotone",
    "ELEVEN_BRACKETS", "CumulantCoeffs", "cumulant_coeffs",
    "hermite_coeffs", "hermite_eval",
    "EdgeworthModel", "edgeworth_model", "CdfValue",
    "edgeworth_cdf", "edgeworth_quantile", "confidence_interval",
    "Variant", "BiasCorrection", "bias_correction", "debias_estimate",
    "g_of_mean_bias_terms",
]


class DegenerateVariance(ValueError):
    """Raised when a_21 <= 0 at the supplied moments ('degenerate-variance')."""


class ExpansionNonmonotone(RuntimeError):
    """Raised when the truncated Edgeworth CDF is not increasing at the
    requested level ('expansion-nonmonotone')."""


# the eleven bracket functions needed for third-order confidence intervals
ELEVEN_BRACKETS = (
    "1^2",
    "11", "1^3", "1,2,12",
    "1,11", "12^2", "1,122", "1^4", "1,2^2,12", "1,2,13,23", "1,2,3,123",
)


# ---------------------------------------------------------------------------
# cumulant coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CumulantCoeffs:
    """Exact cumulant-coefficient polynomials (None when not requested)."""

    a10: MomentPoly
    a11: MomentPoly
    a21: MomentPoly
    a12: MomentPoly | None = None
    a32: MomentPoly | None = None
    a13: MomentPoly | None = None
    a22: MomentPoly | None = None
    a43: MomentPoly | None = None

    def present(self) -> dict[str, MomentPoly]:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    def evaluate(self, values: Mapping[str, float]) -> dict[str, float]:
        return {k: float(v.evaluate(values))
                for k, v in self.present().items()}


def cumulant_coeffs(T: FunctionalSpec, order: int = 3) -> CumulantCoeffs:
    """Assemble the a_ri needed for inference of the given order (1..3)."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")

    def br(key: str) -> MomentPoly:
        return evaluate_bracket(T, key)

    out: dict[str, MomentPoly] = {
        "a10": T.value_poly(),
        "a11": br("11") * Q(1, 2),
        "a21": br("1^2"),
    }
    if order >= 2:
        out["a12"] = br("111") * Q(1, 6) + br("1122") * Q(1, 8)
        out["a32"] = br("1^3") + 3 * br("1,2,12")
    if order >= 3:
        out["a13"] = (br("1111") * Q(1, 24) + br("1122") * Q(1, 12)
                      + br("112233") * Q(1, 48))
        out["a22"] = br("1,11") + br("12^2") * Q(1, 2) + br("1,122")
        out["a43"] = (br("1^4") + br("1^2") ** 2 * -3
                      + 12 * br("1,2^2,12") + 12 * br("1,2,13,23")
                      + 4 * br("1,2,3,123"))
    return CumulantCoeffs(**out)


# ---------------------------------------------------------------------------
# Hermite polynomials (probabilists')
# ---------------------------------------------------------------------------

def hermite_coeffs(r: int) -> list[int]:
    """Coefficients of He_r, ascending powers of x (exact integers)."""
    if r < 0:
        raise ValueError("Hermite order must be >= 0")
    prev, cur = [1], [0, 1]
    if r == 0:
        return prev
    for k in range(1, r):
        # He_{k+1} = x He_k - k He_{k-1}
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= k * c
        prev, cur = cur, nxt
    return cur


def hermite_eval(r: int, x: float) -> float:
    acc = 0.0
    for c in reversed(hermite_coeffs(r)):
        acc = acc * x + c
    return acc


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Edgeworth expansion of Y_n
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeworthModel:
    """Standardized cumulant coefficients A_ri = a_ri / a_21^{r/2} and the
    polynomials h1, h2 (coefficient lists, ascending powers of x)."""

    A11: float
    A32: float
    A22: float = 0.0
    A43: float = 0.0
    order: int = 2          # include n^{-1/2} h1 (>=1) and n^{-1} h2 (>=2)
    a21: float = 1.0        # unstandardized variance coefficient
    a10: float = 0.0        # functional value (for confidence intervals)

    def h1_coeffs(self) -> list[float]:
        out = [0.0] * 3
        out[0] += self.A11
        for i, c in enumerate(hermite_coeffs(2)):
            out[i] += self.A32 * c / 6.0
        return out

    def h2_coeffs(self) -> list[float]:
        out = [0.0] * 6
        for i, c in enumerate(hermite_coeffs(1)):
            out[i] += (self.A22 + self.A11 ** 2) * c / 2.0
        for i, c in enumerate(hermite_coeffs(3)):
            out[i] += (self.A43 + 4.0 * self.A11 * self.A32) * c / 24.0
        for i, c in enumerate(hermite_coeffs(5)):
            out[i] += self.A32 ** 2 * c / 72.0
        return out

    def h1(self, x: float) -> float:
        return _polyval(self.h1_coeffs(), x)

    def h2(self, x: float) -> float:
        return _polyval(self.h2_coeffs(), x)


def _polyval(coeffs: Sequence[float], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def edgeworth_model(T: FunctionalSpec | CumulantCoeffs,
                    values: Mapping[str, float],
                    order: int = 2) -> EdgeworthModel:
    """Evaluate the cumulant coefficients at the given moments and build
    the Edgeworth model for Y_n."""
    cc = T if isinstance(T, CumulantCoeffs) \
        else cumulant_coeffs(T, order=min(order + 1, 3))
    ev = cc.evaluate(values)
    a21 = ev["a21"]
    if not a21 > 0.0:
        raise DegenerateVariance(
            f"degenerate-variance: a21 = {a21!r} is not positive")
    s = math.sqrt(a21)

    def A(r: int, name: str) -> float:
        v = ev.get(name)
        return 0.0 if v is None else v / s ** r

    return EdgeworthModel(
        A11=A(1, "a11"), A32=A(3, "a32"),
        A22=A(2, "a22"), A43=A(4, "a43"),
        order=order, a21=a21, a10=ev["a10"])


@dataclass(frozen=True)
class CdfValue(float):
    """Truncated-expansion CDF value; in_range marks membership in [0, 1]."""

    def __new__(cls, value: float, in_range: bool):
        self = float.__new__(cls, value)
        object.__setattr__(self, "in_range", in_range)
        return self

    def __init__(self, value: float, in_range: bool):
        pass


def edgeworth_cdf(model: EdgeworthModel, x: float, n: int) -> CdfValue:
    """P(Y_n <= x) to the model's order; may leave [0, 1] at extreme x."""
    if n < 2:
        raise ValueError("sample size must be >= 2")
    v = _norm_cdf(x)
    corr = 0.0
    if model.order >= 1:
        corr += model.h1(x) / math.sqrt(n)
    if model.order >= 2:
        corr += model.h2(x) / n
    v -= _norm_pdf(x) * corr
    return CdfValue(v, 0.0 <= v <= 1.0)


def edgeworth_quantile(model: EdgeworthModel, alpha: float, n: int,
                       tol: float = 1e-10) -> float:
    """Numeric inversion of the truncated CDF by safeguarded root finding."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")

    def f(x: float) -> float:
        return float(edgeworth_cdf(model, x, n)) - alpha

    # bracket the root on a grid wide enough for the tail limits
    lo, hi = -16.0, 16.0
    grid = [lo + i * (hi - lo) / 4096 for i in range(4097)]
    fv = [f(x) for x in grid]
    crossings = [i for i in range(len(fv) - 1)
                 if fv[i] == 0.0 or (fv[i] < 0.0) != (fv[i + 1] < 0.0)]
    if not crossings:
        raise ExpansionNonmonotone(
            f"expansion-nonmonotone: no crossing of alpha={alpha}")
    if len(crossings) > 1:
        raise ExpansionNonmonotone(
            f"expansion-nonmonotone: {len(crossings)} crossings of "
            f"alpha={alpha}; truncated CDF is not monotone there")
    i = crossings[0]
    a, b = grid[i], grid[i + 1]
    fa, fb = fv[i], fv[i + 1]
    if fa > fb:
        raise ExpansionNonmonotone(
            "expansion-nonmonotone: truncated CDF decreasing at the "
            f"requested level alpha={alpha}")
    # bisection with a secant accelerant (safeguarded)
    for _ in range(200):
        if b - a < tol * max(1.0, abs(a), abs(b)) / 16:
            break
        if fb != fa:
            m = a + (b - a) * (-fa) / (fb - fa)
            if not a < m < b:
                m = 0.5 * (a + b)
        else:
            m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm < 0.0) == (fa < 0.0):
            a, fa = m, fm
        else:
            b, fb = m, fm
        # keep convergence: also halve the interval every other step
        m2 = 0.5 * (a + b)
        fm2 = f(m2)
        if (fm2 < 0.0) == (fa < 0.0):
            a, fa = m2, fm2
        else:
            b, fb = m2, fm2
    return 0.5 * (a + b)


def confidence_interval(T: FunctionalSpec, values: Mapping[str, float],
                        n: int, alpha: float = 0.05,
                        j: int = 1) -> tuple[float, float]:
    """Two-sided level-(1-alpha) interval for T(F) from plug-in moments.

    j = 0 uses the normal limit; j = 1 adds the n^{-1/2} Edgeworth term.
    """
    if j not in (0, 1):
        raise ValueError("confidence intervals support j = 0 or 1 only")
    model = edgeworth_model(T, values, order=j)
    se = math.sqrt(model.a21 / n)
    q_lo = edgeworth_quantile(model, alpha / 2.0, n)
    q_hi = edgeworth_quantile(model, 1.0 - alpha / 2.0, n)
    # Y_n = (T(Fhat) - T)/se  =>  T in [That - q_hi*se, That - q_lo*se]
    return (model.a10 - q_hi * se, model.a10 - q_lo * se)


# ---------------------------------------------------------------------------
# bias reduction
# ---------------------------------------------------------------------------


class Variant(Enum):
    POWER_SERIES = "power"          # correction terms T_i / n^i
    FACTORIAL_SERIES = "factorial"  # correction terms S_i / (n-1)_i


_POWER_TERMS = (
    # T_1 = -[11]/2
    (("11", Q(-1, 2)),),
    # T_2 = [111]/3 + [1122]/8 - [11]/2
    (("111", Q(1, 3)), ("1122", Q(1, 8)), ("11", Q(-1, 2))),
    # T_3 = -[11]/2 + [111] - [1111]/4 + 3[1122]/4 - [11122]/6 - [112233]/48
    (("11", Q(-1, 2)), ("111", Q(1, 1)), ("1111", Q(-1, 4)),
     ("1122", Q(3, 4)), ("11122", Q(-1, 6)), ("112233", Q(-1, 48))),
)

_FACTORIAL_TERMS = (
    # S_1 = -[11]/2
    (("11", Q(-1, 2)),),
    # S_2 = [111]/3 + [1122]/8
    (("111", Q(1, 3)), ("1122", Q(1, 8))),
    # S_3 = -[1111]/4 + 3[1122]/8 - [11122]/6 - [112233]/48
    (("1111", Q(-1, 4)), ("1122", Q(3, 8)), ("11122", Q(-1, 6)),
     ("112233", Q(-1, 48))),
)


@dataclass(frozen=True)
class BiasCorrection:
    variant: Variant
    terms: tuple[MomentPoly, ...]   # T_1..T_j or S_1..S_j


def bias_correction(T: FunctionalSpec, j: int,
                    variant: Variant | str) -> BiasCorrection:
    """The j correction terms of Theorem-style bias reduction (j = 1..3)."""
    if isinstance(variant, str):
        variant = Variant(variant)
    if j not in (1, 2, 3):
        raise ValueError("bias correction order must be 1, 2 or 3")
    table = _POWER_TERMS if variant is Variant.POWER_SERIES \
        else _FACTORIAL_TERMS
    terms = []
    for spec in table[:j]:
        poly = MomentPoly.zero()
        for key, coef in spec:
            poly = poly + evaluate_bracket(T, key) * coef
        terms.append(poly)
    return BiasCorrection(variant, tuple(terms))


def debias_estimate(bc: BiasCorrection, value, values: Mapping, n: int,
                    exact: bool = False):
    """Assemble the corrected estimate from the plug-in value T(Fhat) and
    plug-in moments of Fhat.

    POWER_SERIES: T(Fhat) + sum_i T_i(Fhat)/n^i
    FACTORIAL_SERIES: T(Fhat) + sum_i S_i(Fhat)/(n-1)_i
    """
    if n < len(bc.terms) + 1:
        raise ValueError("sample size too small for the requested order")
    est = value
    for i, poly in enumerate(bc.terms, start=1):
        t = poly.evaluate(values, exact=exact)
        if bc.variant is Variant.POWER_SERIES:
            den = Fraction(n) ** i if exact else float(n) ** i
        else:
            den = falling_factorial(Fraction(n - 1) if exact
                                    else float(n - 1), i)
        est = est + t / den
    return est


def g_of_mean_bias_terms() -> tuple[MomentPoly, MomentPoly, MomentPoly]:
    """The transcribed S_1..S_3 specialization for T = g(mu)."""
    from .functionals import closed_form_poly
    return tuple(closed_form_poly("g_of_mean", "bias", k)
                 for k in ("S1", "S2", "S3"))
