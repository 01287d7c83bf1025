"""Symbolic von Mises (Gateaux) derivatives of smooth functions of moments.

A ``DerivExpr`` represents T_{.1..r}(F; x_1..x_r): a polynomial in the
centered evaluation atoms h_i = x_i - mu with MomentPoly coefficients.
Derivatives are built three ways, which must agree:

  * directly, for central moments (``central_moment_derivative``);
  * by raising a lower-order derivative (``raise_derivative``);
  * through the functional chain rule over set partitions
    (``chain_derivative``) for composite functionals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

from .partitions import falling_factorial, set_partitions, binomial
from .poly import (CENTRAL, G, MEAN, NU, RAW, MomentPoly, Monomial, Q, Sym,
                   _Tokens, _parse_exponent, central_sym, format_poly, g_sym,
                   make_monomial, mean_sym, parse_symbol, raw_sym)

# A power product of evaluation atoms: ((label, power), ...) sorted by label.
HMono = tuple[tuple[int, int], ...]

H_ONE: HMono = ()


class DerivativeUnavailable(Exception):
    """Raised when a SmoothMap cannot supply a needed partial
    ('derivative-order-unavailable')."""


def make_hmono(items) -> HMono:
    acc: dict[int, int] = {}
    for label, power in items:
        acc[label] = acc.get(label, 0) + power
    return tuple(sorted((l, p) for l, p in acc.items() if p != 0))


class DerivExpr:
    """Sparse sum of (h-monomial) * (MomentPoly coefficient) terms."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[HMono, MomentPoly] | None = None):
        self.terms: dict[HMono, MomentPoly] = {}
        if terms:
            for hm, poly in terms.items():
                if poly:
                    self.terms[hm] = poly

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls) -> "DerivExpr":
        return cls()

    @classmethod
    def from_poly(cls, poly: MomentPoly | int | Fraction) -> "DerivExpr":
        if isinstance(poly, (int, Fraction)):
            poly = MomentPoly.const(poly)
        return cls({H_ONE: poly})

    @classmethod
    def h(cls, label: int, power: int = 1,
          coef: MomentPoly | int | Fraction = 1) -> "DerivExpr":
        if isinstance(coef, (int, Fraction)):
            coef = MomentPoly.const(coef)
        return cls({make_hmono([(label, power)]): coef})

    # -- ring operations -------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DerivExpr):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset((hm, p) for hm, p in self.terms.items()))

    def __add__(self, other: "DerivExpr") -> "DerivExpr":
        out = dict(self.terms)
        for hm, poly in other.terms.items():
            s = out.get(hm, MomentPoly.zero()) + poly
            if s:
                out[hm] = s
            else:
                out.pop(hm, None)
        res = DerivExpr()
        res.terms = out
        return res

    def __neg__(self) -> "DerivExpr":
        res = DerivExpr()
        res.terms = {hm: -p for hm, p in self.terms.items()}
        return res

    def __sub__(self, other: "DerivExpr") -> "DerivExpr":
        return self + (-other)

    def __mul__(self, other) -> "DerivExpr":
        if isinstance(other, (int, Fraction, MomentPoly)):
            other = DerivExpr.from_poly(other)
        out: dict[HMono, MomentPoly] = {}
        for hm1, p1 in self.terms.items():
            for hm2, p2 in other.terms.items():
                hm = make_hmono(list(hm1) + list(hm2))
                s = out.get(hm, MomentPoly.zero()) + p1 * p2
                if s:
                    out[hm] = s
                else:
                    out.pop(hm, None)
        res = DerivExpr()
        res.terms = out
        return res

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "DerivExpr":
        if n < 0:
            raise ValueError("negative powers of derivative expressions")
        result = DerivExpr.from_poly(1)
        for _ in range(n):
            result = result * self
        return result

    # -- structure --------------------------------------------------------
    def labels(self) -> set[int]:
        return {l for hm in self.terms for l, _ in hm}

    def relabel(self, mapping: Mapping[int, int]) -> "DerivExpr":
        """Rename argument labels; coinciding targets merge h powers."""
        out: dict[HMono, MomentPoly] = {}
        for hm, poly in self.terms.items():
            new = make_hmono([(mapping.get(l, l), p) for l, p in hm])
            s = out.get(new, MomentPoly.zero()) + poly
            if s:
                out[new] = s
            else:
                out.pop(new, None)
        res = DerivExpr()
        res.terms = out
        return res

    # -- differentiation ---------------------------------------------------
    def gateaux(self, new: int) -> "DerivExpr":
        """Derivative of this expression with respect to F in the direction
        delta_{x_new} - F, applied to every moment symbol and every h atom
        (h_i = x_i - mu moves with F through mu)."""
        out = DerivExpr.zero()
        for hm, poly in self.terms.items():
            hpart = DerivExpr({hm: MomentPoly.const(1)})
            # d(poly) * hm
            dpoly = _poly_gateaux(poly, new)
            if dpoly:
                out = out + dpoly * hpart
            # poly * d(hm): product rule across atoms, d(h_i) = -h_new
            for idx, (label, power) in enumerate(hm):
                rest = list(hm)
                if power == 1:
                    rest.pop(idx)
                else:
                    rest[idx] = (label, power - 1)
                dterm = DerivExpr(
                    {make_hmono(rest + [(new, 1)]): poly * Q(-power)})
                out = out + dterm
        return out

    # -- evaluation and text -------------------------------------------------
    def evaluate(self, hvals: Mapping[int, float], values: Mapping[str, float]
                 ) -> float:
        total = 0.0
        for hm, poly in self.terms.items():
            term = poly.evaluate(values)
            for label, power in hm:
                term *= float(hvals[label]) ** power
            total += term
        return total

    def map_coeffs(self, fn) -> "DerivExpr":
        """Apply a MomentPoly -> MomentPoly transform to every coefficient."""
        acc: dict[HMono, MomentPoly] = {}
        for hm, poly in self.terms.items():
            new = fn(poly)
            acc[hm] = acc[hm] + new if hm in acc else new
        return DerivExpr(acc)

    def integrate(self) -> MomentPoly:
        """E over independent copies x_i ~ F: E[h_i^k] = mu_k, E[h_i] = 0."""
        out = MomentPoly.zero()
        for hm, poly in self.terms.items():
            term = poly
            for _, power in hm:
                if power == 1:
                    term = MomentPoly.zero()
                    break
                term = term * MomentPoly.central(power)
            out = out + term
        return out

    def max_label(self) -> int:
        labs = self.labels()
        return max(labs) if labs else 0

    def __str__(self) -> str:
        return format_deriv(self)

    def __repr__(self) -> str:
        return f"DerivExpr({format_deriv(self)})"


def _sym_gateaux(sym: Sym, new: int) -> DerivExpr:
    """Derivative of a single moment symbol in direction delta_{x_new} - F."""
    if sym.kind == MEAN:
        return DerivExpr.h(new)
    if sym.kind == CENTRAL:
        r = sym.order
        out = DerivExpr.h(new, r) + DerivExpr.from_poly(-MomentPoly.central(r))
        out = out + DerivExpr.h(new, 1, MomentPoly.central(r - 1) * Q(-r))
        return out
    if sym.kind == RAW:
        # d mu'_k = x_new^k - mu'_k with x_new = h_new + mu
        k = sym.order
        out = DerivExpr.from_poly(-MomentPoly.raw(k))
        mu = MomentPoly.mean()
        for j in range(0, k + 1):
            coef = mu ** (k - j) * Q(binomial(k, j))
            if j == 0:
                out = out + DerivExpr.from_poly(coef)
            else:
                out = out + DerivExpr.h(new, j, coef)
        return out
    if sym.kind == G:
        # g_i = g^{(i)} at the mean: d g_i = g_{i+1} h_new
        return DerivExpr.h(new, 1, MomentPoly.from_sym(g_sym(sym.order + 1)))
    raise ValueError(
        f"cannot differentiate presentation symbol {sym.name}; derive before "
        "standardizing")


def _poly_gateaux(poly: MomentPoly, new: int) -> DerivExpr:
    out = DerivExpr.zero()
    for mono, coef in poly.terms.items():
        for idx, (sym, exp) in enumerate(mono):
            rest = list(mono)
            rest[idx] = (sym, exp - 1)
            base = MomentPoly({make_monomial(rest): coef * exp})
            out = out + _sym_gateaux(sym, new) * base
    return out


def raise_derivative(e: DerivExpr, r: int | None = None) -> DerivExpr:
    """From T_{.1..r} build T_{.1..r+1}:

        T_{.1..r+1} = d_{r+1} T_{.1..r} + sum_i (T_{.1..r} with x_i := x_{r+1})
    """
    labs = e.labels()
    if r is None:
        r = max(labs) if labs else 0
    if labs and labs != set(range(1, r + 1)):
        raise ValueError(f"expression labels {sorted(labs)} are not 1..{r}")
    new = r + 1
    out = e.gateaux(new)
    for i in range(1, r + 1):
        out = out + e.relabel({i: new})
    return out


@lru_cache(maxsize=None)
def mean_derivative(p: int) -> DerivExpr:
    if p < 1:
        raise ValueError("derivative order must be >= 1")
    return DerivExpr.h(1) if p == 1 else DerivExpr.zero()


@lru_cache(maxsize=None)
def central_moment_derivative(r: int, p: int) -> DerivExpr:
    """mu_{r.1..p} =
        (-1)^p { (r)_p mu_{r-p} - (r)_{p-1} sum_i (h_i^{r-p} - mu_{r-p+1}/h_i) }
        * h_1 ... h_p ,
    expanded so that no negative h powers remain; 0 for p > r.
    """
    if r < 1 or p < 1:
        raise ValueError("central_moment_derivative needs r >= 1, p >= 1")
    if r == 1:
        return mean_derivative(p)
    if p > r:
        return DerivExpr.zero()
    sign = Q(-1) ** p
    prod_all = DerivExpr({make_hmono((i, 1) for i in range(1, p + 1)):
                          MomentPoly.const(1)})
    out = prod_all * (MomentPoly.central(r - p) * sign *
                      falling_factorial(Q(r), p))
    c2 = sign * falling_factorial(Q(r), p - 1)
    for i in range(1, p + 1):
        others = make_hmono((j, 1) for j in range(1, p + 1) if j != i)
        # (h_i^{r-p} - mu_{r-p+1} h_i^{-1}) h_i = h_i^{r-p+1} - mu_{r-p+1}
        piece = (DerivExpr({make_hmono([(i, r - p + 1)]): MomentPoly.const(1)})
                 + DerivExpr.from_poly(-MomentPoly.central(r - p + 1)))
        out = out + piece * DerivExpr({others: MomentPoly.const(-c2)})
    return out


@lru_cache(maxsize=None)
def raw_moment_derivative(k: int, p: int) -> DerivExpr:
    """mu'_{k.1} = x_1^k - mu'_k; raw moments are linear in F, so all
    higher derivatives vanish."""
    if k < 1 or p < 1:
        raise ValueError("raw_moment_derivative needs k >= 1, p >= 1")
    if p > 1:
        return DerivExpr.zero()
    out = DerivExpr.from_poly(-MomentPoly.raw(k))
    mu = MomentPoly.mean()
    for j in range(0, k + 1):
        coef = mu ** (k - j) * Q(binomial(k, j))
        if j == 0:
            out = out + DerivExpr.from_poly(coef)
        else:
            out = out + DerivExpr.h(1, j, coef)
    return out


# ---------------------------------------------------------------------------
# smooth maps and composite functionals
# ---------------------------------------------------------------------------

def _mono_power(poly: MomentPoly, exp: Fraction) -> MomentPoly:
    """poly ** exp for possibly negative/fractional exp; poly must then be
    a single monomial with coefficient 1 (e.g. mu_2, mu, g_0)."""
    exp = Q(exp)
    if exp.denominator == 1 and exp >= 0:
        return poly ** int(exp)
    if len(poly.terms) != 1:
        raise DerivativeUnavailable(
            "derivative-order-unavailable: fractional power of a "
            "non-monomial value")
    (mono, coef), = poly.terms.items()
    if coef != 1:
        if exp.denominator != 1:
            raise DerivativeUnavailable(
                "derivative-order-unavailable: fractional power of a "
                "non-unit coefficient")
        new_coef = coef ** int(exp)
    else:
        new_coef = Q(1)
    scaled = make_monomial([(s, e * exp) for s, e in mono])
    return MomentPoly({scaled: new_coef})


@dataclass(frozen=True)
class PowerProductMap:
    """g(v_1..v_k) = coef * prod v_i^{e_i} with exact rational exponents."""

    exponents: tuple[Fraction, ...]
    coef: Fraction = Q(1)

    def arity(self) -> int:
        return len(self.exponents)

    def partial(self, orders: tuple[int, ...],
                child_values: tuple[MomentPoly, ...]) -> MomentPoly:
        out = MomentPoly.const(self.coef)
        for e, k, v in zip(self.exponents, orders, child_values):
            ff = falling_factorial(Q(e), k)
            if ff == 0:
                return MomentPoly.zero()
            out = out * ff * _mono_power(v, Q(e) - k)
        return out

    def eval_value(self, vals: Sequence[float]) -> float:
        out = float(self.coef)
        for e, v in zip(self.exponents, vals):
            out *= float(v) ** float(e)
        return out


@dataclass(frozen=True)
class AbstractUnivariateMap:
    """An unspecified smooth g; partials are the abstract symbols g_i.

    ``max_order`` bounds the partials that may be requested (beyond it the
    map raises 'derivative-order-unavailable').  ``fn``/``derivs`` give an
    optional numeric realization for oracle checks.
    """

    max_order: int | None = None
    fn: Callable[[float], float] | None = None
    derivs: tuple[Callable[[float], float], ...] = ()

    def arity(self) -> int:
        return 1

    def partial(self, orders: tuple[int, ...],
                child_values: tuple[MomentPoly, ...]) -> MomentPoly:
        (k,) = orders
        if self.max_order is not None and k > self.max_order:
            raise DerivativeUnavailable(
                f"derivative-order-unavailable: partial of order {k} exceeds "
                f"tabulated maximum {self.max_order}")
        return MomentPoly.from_sym(g_sym(k))

    def eval_value(self, vals: Sequence[float]) -> float:
        if self.fn is None:
            raise DerivativeUnavailable(
                "derivative-order-unavailable: abstract map has no numeric "
                "realization")
        return self.fn(float(vals[0]))


@dataclass(frozen=True)
class BaseFunctional:
    """mu, mu_r, or mu'_k as a functional of F."""

    kind: str  # MEAN, CENTRAL or RAW
    order: int = 0

    def value_poly(self) -> MomentPoly:
        if self.kind == MEAN:
            return MomentPoly.mean()
        if self.kind == CENTRAL:
            return MomentPoly.central(self.order)
        if self.kind == RAW:
            return MomentPoly.raw(self.order)
        raise ValueError(f"unknown base functional kind {self.kind}")

    def eval_numeric(self, points, weights) -> float:
        m = float((weights * points).sum())
        if self.kind == MEAN:
            return m
        if self.kind == CENTRAL:
            return float((weights * (points - m) ** self.order).sum())
        return float((weights * points ** self.order).sum())


@dataclass(frozen=True)
class Compose:
    """T(F) = map(children_1(F), ..., children_k(F))."""

    map: object
    children: tuple = ()

    def value_poly(self) -> MomentPoly:
        vals = tuple(c.value_poly() for c in self.children)
        if isinstance(self.map, PowerProductMap):
            out = MomentPoly.const(self.map.coef)
            for e, v in zip(self.map.exponents, vals):
                out = out * _mono_power(v, Q(e))
            return out
        if isinstance(self.map, AbstractUnivariateMap):
            return MomentPoly.from_sym(g_sym(0))
        if hasattr(self.map, "value_from_children"):
            return self.map.value_from_children(vals)
        raise ValueError("unknown smooth map")

    def eval_numeric(self, points, weights) -> float:
        vals = [c.eval_numeric(points, weights) for c in self.children]
        return self.map.eval_value(vals)


FunctionalSpec = BaseFunctional | Compose


def MeanF() -> BaseFunctional:
    return BaseFunctional(MEAN)


def CentralMomentF(r: int) -> BaseFunctional:
    if r < 1:
        raise ValueError("central moment order must be >= 1")
    return BaseFunctional(CENTRAL, r) if r >= 2 else BaseFunctional(MEAN)


def RawMomentF(k: int) -> BaseFunctional:
    return BaseFunctional(RAW, k)


_DERIV_CACHE: dict[tuple, DerivExpr] = {}


def derivative(spec: FunctionalSpec, p: int) -> DerivExpr:
    """T_{.1..p} for any functional spec (labels 1..p)."""
    key = (spec, p)
    cached = _DERIV_CACHE.get(key)
    if cached is not None:
        return cached
    if isinstance(spec, BaseFunctional):
        if spec.kind == MEAN:
            out = mean_derivative(p)
        elif spec.kind == CENTRAL:
            out = central_moment_derivative(spec.order, p)
        else:
            out = raw_moment_derivative(spec.order, p)
    else:
        out = chain_derivative(spec, p)
    _DERIV_CACHE[key] = out
    return out


def chain_derivative(spec: Compose, r: int) -> DerivExpr:
    """Functional chain rule over set partitions of the argument labels:

        T_{.1..r} = sum over partitions pi, and over assignments of each
        block to a child, of  g_partial(orders) * prod_B child_{.B}
    """
    if not isinstance(spec, Compose):
        return derivative(spec, r)
    nchild = len(spec.children)
    child_values = tuple(c.value_poly() for c in spec.children)
    partial_cache: dict[tuple[int, ...], MomentPoly] = {}
    out = DerivExpr.zero()
    for part in set_partitions(r):
        # child derivative relabeled onto each block, per child choice
        block_exprs: list[list[DerivExpr]] = []
        for block in part:
            exprs = []
            for c in spec.children:
                d = derivative(c, len(block))
                exprs.append(d.relabel(
                    {i + 1: lab for i, lab in enumerate(block)}))
            block_exprs.append(exprs)
        for assign in itertools.product(range(nchild), repeat=len(part)):
            orders = [0] * nchild
            for c in assign:
                orders[c] += 1
            okey = tuple(orders)
            g_part = partial_cache.get(okey)
            if g_part is None:
                g_part = spec.map.partial(okey, child_values)
                partial_cache[okey] = g_part
            if not g_part:
                continue
            term = DerivExpr.from_poly(g_part)
            skip = False
            for bi, c in enumerate(assign):
                be = block_exprs[bi][c]
                if not be:
                    skip = True
                    break
                term = term * be
            if not skip:
                out = out + term
    return out


# ---------------------------------------------------------------------------
# text form:  h1^3 - mu3 - 3*mu2*h1
# ---------------------------------------------------------------------------

def format_deriv(e: DerivExpr) -> str:
    if not e.terms:
        return "0"
    pieces: list[tuple[str, str]] = []
    for hm in sorted(e.terms, key=lambda hm: (-sum(p for _, p in hm), hm)):
        poly = e.terms[hm]
        htxt = "*".join(f"h{l}" + (f"^{p}" if p != 1 else "")
                        for l, p in hm)
        for mono in sorted(poly.terms, key=_poly_mono_key):
            coef = poly.terms[mono]
            sign = "-" if coef < 0 else "+"
            mag = abs(coef)
            body_parts = []
            if mag != 1 or (not mono and not htxt):
                body_parts.append(str(mag))
            if mono:
                body_parts.append("*".join(
                    f"{s.name}" + ("" if x == 1 else
                                   f"^{x.numerator}" if x.denominator == 1
                                   else f"^{x.numerator}/{x.denominator}")
                    for s, x in mono))
            if htxt:
                body_parts.append(htxt)
            pieces.append((sign, "*".join(body_parts)))
    first_sign, first_body = pieces[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


def _poly_mono_key(mono: Monomial):
    from .poly import _mono_order_key
    return _mono_order_key(mono)


def parse_deriv(text: str) -> DerivExpr:
    """Parse the DerivExpr grammar, e.g. ``h1^3 - mu3 - 3*mu2*h1``."""
    toks = _Tokens(text)
    expr = _parse_d_sum(toks)
    if toks.peek() is not None:
        raise ValueError(f"trailing input: {toks.peek()[1]!r}")
    return expr


def _parse_d_factor(toks: _Tokens) -> DerivExpr:
    tok = toks.next()
    if tok == ("op", "("):
        inner = _parse_d_sum(toks)
        if toks.next() != ("op", ")"):
            raise ValueError("unbalanced parentheses")
        if toks.peek() == ("op", "^"):
            toks.next()
            exp = _parse_exponent(toks)
            if exp.denominator != 1 or exp < 0:
                raise ValueError("powers of sums must be nonnegative integers")
            return inner ** int(exp)
        return inner
    if tok[0] == "num":
        coef = Q(int(tok[1]))
        if toks.peek() == ("op", "/"):
            toks.next()
            d = toks.next()
            if d[0] != "num":
                raise ValueError("bad rational coefficient")
            coef /= int(d[1])
        return DerivExpr.from_poly(coef)
    if tok[0] == "name":
        name = tok[1]
        exp = Q(1)
        if toks.peek() == ("op", "^"):
            toks.next()
            exp = _parse_exponent(toks)
        if name.startswith("h") and name[1:].isdigit():
            if exp.denominator != 1 or exp < 1:
                raise ValueError("h powers must be positive integers")
            return DerivExpr.h(int(name[1:]), int(exp))
        return DerivExpr.from_poly(MomentPoly.from_sym(parse_symbol(name), exp))
    raise ValueError(f"unexpected token {tok[1]!r}")


def _parse_d_product(toks: _Tokens) -> DerivExpr:
    result = _parse_d_factor(toks)
    while toks.peek() == ("op", "*"):
        toks.next()
        result = result * _parse_d_factor(toks)
    return result


def _parse_d_sum(toks: _Tokens) -> DerivExpr:
    tok = toks.peek()
    negate = False
    if tok == ("op", "-"):
        toks.next()
        negate = True
    elif tok == ("op", "+"):
        toks.next()
    result = _parse_d_product(toks)
    if negate:
        result = -result
    while True:
        tok = toks.peek()
        if tok == ("op", "+"):
            toks.next()
            result = result + _parse_d_product(toks)
        elif tok == ("op", "-"):
            toks.next()
            result = result - _parse_d_product(toks)
        else:
            return result
