"""Exact sparse polynomials in moment symbols.

The engine manipulates polynomials whose indeterminates are population
moments of a single distribution F:

    ``mu``      the mean E[X]
    ``muR``     the central moment E[(X - mu)^R], R >= 2
    ``mupR``    the raw moment E[X^R], R >= 1
    ``nuR``     the standardized moment muR / mu2^(R/2), R >= 3
    ``gI``      an abstract partial derivative of a smooth outer map

Coefficients and exponents are exact rationals (``fractions.Fraction``).
Exponents are integers except that ``mu`` and ``mu2`` may carry
half-integer powers (needed for standardized quantities such as the
coefficient of variation).  ``mu1`` and ``mu0`` are never stored: central
moments of order 0 and 1 collapse to 1 and 0 at construction time.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

Q = Fraction
Number = Union[int, Fraction]

# symbol kinds, in display order
MEAN = "mean"
CENTRAL = "central"
RAW = "raw"
NU = "nu"
G = "g"

_KIND_RANK = {MEAN: 0, CENTRAL: 1, RAW: 2, NU: 3, G: 4}


class Sym:
    """A single moment indeterminate (interned and totally ordered)."""

    __slots__ = ("kind", "order", "_name")
    _cache: dict[tuple[str, int], "Sym"] = {}

    def __new__(cls, kind: str, order: int = 0) -> "Sym":
        key = (kind, order)
        sym = cls._cache.get(key)
        if sym is not None:
            return sym
        if kind == MEAN:
            if order != 0:
                raise ValueError("mean symbol carries no order")
        elif kind == CENTRAL:
            if order < 2:
                raise ValueError("central moment symbols require order >= 2")
        elif kind == RAW:
            if order < 1:
                raise ValueError("raw moment symbols require order >= 1")
        elif kind == NU:
            if order < 3:
                raise ValueError("standardized moment symbols require order >= 3")
        elif kind == G:
            if order < 0:
                raise ValueError("abstract derivative symbols require order >= 0")
        else:
            raise ValueError(f"unknown symbol kind {kind!r}")
        sym = object.__new__(cls)
        sym.kind = kind
        sym.order = order
        if kind == MEAN:
            sym._name = "mu"
        elif kind == CENTRAL:
            sym._name = f"mu{order}"
        elif kind == RAW:
            sym._name = f"mup{order}"
        elif kind == NU:
            sym._name = f"nu{order}"
        else:
            sym._name = f"g{order}"
        cls._cache[key] = sym
        return sym

    @property
    def name(self) -> str:
        return self._name

    def sort_key(self) -> tuple[int, int]:
        # higher-order moments print first within a kind
        return (_KIND_RANK[self.kind], -self.order)

    def allows_half_power(self) -> bool:
        return self.kind == MEAN or (self.kind == CENTRAL and self.order == 2)

    def __repr__(self) -> str:
        return f"Sym({self._name})"

    def __lt__(self, other: "Sym") -> bool:
        return self.sort_key() < other.sort_key()


def mean_sym() -> Sym:
    return Sym(MEAN)


def central_sym(r: int) -> Sym:
    return Sym(CENTRAL, r)


def raw_sym(r: int) -> Sym:
    return Sym(RAW, r)


def nu_sym(r: int) -> Sym:
    return Sym(NU, r)


def g_sym(i: int) -> Sym:
    return Sym(G, i)


# A monomial is a sorted tuple of (Sym, exponent) pairs with nonzero
# exponents.  Stored as plain tuples so they can key dictionaries.
Monomial = tuple[tuple[Sym, Fraction], ...]

ONE_MONO: Monomial = ()


def make_monomial(items: Iterable[tuple[Sym, Number]]) -> Monomial:
    acc: dict[Sym, Fraction] = {}
    for sym, exp in items:
        acc[sym] = acc.get(sym, Q(0)) + Q(exp)
    parts = []
    for sym, exp in acc.items():
        if exp == 0:
            continue
        if exp.denominator == 1:
            pass
        elif exp.denominator == 2 and sym.allows_half_power():
            pass
        else:
            raise ValueError(f"exponent {exp} not allowed on symbol {sym.name}")
        parts.append((sym, exp))
    parts.sort(key=lambda pair: pair[0].sort_key())
    return tuple(parts)


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    return make_monomial(list(a) + list(b))


def mono_weight(m: Monomial) -> Fraction:
    """Scale weight: X -> cX multiplies the monomial value by c^weight."""
    w = Q(0)
    for sym, exp in m:
        if sym.kind == MEAN:
            w += exp
        elif sym.kind in (CENTRAL, RAW):
            w += sym.order * exp
        # nu and g symbols are scale-free / abstract
    return w


class MomentPoly:
    """Sparse polynomial: dict from Monomial to nonzero Fraction."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coef in terms.items():
                c = Q(coef)
                if c:
                    self.terms[mono] = c

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls) -> "MomentPoly":
        return cls()

    @classmethod
    def const(cls, c: Number) -> "MomentPoly":
        return cls({ONE_MONO: Q(c)})

    @classmethod
    def from_sym(cls, sym: Sym, exp: Number = 1, coef: Number = 1) -> "MomentPoly":
        return cls({make_monomial([(sym, Q(exp))]): Q(coef)})

    @classmethod
    def mean(cls) -> "MomentPoly":
        return cls.from_sym(mean_sym())

    @classmethod
    def central(cls, r: int) -> "MomentPoly":
        """mu_r as a polynomial; mu_0 = 1 and mu_1 = 0 collapse here."""
        if r == 0:
            return cls.const(1)
        if r == 1:
            return cls.zero()
        return cls.from_sym(central_sym(r))

    @classmethod
    def raw(cls, r: int) -> "MomentPoly":
        if r == 0:
            return cls.const(1)
        return cls.from_sym(raw_sym(r))

    # -- ring operations ----------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = MomentPoly.const(other)
        if not isinstance(other, MomentPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "MomentPoly | Number") -> "MomentPoly":
        if isinstance(other, (int, Fraction)):
            other = MomentPoly.const(other)
        out = dict(self.terms)
        for mono, coef in other.terms.items():
            c = out.get(mono, Q(0)) + coef
            if c:
                out[mono] = c
            else:
                out.pop(mono, None)
        res = MomentPoly()
        res.terms = out
        return res

    __radd__ = __add__

    def __neg__(self) -> "MomentPoly":
        res = MomentPoly()
        res.terms = {m: -c for m, c in self.terms.items()}
        return res

    def __sub__(self, other: "MomentPoly | Number") -> "MomentPoly":
        if isinstance(other, (int, Fraction)):
            other = MomentPoly.const(other)
        return self + (-other)

    def __rsub__(self, other: Number) -> "MomentPoly":
        return MomentPoly.const(other) - self

    def __mul__(self, other: "MomentPoly | Number") -> "MomentPoly":
        if isinstance(other, (int, Fraction)):
            res = MomentPoly()
            c0 = Q(other)
            if c0:
                res.terms = {m: c * c0 for m, c in self.terms.items()}
            return res
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = mono_mul(m1, m2)
                c = out.get(mono, Q(0)) + c1 * c2
                if c:
                    out[mono] = c
                else:
                    out.pop(mono, None)
        res = MomentPoly()
        res.terms = out
        return res

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "MomentPoly":
        return self * (Q(1) / Q(other))

    def __pow__(self, n: int) -> "MomentPoly":
        if n < 0:
            raise ValueError("negative polynomial powers are not defined")
        result = MomentPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    # -- queries --------------------------------------------------------
    def symbols(self) -> set[Sym]:
        return {sym for mono in self.terms for sym, _ in mono}

    def max_central_order(self) -> int:
        """Highest central-moment order appearing (mean counts as 1)."""
        best = 0
        for mono in self.terms:
            for sym, _ in mono:
                if sym.kind == CENTRAL:
                    best = max(best, sym.order)
                elif sym.kind in (MEAN, RAW):
                    best = max(best, max(1, sym.order))
        return best

    def constant_term(self) -> Fraction:
        return self.terms.get(ONE_MONO, Q(0))

    def coefficient(self, mono: Monomial) -> Fraction:
        return self.terms.get(mono, Q(0))

    def is_homogeneous(self) -> bool:
        weights = {mono_weight(m) for m in self.terms}
        return len(weights) <= 1

    def weight(self) -> Fraction | None:
        """Common scale weight of all terms, or None if inhomogeneous."""
        weights = {mono_weight(m) for m in self.terms}
        if len(weights) == 1:
            return next(iter(weights))
        return None

    # -- substitution and evaluation ------------------------------------
    def subs(self, mapping: Mapping[Sym, "MomentPoly"]) -> "MomentPoly":
        """Substitute polynomials for symbols.

        Symbols being replaced must appear with nonnegative integer
        exponents unless the replacement is itself a single monomial, in
        which case fractional powers distribute onto its factors.
        """
        out = MomentPoly.zero()
        for mono, coef in self.terms.items():
            term = MomentPoly.const(coef)
            for sym, exp in mono:
                repl = mapping.get(sym)
                if repl is None:
                    term = term * MomentPoly.from_sym(sym, exp)
                    continue
                if exp.denominator == 1 and exp >= 0:
                    term = term * repl ** int(exp)
                elif len(repl.terms) == 1:
                    (rmono, rcoef), = repl.terms.items()
                    if exp.denominator != 1:
                        root = _fraction_root(rcoef, exp.denominator)
                        factor_coef = root ** exp.numerator
                    else:
                        factor_coef = rcoef ** exp  # exp negative integer
                    scaled = make_monomial([(s, e * exp) for s, e in rmono])
                    term = term * MomentPoly({scaled: factor_coef})
                else:
                    raise ValueError(
                        f"cannot raise non-monomial substitution for {sym.name} "
                        f"to power {exp}"
                    )
            out = out + term
        return out

    def evaluate(self, values: Mapping[str, float | Number],
                 exact: bool = False):
        """Evaluate numerically given symbol values keyed by name.

        With ``exact=True`` all inputs must be rationals and all stored
        exponents integers; the result is a Fraction.
        """
        total: Fraction | float = Q(0) if exact else 0.0
        for mono, coef in self.terms.items():
            term = coef if exact else float(coef)
            for sym, exp in mono:
                if sym.name not in values:
                    raise KeyError(f"no value supplied for symbol {sym.name}")
                v = values[sym.name]
                if exact:
                    if exp.denominator != 1:
                        raise ValueError(
                            f"fractional exponent on {sym.name} has no exact value")
                    term = term * Q(v) ** int(exp)
                else:
                    term = term * float(v) ** float(exp)
            total = total + term
        return total

    # -- text form -------------------------------------------------------
    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"MomentPoly({format_poly(self)})"


def _fraction_root(value: Fraction, k: int) -> Fraction:
    """Exact k-th root of a rational, if one exists."""
    def iroot(n: int) -> int:
        r = round(n ** (1.0 / k))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand ** k == n:
                return cand
        raise ValueError(f"{n} has no integer {k}-th root")

    if value < 0:
        raise ValueError("no rational even root of a negative coefficient")
    return Q(iroot(value.numerator), iroot(value.denominator))


# ---------------------------------------------------------------------------
# text formatting and parsing
# ---------------------------------------------------------------------------

def _format_exp(exp: Fraction) -> str:
    if exp == 1:
        return ""
    if exp.denominator == 1:
        return f"^{exp.numerator}"
    return f"^{exp.numerator}/{exp.denominator}"


def _format_mono(mono: Monomial) -> str:
    return "*".join(f"{sym.name}{_format_exp(exp)}" for sym, exp in mono)


def _mono_order_key(mono: Monomial):
    # graded by scale weight, then by highest-order symbols first
    deg = sum(exp for _, exp in mono)
    return (-mono_weight(mono), tuple((s.sort_key(), -e) for s, e in mono), -deg)


def format_poly(poly: MomentPoly) -> str:
    if not poly.terms:
        return "0"
    pieces = []
    for mono in sorted(poly.terms, key=_mono_order_key):
        coef = poly.terms[mono]
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = _format_mono(mono)
        else:
            body = f"{mag}*{_format_mono(mono)}"
        pieces.append((sign, body))
    first_sign, first_body = pieces[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


_SYM_RE = re.compile(r"(mup|mu|nu|g|h)(\d*)$")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[a-zA-Z]+\d*)|(?P<op>[-+*/^()]))"
)


def parse_symbol(name: str) -> Sym:
    m = _SYM_RE.match(name)
    if not m or m.group(1) == "h":
        raise ValueError(f"unknown symbol {name!r}")
    head, digits = m.group(1), m.group(2)
    if head == "mu":
        if digits == "":
            return mean_sym()
        return central_sym(int(digits))
    if digits == "":
        raise ValueError(f"symbol {name!r} requires an order")
    if head == "mup":
        return raw_sym(int(digits))
    if head == "nu":
        return nu_sym(int(digits))
    return g_sym(int(digits))


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, str]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ValueError(f"bad character in polynomial at {text[pos:]!r}")
            pos = m.end()
            if m.group("num"):
                self.items.append(("num", m.group("num")))
            elif m.group("name"):
                self.items.append(("name", m.group("name")))
            else:
                self.items.append(("op", m.group("op")))
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ValueError("unexpected end of polynomial text")
        self.pos += 1
        return tok


def _parse_exponent(toks: _Tokens) -> Fraction:
    sign = 1
    tok = toks.next()
    if tok == ("op", "-"):
        sign = -1
        tok = toks.next()
    if tok[0] != "num":
        raise ValueError("exponent must be numeric")
    num = int(tok[1])
    den = 1
    nxt = toks.peek()
    if nxt == ("op", "/"):
        toks.next()
        dtok = toks.next()
        if dtok[0] != "num":
            raise ValueError("exponent denominator must be numeric")
        den = int(dtok[1])
    return Q(sign * num, den)


def _parse_factor(toks: _Tokens) -> MomentPoly:
    tok = toks.next()
    if tok == ("op", "("):
        inner = _parse_sum(toks)
        close = toks.next()
        if close != ("op", ")"):
            raise ValueError("unbalanced parentheses")
        base: MomentPoly | None = inner
        if toks.peek() == ("op", "^"):
            toks.next()
            exp = _parse_exponent(toks)
            if exp.denominator != 1 or exp < 0:
                raise ValueError("parenthesized powers must be nonnegative integers")
            return inner ** int(exp)
        return inner
    if tok[0] == "num":
        coef = Q(int(tok[1]))
        if toks.peek() == ("op", "/"):
            toks.next()
            dtok = toks.next()
            if dtok[0] != "num":
                raise ValueError("coefficient denominator must be numeric")
            coef = coef / int(dtok[1])
        return MomentPoly.const(coef)
    if tok[0] == "name":
        sym = parse_symbol(tok[1])
        exp = Q(1)
        if toks.peek() == ("op", "^"):
            toks.next()
            exp = _parse_exponent(toks)
        return MomentPoly.from_sym(sym, exp)
    raise ValueError(f"unexpected token {tok[1]!r}")


def _parse_product(toks: _Tokens) -> MomentPoly:
    result = _parse_factor(toks)
    while toks.peek() == ("op", "*"):
        toks.next()
        result = result * _parse_factor(toks)
    return result


def _parse_sum(toks: _Tokens) -> MomentPoly:
    tok = toks.peek()
    negate = False
    if tok == ("op", "-"):
        toks.next()
        negate = True
    elif tok == ("op", "+"):
        toks.next()
    result = _parse_product(toks)
    if negate:
        result = -result
    while True:
        tok = toks.peek()
        if tok == ("op", "+"):
            toks.next()
            result = result + _parse_product(toks)
        elif tok == ("op", "-"):
            toks.next()
            result = result - _parse_product(toks)
        else:
            return result


def parse_poly(text: str) -> MomentPoly:
    """Parse text like ``mu6 - 6*mu4*mu2 + 9*mu2^3`` or ``mu2^-3/2``."""
    toks = _Tokens(text)
    result = _parse_sum(toks)
    if toks.peek() is not None:
        raise ValueError(f"trailing input after polynomial: {toks.peek()[1]!r}")
    return result


def raw_in_central(k: int) -> MomentPoly:
    """mu'_k expanded as sum_j C(k,j) mu_j mu^{k-j} (mu_1 term drops)."""
    out = MomentPoly.zero()
    for j in range(0, k + 1):
        out = out + (MomentPoly.central(j) * MomentPoly.mean() ** (k - j)
                     * math.comb(k, j))
    return out


def eliminate_raw(poly: MomentPoly) -> MomentPoly:
    """Rewrite every raw-moment symbol in terms of central moments."""
    mapping = {sym: raw_in_central(sym.order)
               for sym in poly.symbols() if sym.kind == RAW}
    return poly.subs(mapping) if mapping else poly


def nu_rewrite(poly: MomentPoly) -> MomentPoly:
    """Rewrite a polynomial in central moments as one in nu_r = mu_r/mu2^(r/2).

    Every term must be expressible as a product of nu symbols times a
    power of mu2; in particular the polynomial must contain no mean or
    raw-moment symbols, and after extraction each term's residual mu2
    power must agree (a homogeneity requirement).  The common mu2 power
    is returned as part of the polynomial.
    """
    out = MomentPoly.zero()
    for mono, coef in poly.terms.items():
        parts: list[tuple[Sym, Fraction]] = []
        mu2_exp = Q(0)
        for sym, exp in mono:
            if sym.kind == CENTRAL and sym.order == 2:
                mu2_exp += exp
            elif sym.kind == CENTRAL:
                parts.append((nu_sym(sym.order), exp))
                mu2_exp += Q(sym.order, 2) * exp
            elif sym.kind == NU:
                parts.append((sym, exp))
            else:
                raise ValueError(
                    f"cannot standardize a term containing {sym.name}")
        if mu2_exp:
            parts.append((central_sym(2), mu2_exp))
        out = out + MomentPoly({make_monomial(parts): coef})
    return out
