"""Bracket functions: expectations of products of derivative expressions
over independent copies of F, reduced to exact moment polynomials.

A bracket like [1,2,12]_T = E[T_{.1} T_{.2} T_{.12}] is described by a
``BracketKey``: a multiset of factors, each a (tag, labels, power) triple.
The tag names which functional the factor differentiates ("T" by default;
Appendix-B entries tag factors with the central-moment order, e.g.
``11_2`` for mu_{2.11}; mixed brackets use tags like "U" and "S").
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .gateaux import DerivExpr, FunctionalSpec, derivative
from .poly import MomentPoly, Q

MAX_CANON_LABELS = 7


@dataclass(frozen=True)
class Factor:
    """One derivative factor: tag_{.labels}^power."""

    labels: tuple[int, ...]
    tag: str = "T"
    power: int = 1

    def sort_key(self):
        return (len(self.labels), self.labels, self.tag, self.power)

    def __lt__(self, other: "Factor") -> bool:
        return self.sort_key() < other.sort_key()

    def __post_init__(self):
        if not self.labels:
            raise ValueError("factor needs at least one argument label")
        if tuple(sorted(self.labels)) != self.labels:
            raise ValueError("factor labels must be sorted")
        if self.power < 1:
            raise ValueError("factor power must be positive")

    def text(self) -> str:
        body = "".join(str(l) for l in self.labels)
        if self.tag != "T":
            body += f"_{self.tag}"
        if self.power != 1:
            body += f"^{self.power}"
        return body


@dataclass(frozen=True)
class BracketKey:
    factors: tuple[Factor, ...]

    def labels(self) -> tuple[int, ...]:
        return tuple(sorted({l for f in self.factors for l in f.labels}))

    def text(self) -> str:
        return " ".join(f.text() for f in self.factors)

    def max_deriv_order(self, tag: str = "T") -> int:
        return max((len(f.labels) for f in self.factors if f.tag == tag),
                   default=0)

    def __str__(self) -> str:
        return self.text()


def make_key(factors: Iterable[tuple]) -> BracketKey:
    """factors: iterable of (labels, tag, power) or Factor."""
    fs = []
    for f in factors:
        if isinstance(f, Factor):
            fs.append(f)
        else:
            labels, tag, power = f
            fs.append(Factor(tuple(sorted(labels)), tag, power))
    return canonicalize(BracketKey(tuple(sorted(fs))))


def canonicalize(key: BracketKey) -> BracketKey:
    """Canonical representative under relabeling of dummy argument indices:
    the relabeling (onto 1..m) minimizing the serialized form, with like
    factors merged into powers."""
    merged = _merge_powers(key.factors)
    labels = sorted({l for f in merged for l in f.labels})
    m = len(labels)
    if m > MAX_CANON_LABELS:
        raise ValueError(f"too many dummy labels ({m}) to canonicalize")
    best: tuple[Factor, ...] | None = None
    for perm in itertools.permutations(range(1, m + 1)):
        rename = dict(zip(labels, perm))
        cand = _merge_powers(
            Factor(tuple(sorted(rename[l] for l in f.labels)), f.tag, 1)
            for f in merged for _ in range(f.power))
        if best is None or _key_sort(cand) < _key_sort(best):
            best = cand
    return BracketKey(best if best is not None else ())


def _merge_powers(factors: Iterable[Factor]) -> tuple[Factor, ...]:
    counts: dict[tuple, int] = {}
    for f in factors:
        k = (f.labels, f.tag)
        counts[k] = counts.get(k, 0) + f.power
    return tuple(sorted(Factor(labels, tag, power)
                        for (labels, tag), power in counts.items()))


def _key_sort(factors: tuple[Factor, ...]):
    return tuple((len(f.labels), f.labels, f.tag, f.power) for f in factors)


def separable_components(key: BracketKey) -> list[BracketKey]:
    """Connected components of the factor/label incidence graph.  A key
    with more than one component is separable: its bracket is the product
    of the component brackets."""
    factors = list(key.factors)
    n = len(factors)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    label_owner: dict[int, int] = {}
    for i, f in enumerate(factors):
        for l in f.labels:
            if l in label_owner:
                ri, rj = find(i), find(label_owner[l])
                parent[ri] = rj
            else:
                label_owner[l] = i
    groups: dict[int, list[Factor]] = {}
    for i, f in enumerate(factors):
        groups.setdefault(find(i), []).append(f)
    return [canonicalize(BracketKey(tuple(sorted(g)))) for g in groups.values()]


def is_separable(key: BracketKey) -> bool:
    return len(separable_components(key)) > 1


# ---------------------------------------------------------------------------
# key parsing: "1,2,12" / "1122" / "1^2" / "1_1^2 11_2" / "1_U 11_S"
# ---------------------------------------------------------------------------

def parse_key(text: str) -> BracketKey:
    text = text.strip().strip("[]()")
    if not text:
        raise ValueError("empty bracket key")
    parts = [p for chunk in text.split(",") for p in chunk.split()] \
        if ("," in text or " " in text) else [text]
    if len(parts) == 1 and "_" not in parts[0] and "^" not in parts[0]:
        # bare digit-run forms like "1122": one factor, coincidences implied
        return make_key([(tuple(int(c) for c in parts[0]), "T", 1)])
    factors = []
    for part in parts:
        power = 1
        if "^" in part:
            part, ptxt = part.split("^", 1)
            power = int(ptxt)
        tag = "T"
        if "_" in part:
            part, tag = part.split("_", 1)
        if not part.isdigit():
            raise ValueError(f"bad factor labels {part!r}")
        factors.append((tuple(int(c) for c in part), tag, power))
    return make_key(factors)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def factor_expr(spec: FunctionalSpec, labels: Sequence[int]) -> DerivExpr:
    """T_{.labels}: the order-p derivative with coincident labels merged."""
    p = len(labels)
    d = derivative(spec, p)
    return d.relabel({i + 1: lab for i, lab in enumerate(labels)})


def integrate_out(product: DerivExpr) -> MomentPoly:
    """E over independent copies: E[h_i^k] = mu_k, E[h_i] = 0."""
    return product.integrate()


def evaluate_bracket(T: FunctionalSpec | Mapping[str, FunctionalSpec],
                     key: BracketKey | str) -> MomentPoly:
    """The bracket's exact MomentPoly value.

    ``T`` is either a single functional (used for every factor tag) or a
    mapping tag -> functional for mixed brackets.
    """
    if isinstance(key, str):
        key = parse_key(key)
    specs: Mapping[str, FunctionalSpec]
    if isinstance(T, Mapping):
        specs = T
    else:
        specs = None  # resolved per-factor below

    product = DerivExpr.from_poly(1)
    for f in key.factors:
        if specs is None:
            spec = T
        else:
            if f.tag not in specs:
                raise KeyError(f"no functional supplied for tag {f.tag!r}")
            spec = specs[f.tag]
        e = factor_expr(spec, f.labels)
        for _ in range(f.power):
            product = product * e
    return integrate_out(product)
