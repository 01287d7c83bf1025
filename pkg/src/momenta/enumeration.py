"""Exact finite-sample enumeration oracle.

For a discrete distribution with rational probabilities and a polynomial
functional T (value expressible as a polynomial in the mean and central
moments), E[T(Fhat)] over samples of size n is computed exactly: sum over
count vectors c of the multinomial weight n!/(prod c_i!) prod p_i^{c_i}
times T evaluated at the sample's plug-in moments, all in Fraction
arithmetic.  This is a derivation-independent ground truth used to
arbitrate bias-series coefficients.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Mapping, Sequence

from .gateaux import FunctionalSpec
from .poly import MomentPoly

__all__ = [
    "sample_moment_values", "exact_mean_T", "exact_bias",
    "bias_series_coeffs", "series_prediction",
]


def _count_vectors(k: int, n: int):
    """All nonnegative integer k-vectors summing to n."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _count_vectors(k - 1, n - first):
            yield (first,) + rest


def sample_moment_values(atoms: Sequence[Fraction], counts: Sequence[int],
                         max_order: int) -> dict[str, Fraction]:
    """Plug-in moments {mu, mu2..mu_maxorder} of the empirical distribution
    putting mass c_i/n on atom x_i (exact)."""
    n = sum(counts)
    mean = sum(Fraction(x) * c for x, c in zip(atoms, counts)) / n
    vals: dict[str, Fraction] = {"mu": mean}
    for r in range(2, max_order + 1):
        vals[f"mu{r}"] = sum((Fraction(x) - mean) ** r * c
                             for x, c in zip(atoms, counts)) / n
    return vals


def _needed_order(poly: MomentPoly) -> int:
    return max((s.order for s in poly.symbols() if s.kind == "central"),
               default=2)


def exact_mean_T(T: FunctionalSpec, atoms: Sequence, probs: Sequence,
                 n: int) -> Fraction:
    """Exact E[T(Fhat)] for a sample of size n from the discrete law."""
    atoms = [Fraction(a) for a in atoms]
    probs = [Fraction(p) for p in probs]
    if sum(probs) != 1:
        raise ValueError("probabilities must sum to 1")
    vp = T.value_poly()
    order = _needed_order(vp)
    total = Fraction(0)
    nfact = math.factorial(n)
    for counts in _count_vectors(len(atoms), n):
        w = Fraction(nfact)
        for c, p in zip(counts, probs):
            w = w * p ** c / math.factorial(c)
        vals = sample_moment_values(atoms, counts, order)
        total += w * vp.evaluate(vals, exact=True)
    return total


def exact_bias(T: FunctionalSpec, atoms, probs, n: int) -> Fraction:
    """Exact bias E[T(Fhat)] - T(F)."""
    from .dists import DiscreteDist
    F = DiscreteDist.from_pairs(list(zip(atoms, probs)))
    vp = T.value_poly()
    truth = vp.evaluate(F.moment_values(_needed_order(vp), exact=True),
                        exact=True)
    return exact_mean_T(T, atoms, probs, n) - truth


def bias_series_coeffs(T: FunctionalSpec, atoms, probs,
                       ns: Sequence[int]) -> list[Fraction]:
    """Solve for (b_1, ..., b_d) in bias(n) = sum_i b_i / n^i from exact
    biases at d distinct sample sizes (rational Vandermonde solve).

    Exact when the bias series terminates within d terms, as it does for
    polynomial statistics of bounded degree.
    """
    d = len(ns)
    rows = [[Fraction(1, n ** i) for i in range(1, d + 1)] for n in ns]
    rhs = [exact_bias(T, atoms, probs, n) for n in ns]
    return _solve_exact(rows, rhs)


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(A)
    M = [row[:] + [v] for row, v in zip(A, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [x / pv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def series_prediction(coeffs: Mapping[str, MomentPoly],
                      values: Mapping[str, Fraction], n: int,
                      names: Sequence[str] = ("a11", "a12", "a13")
                      ) -> Fraction:
    """Predicted bias sum_i a_1i / n^i from symbolic coefficients."""
    out = Fraction(0)
    for i, name in enumerate(names, start=1):
        poly = coeffs.get(name)
        if poly is None:
            continue
        out += Fraction(poly.evaluate(values, exact=True)) / n ** i
    return out
