"""Finite discrete distributions: the substrate for oracles and plug-ins."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

Q = Fraction


@dataclass(frozen=True)
class DiscreteDist:
    """A finite distribution given by atoms (point, probability).

    Probabilities must be positive and sum to 1; at least two atoms are
    required so that mu_2 > 0.  Exact moments are available when both
    points and probabilities are rational.
    """

    atoms: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        if len(self.atoms) < 2:
            raise ValueError("need at least 2 atoms for a nondegenerate mu_2")
        total = sum(p for _, p in self.atoms)
        if any(p <= 0 for _, p in self.atoms):
            raise ValueError("probabilities must be positive")
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple]) -> "DiscreteDist":
        return cls(tuple((Q(x), Q(p)) for x, p in pairs))

    @classmethod
    def uniform(cls, points: Sequence) -> "DiscreteDist":
        k = len(points)
        return cls(tuple((Q(x), Q(1, k)) for x in points))

    @property
    def mean(self) -> Fraction:
        return sum(p * x for x, p in self.atoms)

    def raw_moment(self, k: int) -> Fraction:
        return sum(p * x ** k for x, p in self.atoms)

    def central_moment(self, r: int) -> Fraction:
        if r == 0:
            return Q(1)
        m = self.mean
        return sum(p * (x - m) ** r for x, p in self.atoms)

    def moment_values(self, max_order: int, exact: bool = True) -> dict:
        """Symbol-name -> value table usable by MomentPoly.evaluate."""
        vals = {"mu": self.mean}
        for r in range(2, max_order + 1):
            vals[f"mu{r}"] = self.central_moment(r)
        for k in range(1, max_order + 1):
            vals[f"mup{k}"] = self.raw_moment(k)
        mu2 = vals.get("mu2")
        for r in range(3, max_order + 1):
            vals[f"nu{r}"] = (float(vals[f"mu{r}"]) / float(mu2) ** (r / 2)
                              if mu2 else 0.0)
        if not exact:
            vals = {k: float(v) for k, v in vals.items()}
        return vals
