"""Set partitions, partition profiles, and partial Bell polynomials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

Q = Fraction

Block = tuple[int, ...]
SetPartition = tuple[Block, ...]


class ProfileError(ValueError):
    """Raised when a partition profile is inconsistent ('profile-mismatch')."""


def falling_factorial(m, i: int):
    """(m)_i = m (m-1) ... (m-i+1); works for ints, Fractions and floats."""
    if i < 0:
        raise ValueError("falling factorial needs a nonnegative index")
    out = m * 0 + 1
    for k in range(i):
        out = out * (m - k)
    return out


def binomial(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _canonical(blocks: Sequence[Sequence[int]]) -> SetPartition:
    tidy = tuple(sorted((tuple(sorted(b)) for b in blocks),
                        key=lambda b: (len(b), b)))
    return tidy


@lru_cache(maxsize=None)
def set_partitions(r: int, blocks: int | None = None) -> tuple[SetPartition, ...]:
    """All set partitions of {1..r}, optionally restricted to a block count.

    Blocks are sorted internally, listed shortest-first (ties by least
    element), and the whole list is sorted for determinism.
    """
    if r < 1:
        raise ValueError("set partitions need r >= 1")

    results: list[SetPartition] = []

    def grow(k: int, current: list[list[int]]):
        if k > r:
            if blocks is None or len(current) == blocks:
                results.append(_canonical(current))
            return
        if blocks is not None and len(current) + (r - k + 1) < blocks:
            return
        for b in current:
            b.append(k)
            grow(k + 1, current)
            b.pop()
        if blocks is None or len(current) < blocks:
            current.append([k])
            grow(k + 1, current)
            current.pop()

    grow(1, [])
    results.sort()
    return tuple(results)


def profile_of(partition: SetPartition, r: int | None = None) -> tuple[int, ...]:
    """Profile (n_1, ..., n_r): n_i = number of blocks of size i."""
    if r is None:
        r = sum(len(b) for b in partition)
    counts = [0] * r
    for b in partition:
        counts[len(b) - 1] += 1
    return tuple(counts)


def validate_profile(profile: Sequence[int]) -> tuple[int, int]:
    """Return (r, j) for a profile; raise ProfileError if inconsistent."""
    r = 0
    j = 0
    for i, n_i in enumerate(profile, start=1):
        if n_i < 0:
            raise ProfileError("profile-mismatch: negative block count")
        r += i * n_i
        j += n_i
    if r != len(profile):
        raise ProfileError(
            f"profile-mismatch: profile {tuple(profile)} describes partitions "
            f"of {r} elements but has length {len(profile)}")
    return r, j


def profile_multiplicity(profile: Sequence[int]) -> int:
    """Number of set partitions of {1..r} with the given profile:

        m = r! / prod_i (i!)^{n_i} n_i!
    """
    r, _ = validate_profile(profile)
    denom = 1
    for i, n_i in enumerate(profile, start=1):
        denom *= math.factorial(i) ** n_i * math.factorial(n_i)
    return math.factorial(r) // denom


def partitions_with_profile(profile: Sequence[int]) -> tuple[SetPartition, ...]:
    r, _ = validate_profile(profile)
    want = tuple(profile)
    found = tuple(p for p in set_partitions(r) if profile_of(p, r) == want)
    expected = profile_multiplicity(profile)
    if len(found) != expected:
        raise ProfileError(
            f"profile-mismatch: found {len(found)} partitions, expected {expected}")
    return found


@lru_cache(maxsize=None)
def bell_number(r: int) -> int:
    return len(set_partitions(r)) if r >= 1 else 1


def _profiles(r: int, j: int) -> list[tuple[int, ...]]:
    """All profiles with sum i*n_i = r and sum n_i = j."""
    out: list[tuple[int, ...]] = []

    def rec(i: int, rem_r: int, rem_j: int, acc: list[int]):
        if i > r:
            if rem_r == 0 and rem_j == 0:
                out.append(tuple(acc))
            return
        max_n = min(rem_r // i, rem_j)
        for n in range(max_n + 1):
            acc.append(n)
            rec(i + 1, rem_r - i * n, rem_j - n, acc)
            acc.pop()

    rec(1, r, j, [])
    return out


def bell_partial(r: int, j: int) -> dict[tuple[int, ...], int]:
    """Partial exponential Bell polynomial B_{r,j} as {profile: coefficient}.

    Evaluating with x_i = value of slot i:  B_{r,j}(x_1..x_r) =
    sum over profiles of coef * prod_i x_i^{n_i}.
    """
    if r < 1 or j < 1 or j > r:
        raise ValueError("partial Bell polynomial needs 1 <= j <= r")
    return {p: profile_multiplicity(p) for p in _profiles(r, j)}


def bell_partial_eval(r: int, j: int, x: Sequence) -> object:
    """Evaluate B_{r,j}(x_1, ..., x_r); x is 1-indexed via x[i-1]."""
    if len(x) < r:
        raise ValueError(f"need {r} slot values, got {len(x)}")
    total = 0
    for profile, coef in bell_partial(r, j).items():
        term = coef
        for i, n_i in enumerate(profile, start=1):
            for _ in range(n_i):
                term = term * x[i - 1]
        total = total + term
    return total


def format_bell(poly: Mapping[tuple[int, ...], int], var: str = "x") -> str:
    pieces = []
    for profile in sorted(poly):
        coef = poly[profile]
        factors = [str(coef)] if coef != 1 else []
        for i, n_i in enumerate(profile, start=1):
            if n_i == 0:
                continue
            factors.append(f"{var}{i}" + (f"^{n_i}" if n_i > 1 else ""))
        pieces.append("*".join(factors) if factors else str(coef))
    return " + ".join(pieces) if pieces else "0"
