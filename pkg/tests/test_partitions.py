"""Set-partition and Bell-polynomial oracles.

Tags: [PAPER] printed identity transcribed from the source text;
[DERIVED] computed independently of the engine; [TRIVIAL] basic contract.
"""

import itertools
import math
from fractions import Fraction as Q

import pytest

from momenta.partitions import (ProfileError, bell_number, bell_partial,
                                bell_partial_eval, binomial,
                                falling_factorial, partitions_with_profile,
                                profile_multiplicity, profile_of,
                                set_partitions, validate_profile)

BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140]  # [DERIVED] standard sequence


def test_bell_numbers():  # [DERIVED]
    for r in range(1, 9):
        assert bell_number(r) == BELL[r]
        assert len(set_partitions(r)) == BELL[r]


def test_partitions_are_canonical_and_distinct():  # [TRIVIAL]
    for r in range(1, 7):
        parts = set_partitions(r)
        assert len(set(parts)) == len(parts)
        for p in parts:
            assert sorted(itertools.chain(*p)) == list(range(1, r + 1))
            keys = [(len(b), b) for b in p]
            assert keys == sorted(keys)  # blocks ordered by size, then content


def test_stirling_block_counts():  # [DERIVED] Stirling numbers S(r, j)
    stirling = {(4, 2): 7, (5, 2): 15, (5, 3): 25, (6, 3): 90, (7, 4): 350}
    for (r, j), count in stirling.items():
        assert len(set_partitions(r, blocks=j)) == count


def test_profile_round_trip():  # [TRIVIAL]
    for r in range(1, 7):
        for p in set_partitions(r):
            prof = profile_of(p, r)
            assert sum((i + 1) * m for i, m in enumerate(prof)) == r
            assert p in partitions_with_profile(prof)
    with pytest.raises(ProfileError):
        validate_profile((-1, 2))


def test_profile_multiplicity_matches_enumeration():  # [DERIVED]
    for r in range(1, 8):
        seen = {}
        for p in set_partitions(r):
            prof = profile_of(p, r)
            seen[prof] = seen.get(prof, 0) + 1
        for prof, count in seen.items():
            assert profile_multiplicity(prof) == count


def test_bell_partial_edge_rows():
    # [PAPER] B_r1 = s_r and B_rr = s_1^r for r <= 8
    for r in range(1, 9):
        e_r = tuple(1 if i == r - 1 else 0 for i in range(r))
        assert bell_partial(r, 1) == {e_r: 1}
        e_1r = tuple([r] + [0] * (r - 1))
        assert bell_partial(r, r) == {e_1r: 1}


def test_bell_partial_printed_cases():
    # [PAPER] B_32 = 3 s_1 s_2; B_42 = 4 s_1 s_3 + 3 s_2^2; B_43 = 6 s_1^2 s_2
    assert bell_partial(3, 2) == {(1, 1, 0): 3}
    assert bell_partial(4, 2) == {(1, 0, 1, 0): 4, (0, 2, 0, 0): 3}
    assert bell_partial(4, 3) == {(2, 1, 0, 0): 6}


def test_bell_generating_function():
    # [DERIVED] exp(j-truncated) generating-function oracle for r <= 6:
    # sum_j B_rj(s) t^j = r! [u^r] exp(t * sum_k s_k u^k / k!)
    # verified numerically at rational s and t via series arithmetic.
    s = [Q(2), Q(-1), Q(3), Q(1, 2), Q(5), Q(-2)]
    t = Q(3, 7)
    R = 6
    # inner series f(u) = t * sum s_k u^k / k!, as coefficient list
    f = [Q(0)] + [t * s[k - 1] / math.factorial(k) for k in range(1, R + 1)]
    # exp(f) truncated to degree R
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
        lhs = sum(bell_partial_eval(r, j, s) * t ** j for j in range(1, r + 1))
        assert lhs == math.factorial(r) * exp_f[r]


def test_falling_factorial_and_binomial():  # [TRIVIAL]
    assert falling_factorial(5, 3) == 60
    assert falling_factorial(Q(7, 2), 2) == Q(35, 4)
    assert falling_factorial(4, 0) == 1
    assert binomial(6, 2) == 15
