"""Shared fixtures: small rational discrete distributions used as exact
oracles throughout the suite."""

from fractions import Fraction as Q

import pytest

from momenta.dists import DiscreteDist


@pytest.fixture(scope="session")
def dist_a() -> DiscreteDist:
    """Asymmetric 3-atom distribution with nonzero mean."""
    return DiscreteDist.from_pairs([(Q(1), Q(1, 2)), (Q(2), Q(1, 4)),
                                    (Q(4), Q(1, 4))])


@pytest.fixture(scope="session")
def dist_b() -> DiscreteDist:
    """Second 3-atom distribution (mixed-sign support)."""
    return DiscreteDist.from_pairs([(Q(-1), Q(1, 3)), (Q(2), Q(1, 2)),
                                    (Q(4), Q(1, 6))])


@pytest.fixture(scope="session")
def dist_sym() -> DiscreteDist:
    """Symmetric 3-atom distribution (all odd central moments vanish)."""
    return DiscreteDist.from_pairs([(Q(-2), Q(1, 4)), (Q(0), Q(1, 2)),
                                    (Q(2), Q(1, 4))])
