import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from catmads.domain import (
    Domain, DomainError, Evaluation, Point, VariableSpec, aggregate_violation, decode_point,
    domain_from_dict, domain_to_dict, encode_point, enumerate_components, hamming, validate,
)
from conftest import random_domain
from catmads.solver.doe import random_points


def test_variable_checks():
    with pytest.raises(DomainError):
        VariableSpec.categorical(1)
    with pytest.raises(DomainError):
        VariableSpec.integer(3, 1)
    with pytest.raises(DomainError):
        VariableSpec.continuous(0, math.inf)
    with pytest.raises(DomainError):
        VariableSpec.categorical(2, labels=("a", "a"))
    with pytest.raises(DomainError):
        Domain(())


def test_partition_and_sizes(mixed_domain):
    d = mixed_domain
    assert (d.n_cat, d.n_int, d.n_con, d.n_qnt, d.n) == (2, 1, 1, 2, 4)
    assert d.n_categories == (3, 2)
    assert d.cat_size == 6
    assert d.is_integer_qnt.tolist() == [True, False]


def test_point_from_flat_uses_declaration_order():
    d = Domain((VariableSpec.continuous(0, 1), VariableSpec.categorical(2), VariableSpec.integer(0, 3)))
    p = d.point_from_flat([0.5, 1, 2])
    assert p == Point((1,), (2,), (0.5,))
    assert p.qnt == (2.0, 0.5)


def test_validate(mixed_domain):
    assert validate(mixed_domain, Point((2, 1), (10,), (1.0,)))
    assert not validate(mixed_domain, Point((3, 1), (10,), (1.0,)))
    assert not validate(mixed_domain, Point((0, 1), (11,), (1.0,)))
    assert not validate(mixed_domain, Point((0, 1), (1,), (math.nan,)))
    assert not validate(mixed_domain, Point((0,), (1,), (0.0,)))


def test_aggregate_violation_example():
    # 0 + 0.5^2 + 2^2 = 4.25
    assert aggregate_violation([-1.0, 0.5, 2.0]) == pytest.approx(4.25, abs=0, rel=1e-15)
    assert aggregate_violation([]) == 0.0
    assert aggregate_violation([-3.0, 0.0]) == 0.0
    assert aggregate_violation([0.1, math.inf]) == math.inf
    assert aggregate_violation([math.nan]) == math.inf


def test_evaluation_failure_modes():
    assert Evaluation.from_values(1.0, (-1.0,)).feasible
    assert Evaluation.from_values(math.nan, (0.0,)).failed
    assert Evaluation.from_values(math.inf, ()).failed
    ev = Evaluation.failure(2)
    assert ev.h == math.inf and ev.g == (math.inf, math.inf) and not ev.feasible


def test_enumerate_full(mixed_domain):
    comps = enumerate_components(mixed_domain)
    assert comps == list(itertools.product(range(3), range(2)))


def test_enumerate_capped():
    d = Domain(tuple(VariableSpec.categorical(5) for _ in range(4)))  # 625 components
    inc = (1, 2, 3, 4)
    comps = enumerate_components(d, cap=30, incumbent=inc, rng=0)
    assert len(comps) == 30 == len(set(comps))
    assert comps[0] == inc
    # all 16 Hamming-one neighbours come right after the incumbent
    assert all(hamming(c, inc) == 1 for c in comps[1:17])
    with pytest.raises(ValueError):
        enumerate_components(d, cap=30)


@given(st.integers(0, 2 ** 32 - 1))
def test_encoding_round_trip(seed):
    rng = np.random.default_rng(seed)
    d = random_domain(rng)
    for p in random_points(d, 5, rng):
        q = decode_point(d, encode_point(p))
        assert q == p  # 17 significant digits round-trip doubles exactly


def test_decode_errors(mixed_domain):
    with pytest.raises(DomainError):
        decode_point(mixed_domain, "1 0 3")
    with pytest.raises(DomainError):
        decode_point(mixed_domain, "1 0 x 0.5")


def test_domain_dict_round_trip(mixed_domain):
    assert domain_from_dict(domain_to_dict(mixed_domain)) == mixed_domain
