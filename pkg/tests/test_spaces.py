"""Weighted-support algebra: products, powers, hulls, serialization."""

import json
import math

import numpy as np
import pytest

from kernel_roots.errors import ValidationError
from kernel_roots.spaces import (
    aronszajn_product,
    kostlan_space,
    make_space,
    power,
    space_from_dict,
    space_to_dict,
    support_hull,
)


def brute_product_terms(left, right):
    """Independent convolution of squared coefficients, exact for int inputs."""
    acc = {}
    for e1, c1 in left.terms:
        for e2, c2 in right.terms:
            e = tuple(a + b for a, b in zip(e1, e2))
            acc[e] = acc.get(e, 0) + c1 * c2
    return dict(acc)


def random_int_space(rng, n, max_terms=5):
    m = int(rng.integers(1, max_terms + 1))
    terms = {}
    while len(terms) < m:
        e = tuple(int(c) for c in rng.integers(-3, 5, size=n))
        terms[e] = int(rng.integers(1, 6))
    return make_space(n, terms)


# -- construction and validation ----------------------------------------------


def test_terms_sorted_and_canonical():
    s = make_space(1, [((2,), 3.0), ((0,), 1.0), ((1,), 2.0)])
    assert [e for e, _ in s.terms] == [(0,), (1,), (2,)]
    assert s == make_space(1, {(0,): 1.0, (1,): 2.0, (2,): 3.0})


def test_dict_and_pair_input_agree():
    a = make_space(2, {(0, 0): 1, (1, 2): 0.5})
    b = make_space(2, [((0, 0), 1), ((1, 2), 0.5)])
    assert a == b


def test_negative_exponents_allowed():
    s = make_space(1, {(-2,): 1.0, (3,): 2.0})
    assert s.exponents.min() == -2


@pytest.mark.parametrize(
    "n,terms",
    [
        (1, [((0,), 0.0)]),  # zero coefficient
        (1, [((0,), -1.0)]),  # negative coefficient
        (1, [((0,), float("nan"))]),
        (1, [((0,), True)]),  # bool masquerading as a number
        (1, [((0,), "1")]),
        (1, [((0.5,), 1.0)]),  # fractional exponent
        (2, [((0,), 1.0)]),  # wrong exponent length
        (1, []),  # no terms
    ],
)
def test_make_space_rejects_bad_input(n, terms):
    with pytest.raises(ValidationError):
        make_space(n, terms)


def test_duplicate_exponent_rejected():
    with pytest.raises(ValidationError):
        make_space(1, [((0,), 1.0), ((0,), 2.0)])


def test_bad_dimension_rejected():
    for n in (0, -1, 1.0, True):
        with pytest.raises(ValidationError):
            make_space(n, {(0,): 1.0})


def test_numpy_integer_exponents_accepted():
    e = tuple(np.int64(v) for v in (1, 2))
    s = make_space(2, {e: 1.0})
    assert s.terms[0][0] == (1, 2)


def test_kostlan_space_terms():
    k2 = kostlan_space(2)
    assert [e for e, _ in k2.terms] == [(0, 0), (0, 1), (1, 0)]
    assert all(c == 1 for _, c in k2.terms)


# -- product algebra -----------------------------------------------------------


def test_product_matches_brute_convolution_exactly():
    rng = np.random.default_rng(42)
    for n in (1, 2, 3):
        for _ in range(25):
            a = random_int_space(rng, n)
            b = random_int_space(rng, n)
            got = dict(aronszajn_product(a, b).terms)
            assert got == brute_product_terms(a, b)


def test_product_commutes_and_associates():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a, b, c = (random_int_space(rng, 2) for _ in range(3))
        assert aronszajn_product(a, b) == aronszajn_product(b, a)
        lhs = aronszajn_product(aronszajn_product(a, b), c)
        rhs = aronszajn_product(a, aronszajn_product(b, c))
        assert lhs == rhs


def test_product_dimension_mismatch():
    with pytest.raises(ValidationError):
        aronszajn_product(kostlan_space(1), kostlan_space(2))


def test_power_of_two_term_space_gives_binomials():
    s = make_space(1, {(0,): 1, (1,): 1})
    for d in range(1, 9):
        p = power(s, d)
        assert [e for e, _ in p.terms] == [(a,) for a in range(d + 1)]
        assert [c for _, c in p.terms] == [math.comb(d, a) for a in range(d + 1)]


def test_power_one_is_identity():
    s = make_space(2, {(0, 0): 1.5, (2, 1): 0.25})
    assert power(s, 1) == s


def test_power_validates_degree():
    s = kostlan_space(1)
    for d in (0, -2, 1.5, True):
        with pytest.raises(ValidationError):
            power(s, d)


def test_total_mass_multiplicative():
    # sum of squared coefficients is K(0,0); products multiply it
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(1, 4))
        a = random_int_space(rng, n)
        b = random_int_space(rng, n)
        mass = lambda s: sum(c for _, c in s.terms)
        prod = aronszajn_product(a, b)
        assert mass(prod) == pytest.approx(mass(a) * mass(b), rel=1e-12)


def test_float_coefficients_convolve_within_roundoff():
    rng = np.random.default_rng(3)
    a = make_space(1, {(i,): float(c) for i, c in enumerate(rng.uniform(0.1, 2.0, 4))})
    b = make_space(1, {(i,): float(c) for i, c in enumerate(rng.uniform(0.1, 2.0, 3))})
    got = dict(aronszajn_product(a, b).terms)
    ref = brute_product_terms(a, b)
    assert got.keys() == ref.keys()
    for e in ref:
        assert got[e] == pytest.approx(ref[e], rel=1e-12)


# -- support hulls ---------------------------------------------------------------


def test_support_hull_of_power_is_dilated_hull():
    rng = np.random.default_rng(23)
    for n in (1, 2, 3):
        for _ in range(12):
            s = random_int_space(rng, n)
            base = support_hull(s)
            for d in (2, 3):
                assert support_hull(power(s, d)) == base.scaled(d)


def test_support_hull_drops_interior_exponents():
    s = make_space(2, {(0, 0): 1, (2, 0): 1, (0, 2): 1, (1, 1): 5, (2, 2): 1})
    assert sorted(support_hull(s).hull_vertices) == [(0, 0), (0, 2), (2, 0), (2, 2)]


# -- serialization ----------------------------------------------------------------


def test_dict_round_trip_identity():
    rng = np.random.default_rng(31)
    for n in (1, 2, 3):
        s = random_int_space(rng, n)
        assert space_from_dict(space_to_dict(s)) == s


def test_to_dict_is_json_serializable_and_sorted():
    s = make_space(2, {(1, 0): 2.0, (0, 0): 1.0})
    doc = space_to_dict(s)
    json.dumps(doc)
    assert [t["e"] for t in doc["terms"]] == [[0, 0], [1, 0]]


@pytest.mark.parametrize(
    "doc",
    [
        "not a dict",
        {},
        {"n": 1},
        {"terms": []},
        {"n": 1, "terms": "nope"},
        {"n": 1, "terms": [{"e": [0]}]},
        {"n": 1, "terms": [{"e": [0], "c2": 1.0}, {"e": [0], "c2": 2.0}]},
        {"n": 2, "terms": [{"e": [0], "c2": 1.0}]},
        {"n": 1, "terms": [{"e": [0], "c2": -1.0}]},
        {"n": 1, "terms": [{"e": [0.5], "c2": 1.0}]},
    ],
)
def test_from_dict_rejects_malformed_documents(doc):
    with pytest.raises(ValidationError):
        space_from_dict(doc)
