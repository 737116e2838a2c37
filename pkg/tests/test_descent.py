import math
import random

import pytest

from cubesieve.arith import FactoredInteger, factored_eval_mod, primes_up_to
from cubesieve.descent import (
    CASES,
    EXPONENT_BOUNDS,
    admissible_r,
    classify_x,
    get_case,
    instantiate_ternary,
    mignotte_bound,
    mignotte_normalization,
)

REFERENCE_BOUNDS = {1: 46914, 2: 98461, 3: 91314, 4: 142861,
                    5: 34286, 6: 78880, 7: 27047, 8: 23457}


def test_classify_examples():
    assert classify_x(36) == 3
    assert classify_x(9) == 1
    assert classify_x(2) == 12


def test_classify_partitions():
    rng = random.Random(10)
    seen = set()
    for _ in range(10**5):
        x = rng.randrange(-(10**9), 10**9)
        if x == 0:
            continue
        matches = [
            c.case_id
            for c in CASES
            if c.div3 == (x % 3 == 0)
            and c.div5 == (x % 5 == 0)
            and c.two_class
            == ("odd" if x % 2 else "quad" if x % 4 == 0 else "double")
        ]
        assert len(matches) == 1
        assert classify_x(x) == matches[0]
        seen.add(matches[0])
    assert seen == set(range(1, 13))
    with pytest.raises(ValueError):
        classify_x(0)


def test_admissible_examples():
    assert not admissible_r(1, 3)
    assert admissible_r(4, 7)
    assert not admissible_r(8, 3)
    assert admissible_r(1, 10)  # 2 and 5 may divide r in case 1
    assert not admissible_r(3, 2)


def test_forbidden_sets():
    expected = {1: {3}, 2: {3, 5}, 3: {2, 3}, 4: {2, 3, 5},
                5: {3, 5}, 6: {2, 3, 5}, 7: {2, 3}, 8: {3}}
    for cid, forb in expected.items():
        assert set(get_case(cid).r_forbidden) == forb


def test_mod3_constraint_is_forced_for_cases_5_to_8():
    # x^2 + 20 r^2 = 3^(p-2) * u * w2^p with 3 coprime to x needs
    # x^2 + 20 r^2 divisible by 3, impossible when 3 | r.
    for x in range(1, 200):
        if x % 3 == 0:
            continue
        for r in range(3, 200, 3):
            assert (x * x + 20 * r * r) % 3 != 0


def test_instantiate_examples():
    eq = instantiate_ternary(1, 11, 23)
    assert eq.a.value(11) == 1
    assert eq.b.value(11) == 3**18
    assert eq.c_rhs == 20 * 23**2
    eq8 = instantiate_ternary(8, 7, 1)
    assert eq8.a.value(7) == 3**5
    assert eq8.b.value(7) == 1
    assert eq8.c_rhs == 20
    with pytest.raises(ValueError):
        instantiate_ternary(9, 7, 1)
    with pytest.raises(ValueError):
        instantiate_ternary(1, 11, 3)  # inadmissible r
    with pytest.raises(ValueError):
        instantiate_ternary(1, 4, 1)  # p not prime


def test_case_table_consistency():
    # x * (x^2 + 20 r^2) = 3^(p-2) * (3w)^p forces
    # x_coeff * x2_coeff = 3^(p-2) * k^p for an integer k.
    for case in CASES:
        for p in (5, 7, 11):
            prod = case.x_coeff.value(p) * case.x2_coeff.value(p)
            assert prod % 3 ** (p - 2) == 0
            k_p = prod // 3 ** (p - 2)
            k = round(k_p ** (1.0 / p))
            assert k**p == k_p, (case.case_id, p)


def test_ternary_follows_from_descent():
    # B*w2^p - A^2*w1^(2p) = 20 r^2 divided by its content must match the
    # stored ternary coefficients.  Only cases 1-8 ever instantiate a
    # ternary equation; case 12's printed right side does not agree with
    # this derivation (it would be 10 r^2) but is never used.
    for case in CASES[:8]:
        for p in (5, 11):
            big_a = case.x_coeff.value(p)
            big_b = case.x2_coeff.value(p)
            g = math.gcd(big_b, math.gcd(big_a * big_a, 20))
            assert big_b // g == case.w2_coeff.value(p)
            assert big_a * big_a // g == case.w1_coeff.value(p)
            assert 20 // g == case.rhs_coeff


def test_rhs_coefficients():
    assert [c.rhs_coeff for c in CASES] == [20, 4, 5, 1, 4, 1, 5, 20, 10, 2, 2, 2]


def test_coefficient_eval_agreement():
    rng = random.Random(11)
    qs = [q for q in primes_up_to(10**4) if q > 2]
    for case in CASES:
        for _ in range(100):
            p = rng.choice([5, 7, 11, 13, 101, 1009])
            q = rng.choice(qs)
            for coeff in (case.w2_coeff, case.w1_coeff):
                direct = 1
                for base, alpha, beta in coeff.factors:
                    direct = direct * pow(base, alpha * p + beta, q) % q
                assert factored_eval_mod(coeff, p, q) == direct


def test_mignotte_normalizations():
    assert mignotte_normalization(1) == (81, 1, 20 * 81)
    assert mignotte_normalization(5) == (125, 9, 4 * 1125)
    assert mignotte_normalization(8) == (1, 9, 180)


def test_mignotte_bounds_match_reference():
    for cid, ref in REFERENCE_BOUNDS.items():
        got = mignotte_bound(cid, 10**6)
        assert abs(got - ref) <= 5, (cid, got, ref)
        assert EXPONENT_BOUNDS[cid] == ref


def test_mignotte_monotone_in_rmax():
    for cid in range(1, 9):
        values = [mignotte_bound(cid, rmax) for rmax in (10, 10**3, 10**6, 10**9)]
        assert values == sorted(values)


def test_cases_9_to_12_bound_two():
    for cid in (9, 10, 11, 12):
        assert EXPONENT_BOUNDS[cid] == 2
        with pytest.raises(ValueError):
            mignotte_normalization(cid)
