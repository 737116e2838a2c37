import math
import random

import pytest

from cubesieve.arith import (
    FactoredInteger,
    factored_eval_mod,
    factorize,
    is_prime,
    is_square,
    jacobi,
    nth_root_exact,
    nth_root_floor,
    primes_up_to,
    squarefree_decompose,
)


def trial_division_is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in range(2, math.isqrt(n) + 1):
        if n % d == 0:
            return False
    return True


def test_is_prime_small_examples():
    assert is_prime(2)
    assert not is_prime(2401)  # 7**4
    assert is_prime(142861) == trial_division_is_prime(142861)


def test_is_prime_agrees_with_trial_division():
    for n in range(2000):
        assert is_prime(n) == trial_division_is_prime(n), n


def test_is_prime_strong_pseudoprimes():
    # classic strong pseudoprimes to small bases
    for n in (3215031751, 3825123056546413051, 341550071728321):
        assert not is_prime(n)
    assert is_prime(2**61 - 1)
    assert not is_prime(2**64 - 1)


def test_factorize_examples():
    assert factorize(1) == {}
    assert factorize(2401) == {7: 4}
    assert factorize(10**6) == {2: 6, 5: 6}


def test_factorize_roundtrip_dense_and_random():
    for n in range(1, 20001):
        prod = 1
        for p, e in factorize(n).items():
            assert is_prime(p)
            prod *= p**e
        assert prod == n
    rng = random.Random(1)
    for _ in range(200):
        n = rng.randrange(1, 10**6)
        assert math.prod(p**e for p, e in factorize(n).items()) == n
    for _ in range(200):
        n = rng.randrange(1, 2**63)
        fac = factorize(n)
        assert math.prod(p**e for p, e in fac.items()) == n
        assert all(is_prime(p) for p in fac)


def test_jacobi_examples():
    # oracle: enumerate squares mod 23 and mod 7
    squares23 = {x * x % 23 for x in range(23)}
    assert (-5) % 23 in squares23
    assert jacobi(-5, 23) == 1
    squares7 = {x * x % 7 for x in range(7)}
    assert (-5) % 7 in squares7
    assert jacobi(-5, 7) == 1
    assert jacobi(-5, 5) == 0


def test_jacobi_euler_criterion():
    rng = random.Random(2)
    odd_primes = [p for p in primes_up_to(10**4) if p > 2]
    for _ in range(10**4):
        q = rng.choice(odd_primes)
        a = rng.randrange(1, q)
        expected = pow(a, (q - 1) // 2, q)
        expected = -1 if expected == q - 1 else expected
        assert jacobi(a, q) == expected


def test_jacobi_multiplicative():
    rng = random.Random(3)
    for _ in range(2000):
        n = rng.randrange(1, 10**6) * 2 + 1
        a = rng.randrange(-(10**6), 10**6)
        b = rng.randrange(-(10**6), 10**6)
        assert jacobi(a * b, n) == jacobi(a, n) * jacobi(b, n)


def test_jacobi_rejects_even_modulus():
    with pytest.raises(ValueError):
        jacobi(3, 10)


def test_squarefree_decompose_examples():
    assert squarefree_decompose(20) == (5, 2)
    assert squarefree_decompose(180) == (5, 6)
    assert squarefree_decompose(1) == (1, 1)


def test_squarefree_decompose_property():
    for n in range(1, 10**5 + 1):
        c, d = squarefree_decompose(n)
        assert c * d * d == n
        for p, e in factorize(c).items():
            assert e == 1


def test_nth_root():
    assert nth_root_floor(3124, 5) == 4
    assert nth_root_floor(3125, 5) == 5
    assert nth_root_floor(-3125, 5) == -5
    assert nth_root_floor(-3126, 5) == -6
    assert nth_root_exact(3125, 5) == 5
    assert nth_root_exact(3126, 5) is None
    assert is_square(16) and not is_square(15) and not is_square(-4)


def test_factored_eval_examples():
    f = FactoredInteger.affine_power(3, 2, -4)  # 3**(2p-4)
    assert factored_eval_mod(f, 11, 7) == 1  # 3**18 mod 7 (Fermat)
    assert factored_eval_mod(f, 11, 3) == 0
    g = FactoredInteger.affine_power(2, 1, -2).times(
        FactoredInteger.affine_power(5, 1, -1)
    )
    assert factored_eval_mod(g, 5, 3) == (2**3 * 5**4) % 3 == 2


def test_factored_eval_matches_naive():
    rng = random.Random(4)
    small_qs = [q for q in primes_up_to(1000) if q >= 2]
    for _ in range(500):
        alpha3, beta3 = rng.choice([(2, -4), (1, -2), (0, 3)])
        f = FactoredInteger.affine_power(3, alpha3, beta3).times(
            FactoredInteger.affine_power(2, 1, -1)
        )
        p = rng.choice([5, 7, 11, 13])
        q = rng.choice(small_qs)
        naive = f.value(p) % q
        assert factored_eval_mod(f, p, q) == naive


def test_factored_integer_algebra():
    f = FactoredInteger.from_int(-2000)
    assert f.sign == -1
    assert f.value(7) == -2000
    g = FactoredInteger.affine_power(6, 2, -1)  # (2*3)**(2p-1)
    assert g.exponent_affine(2) == (2, -1)
    assert g.exponent_affine(3) == (2, -1)
    assert g.value(5) == 6**9
    h = FactoredInteger.affine_power(5, 2, -2)
    assert h.sqrt_half().value(7) == 5**6
    with pytest.raises(ValueError):
        FactoredInteger.affine_power(5, 2, -3).sqrt_half()
    assert FactoredInteger.from_int(12).divide_prime(2).value(5) == 6
    with pytest.raises(ValueError):
        FactoredInteger.affine_power(2, 0, 1).divide_prime(3)


def test_factored_integer_rejects_bad_input():
    with pytest.raises(ValueError):
        FactoredInteger(1, ((4, 0, 1),))  # base not prime
    with pytest.raises(ValueError):
        FactoredInteger(1, ((3, 0, 2), (2, 0, 1)))  # unsorted
    with pytest.raises(ValueError):
        FactoredInteger(1, ((2, 1, -6),))  # negative at p=5
