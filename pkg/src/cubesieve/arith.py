"""Exact integer and modular arithmetic kernel.

Primality, factorization, Jacobi symbols, squarefree splitting, and a
representation for signed prime-power products whose exponents are affine
functions of the working prime exponent p.  Everything here is pure and
safe to call from worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, NamedTuple

import numpy as np

# Deterministic Miller-Rabin witness set, complete for all n < 3.3e24
# (covers every 64-bit input).
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


def is_prime(n: int) -> bool:
    """Deterministic primality test; exact for all 64-bit inputs."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = (d & -d).bit_length() - 1
    d >>= s
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primes_up_to(limit: int) -> list[int]:
    """All primes <= limit, by an Eratosthenes sieve."""
    if limit < 2:
        return []
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return [int(p) for p in np.nonzero(sieve)[0]]


# Smallest-prime-factor table, grown on demand.  Covers every r and d = 2r
# the pipeline factors; Pollard rho handles anything larger.
_DEFAULT_SPF_LIMIT = 2_000_001
_spf: np.ndarray | None = None


def spf_table(limit: int = _DEFAULT_SPF_LIMIT) -> np.ndarray:
    """Smallest prime factor of every n <= limit (spf[0] = spf[1] = 1)."""
    global _spf
    if _spf is None or len(_spf) <= limit:
        spf = np.zeros(limit + 1, dtype=np.int32)
        for i in range(2, math.isqrt(limit) + 1):
            if spf[i] == 0:
                sl = spf[i * i :: i]
                sl[sl == 0] = i
        rest = np.nonzero(spf == 0)[0]
        spf[rest] = rest
        spf[0] = spf[1] = 1
        _spf = spf
    return _spf


def _pollard_rho(n: int) -> int:
    """A nontrivial factor of composite n (Brent's cycle variant)."""
    if n % 2 == 0:
        return 2
    for c in range(1, 100):
        x = y = 2
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
    raise ArithmeticError(f"rho failed on {n}")


def factorize(n: int) -> dict[int, int]:
    """Prime factorization {prime: exponent} of n >= 1."""
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    out: dict[int, int] = {}
    if n == 1:
        return out
    spf = spf_table()
    if n < len(spf):
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = e
        return out
    for p in _SMALL_PRIMES:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if m < len(spf):
            for p, e in factorize(m).items():
                out[p] = out.get(p, 0) + e
            continue
        if is_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        d = _pollard_rho(m)
        stack.append(d)
        stack.append(m // d)
    return out


def radical(n: int) -> int:
    """Product of the distinct primes dividing n."""
    return reduce(lambda a, p: a * p, factorize(n), 1)


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive n; Legendre symbol for prime n."""
    if n <= 0 or n % 2 == 0:
        raise ValueError("jacobi requires odd positive n")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def is_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


def nth_root_floor(n: int, k: int) -> int:
    """Largest integer r with r**k <= n.  Negative n requires odd k."""
    if k <= 0:
        raise ValueError("k must be positive")
    if n < 0:
        if k % 2 == 0:
            raise ValueError("even root of negative number")
        m = nth_root_floor(-n, k)
        return -m if m**k == -n else -(m + 1)
    if n == 0:
        return 0
    if k == 1:
        return n
    if k == 2:
        return math.isqrt(n)
    r = int(round(n ** (1.0 / k)))
    while r > 0 and r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def nth_root_exact(n: int, k: int) -> int | None:
    """The integer r with r**k == n, or None."""
    if n < 0 and k % 2 == 0:
        return None
    r = nth_root_floor(n, k)
    return r if r**k == n else None


class SquarefreeSplit(NamedTuple):
    """n = c * d**2 with c squarefree."""

    c: int
    d: int


def squarefree_decompose(n: int) -> SquarefreeSplit:
    """Split n >= 1 as c * d**2 with c squarefree."""
    if n < 1:
        raise ValueError("squarefree_decompose requires n >= 1")
    c = d = 1
    for p, e in factorize(n).items():
        if e % 2:
            c *= p
        d *= p ** (e // 2)
    return SquarefreeSplit(c, d)


@dataclass(frozen=True)
class FactoredInteger:
    """sign * prod(base ** (alpha*p + beta)) over distinct prime bases.

    Exponents stay symbolic in the prime exponent p, so coefficients like
    3**(2p-4) are never materialized for large p; they are only evaluated
    modulo small auxiliary primes.
    """

    sign: int = 1
    factors: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        bases = [b for b, _, _ in self.factors]
        if bases != sorted(bases) or len(set(bases)) != len(bases):
            raise ValueError("bases must be distinct and increasing")
        for b, alpha, beta in self.factors:
            if not is_prime(b):
                raise ValueError(f"base {b} is not prime")
            # exponents must be >= 0 for every admissible exponent p >= 5
            if alpha * 5 + beta < 0 or alpha < 0:
                raise ValueError(f"exponent {alpha}*p+{beta} negative at p=5")

    @staticmethod
    def one() -> "FactoredInteger":
        return FactoredInteger()

    @staticmethod
    def from_int(n: int) -> "FactoredInteger":
        if n == 0:
            raise ValueError("zero has no factored form")
        sign = 1 if n > 0 else -1
        fac = tuple((p, 0, e) for p, e in sorted(factorize(abs(n)).items()))
        return FactoredInteger(sign, fac)

    @staticmethod
    def affine_power(base: int, alpha: int, beta: int) -> "FactoredInteger":
        """base ** (alpha*p + beta) for a positive integer base."""
        if base < 1:
            raise ValueError("base must be positive")
        if base == 1:
            return FactoredInteger()
        fac = tuple(
            (q, alpha * e, beta * e) for q, e in sorted(factorize(base).items())
        )
        return FactoredInteger(1, fac)

    def times(self, other: "FactoredInteger") -> "FactoredInteger":
        exps: dict[int, tuple[int, int]] = {b: (a, c) for b, a, c in self.factors}
        for b, a, c in other.factors:
            a0, c0 = exps.get(b, (0, 0))
            exps[b] = (a0 + a, c0 + c)
        fac = tuple(
            (b, a, c) for b, (a, c) in sorted(exps.items()) if (a, c) != (0, 0)
        )
        return FactoredInteger(self.sign * other.sign, fac)

    def divide_prime(self, q: int) -> "FactoredInteger":
        """Divide once by the prime q (q must divide every evaluation)."""
        fac = []
        seen = False
        for b, a, c in self.factors:
            if b == q:
                seen = True
                if (a, c - 1) != (0, 0):
                    fac.append((b, a, c - 1))
            else:
                fac.append((b, a, c))
        if not seen:
            raise ValueError(f"{q} does not divide")
        return FactoredInteger(self.sign, tuple(fac))

    def support(self) -> tuple[int, ...]:
        return tuple(b for b, _, _ in self.factors)

    def exponent_at(self, base: int, p: int) -> int:
        for b, a, c in self.factors:
            if b == base:
                return a * p + c
        return 0

    def exponent_affine(self, base: int) -> tuple[int, int]:
        for b, a, c in self.factors:
            if b == base:
                return a, c
        return 0, 0

    def is_unit(self) -> bool:
        return not self.factors

    def value(self, p: int) -> int:
        out = self.sign
        for b, a, c in self.factors:
            e = a * p + c
            if e < 0:
                raise ValueError(f"negative exponent at p={p}")
            out *= b**e
        return out

    def sqrt_half(self) -> "FactoredInteger":
        """Halve every exponent (requires even alpha and beta, sign +1)."""
        if self.sign != 1:
            raise ValueError("cannot halve a negative product")
        fac = []
        for b, a, c in self.factors:
            if a % 2 or c % 2:
                raise ValueError(f"odd exponent pattern for base {b}")
            fac.append((b, a // 2, c // 2))
        return FactoredInteger(1, tuple(fac))

    def eval_mod(self, p: int, q: int) -> int:
        """(sign * prod base**(alpha*p+beta)) mod q for prime q."""
        out = self.sign % q
        for b, a, c in self.factors:
            e = a * p + c
            if e < 0:
                raise ValueError(f"negative exponent at p={p}")
            if b % q == 0:
                if e > 0:
                    return 0
                continue
            out = out * pow(b, e % (q - 1) if q > 2 else e % 1, q) % q
        return out


def factored_eval_mod(f: FactoredInteger, p: int, q: int) -> int:
    """Evaluate a factored coefficient at exponent p, reduced mod prime q."""
    return f.eval_mod(p, q)


def as_factored(x: "int | FactoredInteger") -> FactoredInteger:
    if isinstance(x, FactoredInteger):
        return x
    return FactoredInteger.from_int(x)


def prod(xs: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b, xs, 1)
