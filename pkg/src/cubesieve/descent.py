"""The twelve descent cases and the linear-forms-in-logarithms exponent bound.

Splitting 9x(x^2+20r^2) = y^p by the 3-, 2- and 5-divisibility of x gives
twelve coprime factorizations x = A*w1^p, x^2+20r^2 = B*w2^p, each of which
collapses to a ternary equation a*w2^p - b*w1^(2p) = c*r^2.  Eight of the
cases admit exponents p >= 5; the other four force p = 2 by a parity
argument and generate no work here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .arith import FactoredInteger, is_prime

_ONE = FactoredInteger.one()


def _fp(spec: tuple[tuple[int, int, int], ...]) -> FactoredInteger:
    out = _ONE
    for base, alpha, beta in spec:
        out = out.times(FactoredInteger.affine_power(base, alpha, beta))
    return out


@dataclass(frozen=True)
class PatelData:
    """Change of variables x = scale*X turning the second descent equation
    into C1*X^2 + C2_coeff*r^2 = w2^p with C1 squarefree."""

    c1: int
    c2_coeff: int
    x_scale: int
    d_is_2r: bool  # C1*C2 = 5*d^2 with d = 2r (True) or d = r (False)


@dataclass(frozen=True)
class DescentCase:
    case_id: int
    div3: bool  # 3 | x
    two_class: str  # "odd", "double" (2||x) or "quad" (4|x)
    div5: bool  # 5 | x
    x_coeff: FactoredInteger  # x = x_coeff * w1^p
    x2_coeff: FactoredInteger  # x^2 + 20 r^2 = x2_coeff * w2^p
    w2_coeff: FactoredInteger  # a, coefficient of w2^p in the ternary equation
    w1_coeff: FactoredInteger  # b, coefficient of w1^(2p)
    rhs_coeff: int  # c, multiplier of r^2
    r_forbidden: frozenset[int]
    exponent_bound: int  # reference upper bound for p
    patel: PatelData | None


def _case(
    cid: int,
    div3: bool,
    two: str,
    div5: bool,
    x_coeff: tuple,
    x2_coeff: tuple,
    a: tuple,
    b: tuple,
    c: int,
    forbidden: tuple[int, ...],
    bound: int,
    patel: PatelData | None = None,
) -> DescentCase:
    return DescentCase(
        cid, div3, two, div5, _fp(x_coeff), _fp(x2_coeff), _fp(a), _fp(b),
        c, frozenset(forbidden), bound, patel,
    )


# Columns: x-coefficient of w1^p | coefficient of w2^p in x^2+20r^2 |
# ternary a | ternary b | ternary c | primes that cannot divide r |
# exponent bound.  For the cases with 3 coprime to x, reducing
# x^2 + 20r^2 = 3^(p-2)*u*w2^p modulo 3 forces 3 to be coprime to r as
# well, so 3 joins the forbidden set there too.
CASES: tuple[DescentCase, ...] = (
    _case(1, True, "odd", False,
          ((3, 1, -2),), (), (), ((3, 2, -4),), 20, (3,), 46914,
          PatelData(1, 20, 1, True)),
    _case(2, True, "odd", True,
          ((3, 1, -2), (5, 1, -1)), ((5, 0, 1),), (), ((3, 2, -4), (5, 2, -3)),
          4, (3, 5), 98461, PatelData(5, 4, 5, True)),
    _case(3, True, "quad", False,
          ((2, 1, -2), (3, 1, -2)), ((2, 0, 2),), (), ((2, 2, -6), (3, 2, -4)),
          5, (2, 3), 91314, PatelData(1, 5, 2, False)),
    _case(4, True, "quad", True,
          ((2, 1, -2), (3, 1, -2), (5, 1, -1)), ((2, 0, 2), (5, 0, 1)), (),
          ((2, 2, -6), (3, 2, -4), (5, 2, -3)), 1, (2, 3, 5), 142861,
          PatelData(5, 1, 10, False)),
    _case(5, False, "odd", True,
          ((5, 1, -1),), ((3, 1, -2), (5, 0, 1)), ((3, 1, -2),), ((5, 2, -3),),
          4, (3, 5), 34286),
    _case(6, False, "quad", True,
          ((2, 1, -2), (5, 1, -1)), ((2, 0, 2), (3, 1, -2), (5, 0, 1)),
          ((3, 1, -2),), ((2, 2, -6), (5, 2, -3)), 1, (2, 3, 5), 78880),
    _case(7, False, "quad", False,
          ((2, 1, -2),), ((2, 0, 2), (3, 1, -2)), ((3, 1, -2),), ((2, 2, -6),),
          5, (2, 3), 27047),
    _case(8, False, "odd", False,
          (), ((3, 1, -2),), ((3, 1, -2),), (), 20, (3,), 23457),
    _case(9, True, "double", False,
          ((2, 1, -1), (3, 1, -2)), ((2, 0, 1),), (), ((2, 2, -3), (3, 2, -4)),
          10, (2, 3), 2),
    _case(10, True, "double", True,
          ((2, 1, -1), (3, 1, -2), (5, 1, -1)), ((2, 0, 1), (5, 0, 1)), (),
          ((2, 2, -3), (3, 2, -4), (5, 2, -3)), 2, (2, 3, 5), 2),
    _case(11, False, "double", True,
          ((2, 1, -1), (5, 1, -1)), ((2, 0, 1), (3, 1, -2), (5, 0, 1)),
          ((3, 1, -2),), ((2, 2, -3), (5, 2, -3)), 2, (2, 3, 5), 2),
    _case(12, False, "double", False,
          ((2, 1, -1),), ((2, 0, 1), (3, 1, -2)), ((3, 1, -2),), ((2, 2, -3),),
          2, (2, 3), 2),
)

EXPONENT_BOUNDS: dict[int, int] = {c.case_id: c.exponent_bound for c in CASES}

SIEVE_CASES = (1, 2, 3, 4)  # cases with a primitive-divisor exponent sieve
HIGH_CASES = (5, 6, 7, 8)  # cases sieved prime by prime


def get_case(case_id: int) -> DescentCase:
    if not 1 <= case_id <= 12:
        raise ValueError(f"case id {case_id} out of range")
    return CASES[case_id - 1]


def classify_x(x: int) -> int:
    """The unique descent case whose divisibility conditions x satisfies."""
    if x == 0:
        raise ValueError("x must be nonzero")
    div3 = x % 3 == 0
    div5 = x % 5 == 0
    if x % 2:
        two = "odd"
    elif x % 4 == 0:
        two = "quad"
    else:
        two = "double"
    for case in CASES:
        if case.div3 == div3 and case.div5 == div5 and case.two_class == two:
            return case.case_id
    raise AssertionError("unreachable: cases partition all x")


def admissible_r(case_id: int, r: int) -> bool:
    """True iff r is compatible with the case's divisibility constraints."""
    if r < 1:
        raise ValueError("r must be positive")
    return all(r % q for q in get_case(case_id).r_forbidden)


@dataclass(frozen=True)
class TernaryEquation:
    """a * w2^p - b * w1^(2p) = c_rhs, with c_rhs = rhs_coeff * r^2."""

    case_id: int
    p: int
    r: int
    a: FactoredInteger
    b: FactoredInteger
    rhs_coeff: int

    @property
    def c_rhs(self) -> int:
        return self.rhs_coeff * self.r * self.r


def instantiate_ternary(case_id: int, p: int, r: int) -> TernaryEquation:
    case = get_case(case_id)
    if p < 5 or not is_prime(p):
        raise ValueError(f"exponent {p} must be a prime >= 5")
    if case.exponent_bound < 5:
        raise ValueError(f"case {case_id} admits no exponent above 2")
    if not admissible_r(case_id, r):
        raise ValueError(f"r={r} is not admissible for case {case_id}")
    return TernaryEquation(case_id, p, r, case.w2_coeff, case.w1_coeff,
                           case.rhs_coeff)


def mignotte_normalization(case_id: int) -> tuple[int, int, int]:
    """(a_norm, b_norm, c_norm): the p-independent coefficients after
    multiplying the ternary equation by the minimal constant that makes
    both variable terms exact p-th powers.

    Each coefficient base q appears as q^(alpha*p - beta); multiplying by
    q^beta turns it into (q^alpha)^p, absorbed into the unknown, while
    q^beta lands on the opposite term as a constant.  The right side is
    scaled by the full multiplier.
    """
    case = get_case(case_id)
    if case.exponent_bound < 5:
        raise ValueError(f"case {case_id} has no normalized form")
    a_norm = b_norm = 1
    for base, alpha, beta in case.w1_coeff.factors:
        if beta > 0 or alpha % 1:
            raise AssertionError("unexpected exponent shape")
        a_norm *= base ** (-beta)
    for base, alpha, beta in case.w2_coeff.factors:
        b_norm *= base ** (-beta)
    c_norm = case.rhs_coeff * a_norm * b_norm
    return a_norm, b_norm, c_norm


def mignotte_bound(case_id: int, rmax: int) -> int:
    """Upper bound on the exponent p for |a x^n - b y^n| <= c instances
    coming from this case with r <= rmax, rounded up to an integer."""
    a, b, c = mignotte_normalization(case_id)
    if a == b:
        raise ValueError("bound requires distinct coefficients")
    c_max = c * rmax * rmax
    big_a = max(a, b, 3)
    first = 3.0 * math.log(1.5 * c_max / b)
    second = (7400.0 * math.log(big_a)
              / math.log1p(math.log(big_a) / abs(math.log(a / b))))
    return math.ceil(max(first, second))
