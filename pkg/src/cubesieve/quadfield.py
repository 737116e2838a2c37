"""Imaginary quadratic field arithmetic and the second-descent elimination.

Class groups via reduced binary quadratic forms, prime splitting, principal
generators by lattice reduction, and the descent over K = Q(sqrt(-m)): a
surviving form D*lambda^p - E*mu^(2p) = F*nu factors over K as
normCoeff * rho^p = (s*kappa^p + n*sqrt(-m)) * (s*kappa^p - n*sqrt(-m)),
so s*kappa^p + n*sqrt(-m) = eps * eta^p with eps drawn from a finite
p-Selmer set; each eps is attacked with valuation patterns and auxiliary
primes q = 2kp + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional

from .arith import (
    FactoredInteger,
    as_factored,
    factorize,
    is_prime,
    jacobi,
    squarefree_decompose,
)
from .sieves import CoprimeForm, _primitive_root


class SelmerUnavailable(Exception):
    """The candidate set cannot be assembled (p divides the class number)."""


class ReducedForm(NamedTuple):
    a: int
    b: int
    c: int


def class_group(disc: int) -> tuple[list[ReducedForm], int]:
    """All reduced positive-definite forms of the given negative
    discriminant, and the class number."""
    if disc >= 0 or disc % 4 not in (0, 1):
        raise ValueError(f"{disc} is not a negative quadratic discriminant")
    forms = []
    a = 1
    while 3 * a * a <= -disc:
        for b in range(-a + 1, a + 1):
            num = b * b - disc
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if b < 0 and (a == -b or a == c):
                continue
            forms.append(ReducedForm(a, b, c))
        a += 1
    return sorted(forms), len(forms)


def sqrt_mod(a: int, q: int) -> Optional[int]:
    """A square root of a modulo an odd prime q, or None."""
    a %= q
    if a == 0:
        return 0
    if jacobi(a, q) != 1:
        return None
    if q % 4 == 3:
        return pow(a, (q + 1) // 4, q)
    # Tonelli-Shanks
    s = (q - 1 & -(q - 1)).bit_length() - 1
    d = (q - 1) >> s
    z = 2
    while jacobi(z, q) != -1:
        z += 1
    c = pow(z, d, q)
    x = pow(a, (d + 1) // 2, q)
    t = pow(a, d, q)
    m = s
    while t != 1:
        i, tt = 0, t
        while tt != 1:
            tt = tt * tt % q
            i += 1
        b = pow(c, 1 << (m - i - 1), q)
        x = x * b % q
        t = t * b % q * b % q
        c = b * b % q
        m = i
    return x


@dataclass(frozen=True)
class QuadField:
    """K = Q(sqrt(-m)) for squarefree m >= 1, with ring basis {1, omega}."""

    m: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be positive")
        c, _ = squarefree_decompose(self.m)
        if c != self.m:
            raise ValueError("m must be squarefree")

    @property
    def discriminant(self) -> int:
        return -self.m if self.m % 4 == 3 else -4 * self.m

    @property
    def half_basis(self) -> bool:
        """True when omega = (1 + sqrt(-m))/2 rather than sqrt(-m)."""
        return self.m % 4 == 3

    @property
    def omega_k(self) -> int:
        """omega satisfies omega^2 = omega - omega_k (half basis) or
        omega^2 = -omega_k (full basis)."""
        return (1 + self.m) // 4 if self.half_basis else self.m

    @property
    def class_number(self) -> int:
        return class_group(self.discriminant)[1]

    @property
    def unit_order(self) -> int:
        if self.m == 1:
            return 4
        if self.m == 3:
            return 6
        return 2

    # elements are pairs (x, y) meaning x + y*omega
    def mul(self, u: tuple[int, int], v: tuple[int, int]) -> tuple[int, int]:
        x1, y1 = u
        x2, y2 = v
        if self.half_basis:
            return (x1 * x2 - self.omega_k * y1 * y2,
                    x1 * y2 + x2 * y1 + y1 * y2)
        return (x1 * x2 - self.m * y1 * y2, x1 * y2 + x2 * y1)

    def conj(self, u: tuple[int, int]) -> tuple[int, int]:
        x, y = u
        return (x + y, -y) if self.half_basis else (x, -y)

    def norm(self, u: tuple[int, int]) -> int:
        x, y = u
        if self.half_basis:
            return x * x + x * y + self.omega_k * y * y
        return x * x + self.m * y * y

    def dot2(self, u: tuple[int, int], v: tuple[int, int]) -> int:
        """Twice the bilinear form attached to the norm."""
        x1, y1 = u
        x2, y2 = v
        if self.half_basis:
            return 2 * x1 * x2 + x1 * y2 + x2 * y1 + 2 * self.omega_k * y1 * y2
        return 2 * (x1 * x2 + self.m * y1 * y2)

    def as_sqrt_basis(self, u: tuple[int, int]) -> tuple[int, int, int]:
        """(u, v, w) with the element equal to (u + v*sqrt(-m))/w, reduced."""
        x, y = u
        if not self.half_basis:
            return (x, y, 1)
        g = math.gcd(math.gcd(2 * x + y, y), 2)
        return ((2 * x + y) // g, y // g, 2 // g)

    def omega_image(self, w_root: int, q: int) -> int:
        """Image of omega in F_q given a root w_root of x^2 = -m."""
        if self.half_basis:
            return (1 + w_root) * pow(2, -1, q) % q
        return w_root % q

    def min_poly_roots(self, q: int) -> list[int]:
        """Roots modulo q of the minimal polynomial of omega."""
        if q == 2:
            k = self.omega_k
            if self.half_basis:
                return [t for t in (0, 1) if (t * t - t + k) % 2 == 0]
            return [t for t in (0, 1) if (t * t + k) % 2 == 0]
        if self.half_basis:
            u = sqrt_mod(-self.m, q)
            if u is None:
                return []
            inv2 = pow(2, -1, q)
            roots = {(1 + u) * inv2 % q, (1 - u) * inv2 % q}
            return sorted(roots)
        u = sqrt_mod(-self.m, q)
        if u is None:
            return []
        return sorted({u, (q - u) % q})


@lru_cache(maxsize=None)
def field(m: int) -> QuadField:
    return QuadField(m)


@dataclass(frozen=True)
class Ideal:
    """Integral ideal of O_K as the lattice Z*a + Z*(b + c*omega)."""

    m: int
    a: int
    b: int
    c: int

    @property
    def K(self) -> QuadField:
        return field(self.m)

    @property
    def norm(self) -> int:
        return self.a * self.c

    def basis(self) -> list[tuple[int, int]]:
        return [(self.a, 0), (self.b, self.c)]

    def contains(self, u: tuple[int, int]) -> bool:
        x, y = u
        if y % self.c:
            return False
        x -= (y // self.c) * self.b
        return x % self.a == 0


def _hnf_ideal(m: int, vectors: Iterable[tuple[int, int]]) -> Ideal:
    big_a = 0
    big_b = big_c = 0
    for x, y in vectors:
        if y == 0:
            big_a = math.gcd(big_a, x)
            continue
        if big_c == 0:
            big_b, big_c = x, y
            continue
        g, u, v = _xgcd(big_c, y)
        x0 = (big_c // g) * x - (y // g) * big_b
        big_a = math.gcd(big_a, x0)
        big_b, big_c = u * big_b + v * x, g
    if big_c < 0:
        big_b, big_c = -big_b, -big_c
    big_a = abs(big_a)
    if big_a == 0 or big_c == 0:
        raise ValueError("ideal lattice is not full rank")
    big_b %= big_a
    return Ideal(m, big_a, big_b, big_c)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        qt, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - qt * x1
        y0, y1 = y1, y0 - qt * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def principal_ideal(K: QuadField, u: tuple[int, int]) -> Ideal:
    return _hnf_ideal(K.m, [u, K.mul(u, (0, 1))])


def ideal_mul(i1: Ideal, i2: Ideal) -> Ideal:
    K = i1.K
    vecs = []
    for v1 in i1.basis():
        for v2 in i2.basis():
            vecs.append(K.mul(v1, v2))
    return _hnf_ideal(i1.m, vecs)


def ideal_pow(ideal: Ideal, e: int) -> Ideal:
    out = principal_ideal(ideal.K, (1, 0))
    for _ in range(e):
        out = ideal_mul(out, ideal)
    return out


def ideal_conj(ideal: Ideal) -> Ideal:
    K = ideal.K
    return _hnf_ideal(ideal.m, [K.conj(v) for v in ideal.basis()])


def principal_generator(ideal: Ideal) -> Optional[tuple[int, int]]:
    """Generator of the ideal when principal, else None.

    In a definite norm form the minimum of the ideal lattice equals the
    ideal norm exactly when the ideal is principal, so Lagrange reduction
    of the two-dimensional basis decides both questions at once.
    """
    K = ideal.K
    u, v = ideal.basis()
    if K.norm(u) < K.norm(v):
        u, v = v, u
    while True:
        nv = K.norm(v)
        t = (2 * K.dot2(u, v) + 2 * nv) // (4 * nv)
        u = (u[0] - t * v[0], u[1] - t * v[1])
        if K.norm(u) >= nv:
            break
        u, v = v, u
    best = min((v, u, (u[0] + v[0], u[1] + v[1]), (u[0] - v[0], u[1] - v[1])),
               key=K.norm)
    if K.norm(best) == ideal.norm:
        return best
    return None


def split_prime(K: QuadField, q: int) -> tuple[str, list[Ideal]]:
    """Splitting type of q in O_K with explicit prime ideals above q:
    ("split", [q1, q2]), ("ramified", [p]) or ("inert", [qO])."""
    disc = K.discriminant
    if q == 2:
        kind = ("ramified" if disc % 2 == 0
                else "split" if disc % 8 == 1 else "inert")
    elif disc % q == 0:
        kind = "ramified"
    else:
        kind = "split" if jacobi(disc, q) == 1 else "inert"
    if kind == "inert":
        return kind, [_hnf_ideal(K.m, [(q, 0), (0, q)])]
    roots = K.min_poly_roots(q)
    ideals = [_hnf_ideal(K.m, [(q, 0), (-t % q, 1)]) for t in roots]
    if kind == "ramified":
        return kind, ideals[:1]
    assert len(ideals) == 2
    return kind, ideals


def ideal_valuation(K: QuadField, u: tuple[int, int], q: int,
                    ideal: Ideal) -> int:
    """ord at the given prime ideal above q of the nonzero element u."""
    if u == (0, 0):
        raise ValueError("zero element")
    kind, _ = split_prime(K, q)
    total = 0
    n = K.norm(u)
    while n % q == 0:
        n //= q
        total += 1
    if kind == "ramified":
        return total
    if kind == "inert":
        return total // 2
    x, y = u
    content = 0
    while x % q == 0 and y % q == 0:
        x //= q
        y //= q
        content += 1
    if ideal.contains((x, y)):
        return content + (total - 2 * content)
    return content


class_order_cache: dict[Ideal, tuple[int, tuple[int, int]]] = {}


def class_data(ideal: Ideal) -> tuple[int, tuple[int, int]]:
    """(order of the ideal class, generator of ideal**order)."""
    if ideal in class_order_cache:
        return class_order_cache[ideal]
    h = ideal.K.class_number
    power = ideal
    for j in range(1, h + 1):
        gen = principal_generator(power)
        if gen is not None:
            class_order_cache[ideal] = (j, gen)
            return j, gen
        power = ideal_mul(power, ideal)
    raise AssertionError("class order must divide the class number")


@dataclass(frozen=True)
class SelmerCandidate:
    """An element class of K*/(K*)^p given by generator exponents.

    value is (u, v, w) for (u + v*sqrt(-m))/w in lowest terms; support maps
    (rational prime, ideal) to the valuation of the representative.
    """

    m: int
    value: tuple[int, int, int]
    support: tuple[tuple[tuple[int, Ideal], int], ...]
    gens: tuple[tuple[tuple[int, int], int], ...]  # (element, exponent)

    def support_dict(self) -> dict[tuple[int, Ideal], int]:
        return dict(self.support)


@dataclass
class _Orbit:
    """Prime ideals above one rational prime, with Selmer generators."""

    ell: int
    kind: str
    ideals: list[Ideal]
    gens: list[tuple[int, int]]  # generator elements
    gen_orders: list[int]  # class orders (norm of gen = ell**(order*f))
    norm_exps: list[int]  # valuation of Norm(gen) at ell
    ord_vectors: list[list[int]]  # per gen: ord at each ideal in `ideals`


def _build_orbit(K: QuadField, ell: int) -> _Orbit:
    kind, ideals = split_prime(K, ell)
    gens: list[tuple[int, int]] = []
    orders: list[int] = []
    norm_exps: list[int] = []
    ord_vectors: list[list[int]] = []
    for ideal in ideals:
        if kind == "inert":
            gens.append((ell, 0))
            orders.append(1)
            norm_exps.append(2)
            ord_vectors.append([1])
            continue
        order, gen = class_data(ideal)
        gens.append(gen)
        orders.append(order)
        norm_exps.append(order)
        vec = [ideal_valuation(K, gen, ell, other) for other in ideals]
        # (gen) = ideal**order exactly, so ord there is the class order
        assert vec[ideals.index(ideal)] == order
        ord_vectors.append(vec)
    return _Orbit(ell, kind, ideals, gens, orders, norm_exps, ord_vectors)


def _orbit_solutions(orbit: _Orbit, target: int, p: int) -> list[tuple[int, ...]]:
    """Exponent vectors e (mod p) with sum(e_i * norm_exps_i) = target."""
    coeffs = [c % p for c in orbit.norm_exps]
    target %= p
    if len(coeffs) == 1:
        c = coeffs[0]
        if c == 0:
            return [(e,) for e in range(p)] if target == 0 else []
        return [((target * pow(c, -1, p)) % p,)]
    c1, c2 = coeffs
    out = []
    if c2 != 0:
        inv = pow(c2, -1, p)
        for e1 in range(p):
            out.append((e1, (target - c1 * e1) * inv % p))
    elif c1 != 0:
        inv = pow(c1, -1, p)
        out = [((target * inv) % p, e2) for e2 in range(p)]
    else:
        out = ([(e1, e2) for e1 in range(p) for e2 in range(p)]
               if target == 0 else [])
    return out


def _combine_value(K: QuadField, gens: list[tuple[tuple[int, int], int]]
                   ) -> tuple[int, int]:
    out = (1, 0)
    for elem, e in gens:
        for _ in range(e):
            out = K.mul(out, elem)
    return out


def selmer_candidates(
    K: QuadField,
    g_ideals: Iterable[tuple[int, Ideal]],
    p: int,
    norm_coeff: "int | FactoredInteger",
    max_size: int = 100_000,
) -> list[SelmerCandidate]:
    """The set of classes eps in K*/(K*)^p supported on the given prime
    ideals whose norm matches norm_coeff up to rational p-th powers.

    Generators are the roots of unity (when p divides their order) and
    generators of P**ord([P]) for each supplied prime P; a class number
    divisible by p cannot be handled and raises SelmerUnavailable.
    """
    if p < 3 or not is_prime(p):
        raise ValueError("p must be an odd prime")
    h = K.class_number
    if h % p == 0:
        raise SelmerUnavailable(f"p={p} divides class number {h}")
    norm_f = as_factored(norm_coeff)
    ells = sorted({ell for ell, _ in g_ideals})
    wanted: dict[int, set[Ideal]] = {}
    for ell, ideal in g_ideals:
        wanted.setdefault(ell, set()).add(ideal)
    orbits: list[_Orbit] = []
    for ell in ells:
        orbit = _build_orbit(K, ell)
        keep = [i for i, ideal in enumerate(orbit.ideals)
                if ideal in wanted[ell]]
        if orbit.kind == "split" and len(keep) == 1:
            # only one of the conjugate pair was supplied; keep both ideals
            # for valuation vectors but a single generator
            j = keep[0]
            orbit.gens = [orbit.gens[j]]
            orbit.gen_orders = [orbit.gen_orders[j]]
            orbit.norm_exps = [orbit.norm_exps[j]]
            orbit.ord_vectors = [orbit.ord_vectors[j]]
        orbits.append(orbit)
    # norm condition must be satisfiable at primes without generators
    for ell in norm_f.support():
        exp = norm_f.exponent_at(ell, p) % p
        if exp and ell not in ells:
            return []
    per_orbit: list[list[tuple[int, ...]]] = []
    for orbit in orbits:
        target = norm_f.exponent_at(orbit.ell, p)
        sols = _orbit_solutions(orbit, target, p)
        if not sols:
            return []
        per_orbit.append(sols)
    unit_exps = [0]
    unit_gen = None
    if K.unit_order % p == 0:
        unit_gen = (0, 1)  # omega is zeta_6 (m=3) resp. i (m=1)
        unit_exps = list(range(p))
    total = len(unit_exps)
    for sols in per_orbit:
        total *= len(sols)
        if total > max_size:
            raise SelmerUnavailable(f"candidate set larger than {max_size}")
    out: list[SelmerCandidate] = []
    def rec(i: int, chosen: list[tuple[int, ...]]):
        if i == len(orbits):
            for ue in unit_exps:
                gens: list[tuple[tuple[int, int], int]] = []
                support: list[tuple[tuple[int, Ideal], int]] = []
                if ue and unit_gen is not None:
                    gens.append((unit_gen, ue))
                for orbit, exps in zip(orbits, chosen):
                    for gi, e in enumerate(exps):
                        if e:
                            gens.append((orbit.gens[gi], e))
                    for ii, ideal in enumerate(orbit.ideals):
                        v = sum(e * orbit.ord_vectors[gi][ii]
                                for gi, e in enumerate(exps))
                        if v:
                            support.append(((orbit.ell, ideal), v))
                value = _combine_value(K, gens)
                out.append(SelmerCandidate(
                    K.m, K.as_sqrt_basis(value), tuple(support), tuple(gens)))
            return
        for exps in per_orbit[i]:
            rec(i + 1, chosen + [exps])
    rec(0, [])
    return out


def _rational_ord(K: QuadField, value: "int | FactoredInteger", q: int,
                  kind: str, p: int) -> int:
    e = 2 if kind == "ramified" else 1
    if isinstance(value, FactoredInteger):
        return e * value.exponent_at(q, p)
    v = 0
    val = value
    while val % q == 0:
        val //= q
        v += 1
    return e * v


def eliminate_by_valuations(
    candidate: SelmerCandidate,
    s: "int | FactoredInteger",
    n: int,
    m: int,
    p: int,
) -> Optional[tuple[int, str]]:
    """Valuation-pattern obstruction for s*kappa^p + n*sqrt(-m) = eps*eta^p.

    At any prime ideal, ord(eps*eta^p) = ord(eps) mod p while the left side
    forces collisions among ord(s), ord(n*sqrt(-m)) and their conjugates;
    three pairwise-distinct values modulo p are contradictory.  Returns
    (rational prime, condition tag) or None.
    """
    K = field(m)
    support = candidate.support_dict()
    rats = set(q for q, _ in support)
    rats.update((2, *factorize(m), *factorize(n)))
    if isinstance(s, FactoredInteger):
        rats.update(s.support())
    else:
        rats.update(factorize(abs(s)))
    for q in sorted(rats):
        kind, ideals = split_prime(K, q)
        for idx, ideal in enumerate(ideals):
            conj = ideals[1 - idx] if kind == "split" else ideal
            vs = _rational_ord(K, s, q, kind, p) % p
            vn = (_rational_ord(K, n, q, kind, p)
                  + (m % q == 0 and kind == "ramified")) % p
            v2 = _rational_ord(K, 2, q, kind, p) % p
            ve = support.get((q, ideal), 0) % p
            vec = support.get((q, conj), 0) % p
            if len({vs, vn, ve}) == 3:
                return q, "svne"
            if len({(v2 + vs) % p, ve, vec}) == 3:
                return q, "2s"
            if len({(v2 + vn) % p, ve, vec}) == 3:
                return q, "2n"
    return None


def eliminate_by_aux_prime(
    candidate: SelmerCandidate,
    s: "int | FactoredInteger",
    n: int,
    m: int,
    p: int,
    kmax: int = 200,
) -> Optional[int]:
    """Auxiliary-prime obstruction: for a split q = 2kp+1 with eps a unit
    at both primes above q, every kappa would need (s*kappa^p +
    n*sqrt(-m))/eps to be a p-th power (or zero) in both residue fields;
    an empty residue set certifies there is no solution.  Returns the
    witness q or None."""
    K = field(m)
    s_f = as_factored(s) if not isinstance(s, FactoredInteger) else s
    support_primes = {q for (q, _), _ in candidate.support}
    for k in range(1, kmax + 1):
        q = 2 * k * p + 1
        if not is_prime(q) or q in support_primes:
            continue
        if K.discriminant % q == 0 or jacobi(K.discriminant, q) != 1:
            continue
        w = sqrt_mod(-m % q, q)
        if w is None:
            continue
        s_q = s_f.eval_mod(p, q)
        n_q = n % q
        eps = []
        ok = True
        for w_root in (w, (q - w) % q):
            om = K.omega_image(w_root, q)
            val = 1
            for (x, y), e in candidate.gens:
                g = (x + y * om) % q
                if g == 0:
                    ok = False
                    break
                val = val * pow(g, e, q) % q
            if not ok:
                break
            eps.append(val)
        if not ok:
            continue
        g = _primitive_root(q, [2, p, *factorize(k)])
        gp = pow(g, p, q)
        pth = {0, 1}
        x = 1
        for _ in range(2 * k - 1):
            x = x * gp % q
            pth.add(x)
        inv_eps = [pow(e, -1, q) for e in eps]
        roots = (w, (q - w) % q)
        chi_nonempty = False
        for zeta in sorted(pth):
            good = True
            for j in (0, 1):
                t = (s_q * zeta + n_q * roots[j]) * inv_eps[j] % q
                if t not in pth and t != 0:
                    good = False
                    break
            if good:
                chi_nonempty = True
                break
        if not chi_nonempty:
            return q
    return None


@dataclass(frozen=True)
class DescentResult:
    eliminated: bool
    reason: str
    witness: dict


def descent_data(form: CoprimeForm) -> dict:
    """The field data (s, n, m, normCoeff, support primes) attached to a
    coprime form for the second descent."""
    p = form.p
    e_prime = 1
    for ell in form.E.support():
        alpha, beta = form.E.exponent_affine(ell)
        if (alpha + beta) % 2:
            e_prime *= ell
    s = form.E.times(FactoredInteger.affine_power(e_prime, 0, 1)).sqrt_half()
    norm_coeff = form.D.times(FactoredInteger.affine_power(e_prime, 0, 1))
    n2m: dict[int, int] = {}
    for val in (form.F, e_prime):
        for ell, e in factorize(val).items():
            n2m[ell] = n2m.get(ell, 0) + e
    for ell, e in factorize(math.isqrt(form.nu)).items():
        n2m[ell] = n2m.get(ell, 0) + 2 * e
    m = 1
    n = 1
    for ell, e in sorted(n2m.items()):
        if e % 2:
            m *= ell
        n *= ell ** (e // 2)
    rats = set(norm_coeff.support())
    rats.add(2)
    rats.update(factorize(n))
    rats.update(factorize(m))
    return {"p": p, "s": s, "n": n, "m": m, "norm_coeff": norm_coeff,
            "primes": sorted(rats)}


def nfdescent_eliminates(
    form: CoprimeForm,
    kmax_aux: int = 200,
    candidate_cap: int = 100_000,
) -> DescentResult:
    """Second descent over Q(sqrt(-m)) for a form that survived the
    residue-set and local stages: eliminated iff every Selmer candidate is
    killed by a valuation pattern or an auxiliary prime."""
    data = descent_data(form)
    p, s, n, m = data["p"], data["s"], data["n"], data["m"]
    norm_coeff = data["norm_coeff"]
    K = field(m)
    if K.class_number % p == 0:
        return DescentResult(False, "class-number", {"h": K.class_number})
    orbits = [_build_orbit(K, ell) for ell in data["primes"]]
    per_orbit: list[list[tuple[int, ...]]] = []
    total = 1
    for orbit in orbits:
        target = norm_coeff.exponent_at(orbit.ell, p)
        sols = _orbit_solutions(orbit, target, p)
        filtered = [e for e in sols
                    if _orbit_valuation_ok(orbit, e, K, s, n, m, p)]
        if not filtered:
            return DescentResult(True, "selmer-empty",
                                 {"prime": orbit.ell, "raw": len(sols)})
        per_orbit.append(filtered)
        total *= len(filtered)
        if total > candidate_cap:
            return DescentResult(False, "candidate-cap", {"size": total})
    if K.unit_order % p == 0:
        return DescentResult(False, "unit-order", {})
    kills: dict[str, int] = {"valuation": 0, "aux": 0}
    aux_qs: list[int] = []

    def build(chosen: list[tuple[int, ...]]) -> SelmerCandidate:
        gens: list[tuple[tuple[int, int], int]] = []
        support: list[tuple[tuple[int, Ideal], int]] = []
        for orbit, exps in zip(orbits, chosen):
            for gi, e in enumerate(exps):
                if e:
                    gens.append((orbit.gens[gi], e))
            for ii, ideal in enumerate(orbit.ideals):
                v = sum(e * orbit.ord_vectors[gi][ii]
                        for gi, e in enumerate(exps))
                if v:
                    support.append(((orbit.ell, ideal), v))
        return SelmerCandidate(m, (0, 0, 1), tuple(support), tuple(gens))

    survivors: list[SelmerCandidate] = []

    def rec(i: int, chosen: list[tuple[int, ...]]) -> bool:
        if i == len(orbits):
            cand = build(chosen)
            if eliminate_by_valuations(cand, s, n, m, p) is not None:
                kills["valuation"] += 1
                return True
            q = eliminate_by_aux_prime(cand, s, n, m, p, kmax_aux)
            if q is not None:
                kills["aux"] += 1
                aux_qs.append(q)
                return True
            survivors.append(cand)
            return False
        return all(rec(i + 1, chosen + [exps]) for exps in per_orbit[i])

    if rec(0, []):
        return DescentResult(True, "all-candidates-killed",
                             {"kills": dict(kills), "aux_qs": sorted(set(aux_qs))})
    return DescentResult(False, "candidate-survives",
                         {"candidates_left": len(survivors)})


def _orbit_valuation_ok(orbit: _Orbit, exps: tuple[int, ...], K: QuadField,
                        s, n: int, m: int, p: int) -> bool:
    """Valuation conditions restricted to the ideals above one rational
    prime; they depend only on this orbit's exponents."""
    for idx, ideal in enumerate(orbit.ideals):
        conj_idx = 1 - idx if orbit.kind == "split" else idx
        vs = _rational_ord(K, s, orbit.ell, orbit.kind, p) % p
        vn = (_rational_ord(K, n, orbit.ell, orbit.kind, p)
              + (m % orbit.ell == 0 and orbit.kind == "ramified")) % p
        v2 = _rational_ord(K, 2, orbit.ell, orbit.kind, p) % p
        ve = sum(e * orbit.ord_vectors[gi][idx]
                 for gi, e in enumerate(exps)) % p
        vec = sum(e * orbit.ord_vectors[gi][conj_idx]
                  for gi, e in enumerate(exps)) % p
        if len({vs, vn, ve}) == 3:
            return False
        if len({(v2 + vs) % p, ve, vec}) == 3:
            return False
        if len({(v2 + vn) % p, ve, vec}) == 3:
            return False
    return True
