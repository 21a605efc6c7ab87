"""Elementary number theory: totients, valuations, inverses and the choice of m1."""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import gcd, isqrt

from .errors import ConstructionInvariantError, FactorizationError
from .words import DigitPair, Literal, periodic_to_rational

TRIAL_LIMIT = 10**6
RHO_ITERATIONS = 10**6

# Deterministic Miller-Rabin witnesses for n < 3.3e24 (covers 2**64).
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@dataclass(frozen=True)
class USplit:
    """u = u1 * u2 with rad(u1) | b and gcd(u2, b) = 1."""

    u: int
    u1: int
    u2: int


def split_u(u: int, b: int) -> USplit:
    if u < 1:
        raise ValueError("u must be positive")
    u1, rest = 1, u
    g = gcd(rest, b)
    while g > 1:
        rest //= g
        u1 *= g
        g = gcd(rest, b)
    return USplit(u, u1, rest)


def valuation(p: int, n: int) -> int:
    if p < 2 or n < 1:
        raise ValueError("valuation needs a prime p and n >= 1")
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def mod_inverse(a: int, n: int) -> int:
    if n < 1:
        raise ValueError("modulus must be positive")
    try:
        return pow(a, -1, n)
    except ValueError:
        raise ValueError(f"{a} is not invertible modulo {n}") from None


def is_prime(n: int) -> bool:
    """Deterministic primality for n < 2**64; larger inputs are refused."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    if n >= 1 << 64:
        raise FactorizationError("primality certification is limited to n < 2**64")
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _brent_rho(n: int, rng: random.Random, budget: int) -> int:
    # Brent's variant with batched gcds
    if n % 2 == 0:
        return 2
    spent = 0
    while spent < budget:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        x = ys = y
        while g == 1 and spent < budget:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = gcd(q, n)
                k += m
            spent += 2 * r
            r *= 2
        if g == 1:
            break
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = gcd(abs(x - ys), n)
        if 1 < g < n:
            return g
    raise FactorizationError(f"rho budget exhausted factoring {n}")


def factorize(n: int) -> dict[int, int]:
    """Prime factorization as {prime: exponent}."""
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    factors: dict[int, int] = {}
    for p in (2, 3):
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
    p = 5
    limit = min(isqrt(n), TRIAL_LIMIT)
    while p <= limit:
        for cand in (p, p + 2):
            while n % cand == 0:
                factors[cand] = factors.get(cand, 0) + 1
                n //= cand
        p += 6
        limit = min(isqrt(n), TRIAL_LIMIT)
    if n > 1:
        rng = random.Random(n)
        stack = [n]
        while stack:
            m = stack.pop()
            if is_prime(m):
                factors[m] = factors.get(m, 0) + 1
                continue
            d = _brent_rho(m, rng, RHO_ITERATIONS)
            stack.extend((d, m // d))
    return dict(sorted(factors.items()))


def euler_phi(n: int) -> int:
    result = n
    for p in factorize(n):
        result -= result // p
    return result


def choose_m1(pair: DigitPair) -> tuple[int, int]:
    """Return (m1, N) with N = m1 + 1 the length of w1.

    For the pair (0, 1) the preperiod is empty. Otherwise N is the totient of
    u2^2 (b-1)^2, which forces u1 | b^m1 and u2 * q1 = b^N - 1.
    """
    b = pair.b
    s = split_u(pair.u, b)
    if pair.d2 == 1:
        m1, n = 0, 1
    else:
        n = euler_phi(s.u2**2 * (b - 1) ** 2)
        m1 = n - 1
    if pow(b, m1, s.u1) != 0:
        raise ConstructionInvariantError(f"u1={s.u1} does not divide b^{m1}")
    v = Literal.of([pair.d1] * m1)
    w1 = Literal.of([pair.d2] + [pair.d1] * m1)
    x = periodic_to_rational(v, w1, b)
    if s.u2 * x.denominator != b**n - 1:
        raise ConstructionInvariantError(
            f"u2*q1 = {s.u2 * x.denominator} differs from b^N - 1 = {b**n - 1}"
        )
    return m1, n
