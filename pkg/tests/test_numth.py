from __future__ import annotations

from math import gcd, prod

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cantorcf.errors import FactorizationError
from cantorcf.numth import (
    choose_m1,
    euler_phi,
    factorize,
    is_prime,
    mod_inverse,
    split_u,
    valuation,
)
from cantorcf.words import DigitPair, Literal, periodic_to_rational

from oracles import egcd_inverse, is_prime_naive, totient


def test_split_examples():
    s = split_u(12, 10)
    assert (s.u1, s.u2) == (4, 3)
    assert (split_u(2, 3).u1, split_u(2, 3).u2) == (1, 2)
    assert (split_u(8, 6).u1, split_u(8, 6).u2) == (8, 1)


@given(st.integers(1, 10**6), st.integers(2, 40))
def test_split_properties(u, b):
    s = split_u(u, b)
    assert s.u1 * s.u2 == u
    assert gcd(s.u2, b) == 1
    assert b ** s.u1.bit_length() % s.u1 == 0  # every prime of u1 divides b


def test_valuation():
    assert valuation(2, 48) == 4
    assert valuation(3, 48) == 1
    assert valuation(5, 48) == 0


@given(st.integers(2, 10**9), st.integers(0, 10**9))
def test_mod_inverse_matches_egcd(n, a):
    try:
        expect = egcd_inverse(a, n)
    except ValueError:
        with pytest.raises(ValueError):
            mod_inverse(a, n)
        return
    assert mod_inverse(a, n) == expect


def test_is_prime_small_range():
    for n in range(3000):
        assert is_prime(n) == is_prime_naive(n), n


def test_is_prime_large():
    assert is_prime(2**61 - 1)
    assert not is_prime(2**61 + 1)
    assert not is_prime(3215031751)  # strong pseudoprime to bases 2, 3, 5, 7
    with pytest.raises(FactorizationError):
        is_prime(2**89 - 1)


@given(st.integers(1, 10**12))
def test_factorize_product(n):
    f = factorize(n)
    assert prod(p**e for p, e in f.items()) == n
    assert all(is_prime(p) for p in f)


def test_factorize_needs_rho():
    n = 1000003 * 1000033
    assert factorize(n) == {1000003: 1, 1000033: 1}
    assert factorize(2**10 * 1000003**2) == {2: 10, 1000003: 2}


def test_phi_examples_and_oracle():
    assert euler_phi(16) == 8
    assert euler_phi(36) == 12
    assert euler_phi(1) == 1
    for n in range(1, 600):
        assert euler_phi(n) == totient(n)


def test_choose_m1_examples():
    assert choose_m1(DigitPair(3, 0, 1)) == (0, 1)
    assert choose_m1(DigitPair(3, 0, 2)) == (7, 8)
    assert choose_m1(DigitPair(4, 0, 3))[0] == 53


@pytest.mark.parametrize("b", range(3, 11))
def test_choose_m1_condition_i_all_pairs(b):
    for d1 in range(b):
        for d2 in range(d1 + 1, b):
            pair = DigitPair(b, d1, d2)
            m1, n = choose_m1(pair)
            assert n == m1 + 1
            s = split_u(d2 - d1, b)
            assert b**m1 % s.u1 == 0
            x = periodic_to_rational(Literal(str(d1) * m1), Literal(str(d2) + str(d1) * m1), b)
            assert s.u2 * x.denominator == b**n - 1
