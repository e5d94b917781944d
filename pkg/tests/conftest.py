from __future__ import annotations

from fractions import Fraction
from math import comb

import pytest

from chabauty_kim import PadicContext, build_family


def bernoulli_numbers(n: int) -> list:
    """B_0..B_n with B_1 = -1/2."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(comb(m + 1, j) * B[j] for j in range(m)) / Fraction(m + 1))
    return B


def _gbinom(x, j: int) -> Fraction:
    out = Fraction(1)
    for i in range(j):
        out = out * (x - i) / (i + 1)
    return out


def zeta_oracle(p: int, k: int, digits: int) -> Fraction:
    """ζ_p(k) = p^k/(p^k - 1) · L_p(k, ω^(1-k)), with L_p from the Bernoulli formula at conductor p.

    L_p(k, ω^(1-k)) = 1/(k-1) · 1/p · Σ_{a=1}^{p-1} a^(1-k) Σ_j C(1-k, j) (p/a)^j B_j.
    The inner sum converges p-adically; truncating at j = digits + k + 4 leaves
    an error far below p^-digits.
    """
    J = digits + k + 4
    B = bernoulli_numbers(J)
    total = Fraction(0)
    for a in range(1, p):
        inner = sum(_gbinom(1 - k, j) * Fraction(p, a) ** j * B[j] for j in range(J + 1))
        total += Fraction(a) ** (1 - k) * inner
    return Fraction(p**k, p**k - 1) * total / p / (k - 1)


def residue_mod(q: Fraction, p: int, M: int) -> int:
    """q mod p^M for q with denominator prime to p."""
    mod = p**M
    return q.numerator * pow(q.denominator, -1, mod) % mod


@pytest.fixture(scope="session")
def fam7():
    return build_family(PadicContext(7, 30), 4)


@pytest.fixture(scope="session")
def fam5():
    return build_family(PadicContext(5, 30), 4)


@pytest.fixture(scope="session")
def fam3():
    return build_family(PadicContext(3, 30), 4)


# one verdict line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
