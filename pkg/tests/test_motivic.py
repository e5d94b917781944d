import random
from fractions import Fraction
from math import comb

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from chabauty_kim.motivic import (
    AFFINE,
    EMPTY,
    LI3_WORDS,
    NU1,
    NU3,
    V1,
    V2,
    V3,
    X,
    Y,
    GrouplikeError,
    Letter,
    ShufflePoly,
    UnipotentMatrix,
    Word,
    basis_rank,
    concrete_image_equations,
    concrete_to_abstract,
    dB_matrix,
    deconcatenation,
    evaluate,
    expand_li3_half,
    f_coefficients,
    fphi_matrices,
    group_matrix,
    l2,
    L4,
    lambda_image,
    li3_word_values,
    li4half_abstract,
    phi,
    polylog_character,
    shuffle,
    superdiagonals,
    z3,
)
from chabauty_kim.padic import padic_log

A, B, C = Letter("a"), Letter("b"), Letter("c")
words = st.lists(st.sampled_from([A, B, C]), max_size=4).map(Word)


@given(words, words)
def test_shuffle_is_commutative_with_binomial_mass(u, v):
    s = shuffle(u, v)
    assert s == shuffle(v, u)
    assert sum(c for _, c in s) == comb(len(u) + len(v), len(u))


@given(words, words, words)
@settings(max_examples=30)
def test_shuffle_is_associative(u, v, w):
    U, V, W = (ShufflePoly.of(x) for x in (u, v, w))
    assert (U * V) * W == U * (V * W)


def test_shuffle_power_of_a_letter():
    assert shuffle(Word([NU1]), Word([NU1, NU1])) == ShufflePoly.of(Word([NU1] * 3), 3)
    assert phi(NU1) ** 4 == ShufflePoly.of(Word([NU1] * 4), 24)


@given(words, words)
@settings(max_examples=30)
def test_deconcatenation_is_multiplicative(u, v):
    """Δ(u ⧢ v) = Δu ⧢ Δv on the full (unreduced) coproduct."""
    lhs = deconcatenation(shuffle(u, v), reduced=False)
    du = deconcatenation(ShufflePoly.of(u), reduced=False)
    dv = deconcatenation(ShufflePoly.of(v), reduced=False)
    rhs: dict = {}
    for (ul, ur), a in du.items():
        for (vl, vr), b in dv.items():
            for wl, cl in shuffle(ul, vl):
                for wr, cr in shuffle(ur, vr):
                    rhs[(wl, wr)] = rhs.get((wl, wr), 0) + a * b * cl * cr
    assert lhs == {k: v for k, v in rhs.items() if v}


def _random_unipotent(rng, n):
    return UnipotentMatrix(n, {(i, j): Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for i in range(n) for j in range(i + 1, n)})


@pytest.mark.parametrize("seed", range(10))
def test_log_and_exp_are_inverse_over_the_rationals(seed):
    rng = random.Random(seed)
    M = _random_unipotent(rng, 5)
    assert M.log().exp().entries == M.entries
    Nn = M.log()
    assert Nn.exp().log().entries == Nn.entries


def test_group_matrix_rejects_non_grouplike_input():
    lx, ly = Fraction(2), Fraction(3)
    good = {EMPTY: 1, Word([X]): lx, Word([Y]): ly, Word([X, Y]): Fraction(1)}
    good[Word([Y, X])] = lx * ly - good[Word([X, Y])]
    group_matrix(good, 2)
    bad = dict(good)
    bad[Word([Y, X])] = 0
    with pytest.raises(GrouplikeError):
        group_matrix(bad, 2)


def test_weight_three_word_values():
    lb, l1, L2, L3 = sp.symbols("lb l1 L2 L3")
    vals = li3_word_values(lb, l1, L2, L3)
    want = {
        Word([V1, V1, V1]): -(lb**2) * l1,
        Word([V1, V2]): lb**2 * l1 / 2 + lb * L2,
        Word([V2, V1]): 0,
        Word([V3]): -(lb**2) * l1 / 12 - lb * L2 / 2 + L3,
    }
    assert set(vals) == set(LI3_WORDS)
    for w in LI3_WORDS:
        assert sp.expand(vals[w] - want[w]) == 0


def test_superdiagonals_of_the_weight_three_block():
    lb, l1, L2, L3 = sp.symbols("lb l1 L2 L3")
    M = UnipotentMatrix(4, {(0, 1): lb, (0, 2): lb**2 / 2, (0, 3): L3, (1, 2): lb, (1, 3): L2, (2, 3): -l1})
    d1, d2, d3 = superdiagonals(M)
    assert [sp.expand(x) for x in d1] == [lb, lb, -l1]
    assert [sp.expand(x) for x in d2] == [0, sp.expand(lb * l1 / 2 + L2)]
    assert sp.expand(d3[0] - (-(lb**2) * l1 / 12 - lb * L2 / 2 + L3)) == 0


def test_polylog_character_is_grouplike_to_weight_two(fam7):
    z = fam7.ctx(Fraction(1, 2))
    L = polylog_character(fam7.logz(z), fam7.log1mz(z), {2: fam7.li[2](z)})
    # L_x L_y = L_xy + L_yx; L_yx is determined, so only the weight-one shuffle is checked here.
    M = group_matrix(L, 2, check=False)
    assert M[(0, 1)] == fam7.logz(z)


def test_dB_matrix_is_the_golden_matrix():
    c = sp.Rational(7, 8)
    want = sp.Matrix([[0, 1, -c], [4, 0, -sp.Rational(1, 6)], [6, 0, -sp.Rational(1, 4)], [4, 0, -sp.Rational(1, 6)], [0, 1, 0]])
    assert dB_matrix(c) == want


def test_weight_four_basis_needs_c1_nonzero():
    assert basis_rank(sp.Rational(7, 8)) == 3
    assert basis_rank(0) == 2


def test_li4_half_in_the_abstract_basis():
    c = sp.Symbol("c1")
    got = li4half_abstract(c)
    want = ShufflePoly({Word([NU1, NU3]): -c, Word([NU1] * 4): -1})
    assert got == want


@pytest.mark.parametrize("seed", range(100))
def test_lambda_image_equations_vanish_exactly(seed):
    rng = random.Random(seed)
    a, b, d = (Fraction(rng.randint(-50, 50), rng.randint(1, 20)) for _ in range(3))
    coords, residuals = lambda_image(a, b, d)
    assert all(r == 0 for r in residuals)
    assert coords == (a, -b, -a * b, -a * a * b, -d, -(a**3) * b, -a * d, 0)


def test_concrete_image_equations():
    c = sp.Symbol("c1")
    _, y = concrete_to_abstract(c)
    yl_, yl, yl2, yl3, yz, yl4, ylz, yL = (y[k] for k in ("yl'", "yl", "yl2", "yl3", "yz", "yl4", "ylz", "yL"))
    want = [2 * yl2 - yl * yl_, 6 * yl3 - yl * yl_**2, 24 * yl4 - yL - yl * yl_**3, -c * yL - yl_ * yz, ylz]
    got = concrete_image_equations(c)
    # the reference form of the fourth equation already uses the last one (y_lζ = 0)
    assert sp.expand(got[4] - want[4]) == 0
    for g, w in zip(got, want):
        ratio = sp.simplify(g.subs(ylz, 0) / w) if w != ylz else sp.Integer(1)
        assert ratio.free_symbols == set() and ratio != 0


def test_f2_and_f4_coefficients():
    c = sp.Symbol("c1")
    X1, Y1, Y2, Y3, Y4 = AFFINE
    fc = f_coefficients(c)
    F2 = sum(coef * sp.Mul(*[v**e for v, e in zip(AFFINE, m)]) for m, coef in fc.F2.items())
    F4 = sum(coef * sp.Mul(*[v**e for v, e in zip(AFFINE, m)]) for m, coef in fc.F4.items())
    assert sp.expand(F2 - (Y2 - X1 * Y1 / 2)) == 0
    Cc = l2**3 / (24 * z3) + L4 / (l2 * z3)
    want4 = Y4 - X1**3 * Y1 / 24 + (Cc / c) * (X1 * Y3 - X1**3 * Y1 / 6)
    assert sp.simplify(F4 - want4) == 0
    assert sp.simplify(fc.C - Cc) == 0


def test_evaluate_handles_padic_values(fam7):
    l = padic_log(fam7.ctx(2))
    expr = l2**3 / (24 * z3) + 3
    got = evaluate(expr, {"log2": l, "zeta3": fam7.zeta[3]})
    assert (got - (l**3 / (24 * fam7.zeta[3]) + 3)).val >= 20
    with pytest.raises(KeyError):
        evaluate(expr, {"log2": l})


def test_fphi_matrices_follow_shuffle_powers():
    lg, zt = sp.symbols("lg zt")
    assert fphi_matrices(1, lg) == [[lg]]
    assert fphi_matrices(2, lg) == [[2 * lg**2], [0]]
    # the (1^3) entry of a shuffle cube is 3! (log 2)^3
    assert fphi_matrices(3, lg, zt) == [[6 * lg**3, 0], [0, 0], [0, 0], [0, zt]]


@pytest.mark.parametrize("name", ["fam5", "fam7"])
def test_li3_half_expansion_reconstructs(name, request):
    fam = request.getfixturevalue(name)
    l = padic_log(fam.ctx(2))
    exp = expand_li3_half(l, fam.li[3](Fraction(1, 2)), fam.zeta[3], digits=20)
    assert exp.s_rational == Fraction(7, 8)
    assert exp.t_rational == Fraction(1, 6)


def test_word_values_at_one_half_give_t(fam7):
    """Cross-check: the v1^3 word value over the fφ image of (log 2)^3 is t = 1/6."""
    z = Fraction(1, 2)
    lb, l1 = fam7.logz(z), fam7.log1mz(z)
    vals = li3_word_values(lb, l1, fam7.li[2](z), fam7.li[3](z))
    l = padic_log(fam7.ctx(2))
    t = vals[Word([V1, V1, V1])] / (6 * l**3)
    assert (t - Fraction(1, 6)).val >= 20
