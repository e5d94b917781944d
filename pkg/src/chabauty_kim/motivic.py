"""Exact shuffle-algebra calculus and unipotent matrices.

Two alphabets share the same machinery here: the dual words f_w on letters
v_{-i} (Fφ side) and φ_w on letters ν_{-i} (abstract side). Letters carry a
degree, words are tuples of letters, and linear combinations of words
(:class:`ShufflePoly`) multiply by shuffling.

Coefficients are exact (``Fraction`` or sympy expressions) on the symbolic
side. p-adic numbers enter only through :func:`evaluate`, which substitutes
:class:`~chabauty_kim.padic.PadicNumber` values for named symbols.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import sympy as sp

from .padic import PadicNumber, ReconstructionError, rational_reconstruction


class GrouplikeError(ValueError):
    """Coefficient data violates the shuffle relations of a grouplike element."""


class ConjectureFailure(ArithmeticError):
    """ζ_p(3) is indistinguishable from zero, so the weight-3 expansion is undefined."""


# ---------------------------------------------------------------------------
# letters, words, shuffles


@dataclass(frozen=True, order=True)
class Letter:
    name: str
    degree: int = 1

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("letter degree must be positive")

    def __repr__(self):
        return self.name


class Word(tuple):
    """Immutable sequence of letters; concatenation via ``+``."""

    def __new__(cls, letters: Iterable[Letter] = ()):
        return super().__new__(cls, tuple(letters))

    @property
    def degree(self) -> int:
        return sum(a.degree for a in self)

    def __add__(self, other):
        return Word(tuple(self) + tuple(other))

    def __repr__(self):
        return "·".join(a.name for a in self) if self else "∅"


EMPTY = Word()


def word(*letters: Letter) -> Word:
    return Word(letters)


def _is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    if isinstance(c, sp.Basic):
        return sp.expand(c) == 0
    return False


class ShufflePoly:
    """Finite linear combination of words; the product is the shuffle product."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Word, object] | None = None):
        clean = {}
        for w, c in (terms or {}).items():
            if not _is_zero(c):
                clean[Word(w)] = c
        self.terms = clean

    @classmethod
    def of(cls, w: Word, coeff=1) -> "ShufflePoly":
        return cls({w: coeff})

    def __iter__(self):
        return iter(self.terms.items())

    def __getitem__(self, w: Word):
        return self.terms.get(Word(w), 0)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, ShufflePoly):
            return NotImplemented
        return (self - other).terms == {}

    def __add__(self, other: "ShufflePoly") -> "ShufflePoly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out[w] + c if w in out else c
        return ShufflePoly(out)

    def __neg__(self):
        return ShufflePoly({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "ShufflePoly":
        return ShufflePoly({w: c * s for w, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, ShufflePoly):
            return self.scale(other)
        out: dict = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                for w, n in shuffle(w1, w2).terms.items():
                    term = c1 * c2 * n
                    out[w] = out[w] + term if w in out else term
        return ShufflePoly(out)

    def __rmul__(self, s):
        return self.scale(s)

    def __pow__(self, e: int):
        out = ShufflePoly.of(EMPTY)
        for _ in range(e):
            out = out * self
        return out

    def degrees(self) -> set:
        return {w.degree for w in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def pair(self, w: Word):
        """Value of this functional on the word w."""
        return self[w]

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{w!r}" for w, c in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0])))


def shuffle(w1: Word, w2: Word) -> ShufflePoly:
    """Sum of all interleavings of w1 and w2 preserving internal order."""
    w1, w2 = Word(w1), Word(w2)
    n, m = len(w1), len(w2)
    out: dict = {}
    for positions in itertools.combinations(range(n + m), n):
        pos = set(positions)
        it1, it2 = iter(w1), iter(w2)
        w = Word(next(it1) if i in pos else next(it2) for i in range(n + m))
        out[w] = out.get(w, 0) + 1
    return ShufflePoly(out)


def deconcatenation(f: ShufflePoly, reduced: bool = True) -> dict:
    """Coproduct of f on the dual words: w -> sum of w[:i] ⊗ w[i:].

    Returns a dict (left word, right word) -> coefficient. With ``reduced``
    the two edge terms involving the empty word are dropped.
    """
    out: dict = {}
    for w, c in f.terms.items():
        lo, hi = (1, len(w)) if reduced else (0, len(w) + 1)
        for i in range(lo, hi):
            key = (Word(w[:i]), Word(w[i:]))
            out[key] = out[key] + c if key in out else c
    return {k: v for k, v in out.items() if not _is_zero(v)}


def words_of_degree(letters: Sequence[Letter], n: int) -> list:
    """All words of total degree n, in a fixed order (shorter words last)."""
    out = []

    def grow(prefix, remaining):
        if remaining == 0:
            out.append(Word(prefix))
            return
        for a in letters:
            if a.degree <= remaining:
                grow(prefix + [a], remaining - a.degree)

    grow([], n)
    return sorted(out, key=lambda w: (-len(w), [letters.index(a) for a in w]))


# ---------------------------------------------------------------------------
# unitriangular matrices over an arbitrary coefficient ring


class UnipotentMatrix:
    """Upper unitriangular matrix; only strictly-upper entries are stored.

    Entries may be Fractions, sympy expressions or PadicNumbers; missing
    entries are zero, so no ring zero is ever needed.
    """

    __slots__ = ("size", "entries")

    def __init__(self, size: int, entries: Mapping[tuple, object] | None = None):
        self.size = size
        clean = {}
        for (i, j), v in (entries or {}).items():
            if not 0 <= i < j < size:
                raise ValueError(f"entry ({i},{j}) is not strictly upper triangular")
            if not _is_zero(v):
                clean[(i, j)] = v
        self.entries = clean

    @classmethod
    def identity(cls, size: int) -> "UnipotentMatrix":
        return cls(size)

    def __getitem__(self, ij):
        i, j = ij
        if i == j:
            return 1
        return self.entries.get((i, j), 0)

    def nilpotent_part(self) -> "Nilpotent":
        return Nilpotent(self.size, self.entries)

    def __mul__(self, other: "UnipotentMatrix") -> "UnipotentMatrix":
        return (Nilpotent.one(self.size) + self.nilpotent_part()).times(Nilpotent.one(self.size) + other.nilpotent_part()).as_unipotent()

    def log(self) -> "Nilpotent":
        """log(1 + N) = sum (-1)^(j+1) N^j / j; terminates since N^size = 0."""
        N = self.nilpotent_part()
        out = Nilpotent(self.size)
        power = N
        for j in range(1, self.size):
            term = power.scale(Fraction((-1) ** (j + 1), j))
            out = out + term
            power = power.times(N)
        return out

    def to_rows(self, zero=0) -> list:
        return [[1 if i == j else self.entries.get((i, j), zero) for j in range(self.size)] for i in range(self.size)]

    def __repr__(self):
        return f"UnipotentMatrix({self.size}, {self.entries})"


class Nilpotent:
    """Strictly upper triangular matrix (plus an optional identity part).

    ``diag`` is 0 or 1 so the same type covers 1 + N during products.
    """

    __slots__ = ("size", "entries", "diag")

    def __init__(self, size: int, entries: Mapping[tuple, object] | None = None, diag: int = 0):
        self.size = size
        self.entries = {k: v for k, v in (entries or {}).items() if not _is_zero(v)}
        self.diag = diag

    @classmethod
    def one(cls, size: int) -> "Nilpotent":
        return cls(size, {}, 1)

    def __getitem__(self, ij):
        i, j = ij
        if i == j:
            return self.diag
        return self.entries.get((i, j), 0)

    def __add__(self, other: "Nilpotent") -> "Nilpotent":
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out[k] + v if k in out else v
        return Nilpotent(self.size, out, self.diag + other.diag)

    def scale(self, s) -> "Nilpotent":
        return Nilpotent(self.size, {k: v * s for k, v in self.entries.items()}, self.diag * s)

    def times(self, other: "Nilpotent") -> "Nilpotent":
        n = self.size
        out: dict = {}

        def acc(k, v):
            out[k] = out[k] + v if k in out else v

        for (i, l), a in self.entries.items():
            for j in range(l + 1, n):
                b = other.entries.get((l, j))
                if b is not None:
                    acc((i, j), a * b)
            if other.diag:
                acc((i, l), a)
        if self.diag:
            for k, b in other.entries.items():
                acc(k, b)
        return Nilpotent(n, out, self.diag * other.diag)

    def power(self, e: int) -> "Nilpotent":
        out = Nilpotent.one(self.size)
        for _ in range(e):
            out = out.times(self)
        return out

    def exp(self) -> UnipotentMatrix:
        if self.diag:
            raise ValueError("exp is only defined here for nilpotent matrices")
        out = Nilpotent.one(self.size)
        power = Nilpotent.one(self.size)
        for j in range(1, self.size):
            power = power.times(self)
            out = out + power.scale(Fraction(1, math.factorial(j)))
        return out.as_unipotent()

    def as_unipotent(self) -> UnipotentMatrix:
        if self.diag != 1:
            raise ValueError("not unitriangular")
        return UnipotentMatrix(self.size, self.entries)

    def superdiagonal(self, k: int) -> "Nilpotent":
        return Nilpotent(self.size, {(i, j): v for (i, j), v in self.entries.items() if j - i == k})

    def __repr__(self):
        return f"Nilpotent({self.size}, {self.entries}, diag={self.diag})"


# ---------------------------------------------------------------------------
# Deligne's representation on the two-letter alphabet {x, y}

X = Letter("x")
Y = Letter("y")


def xy_word(j: int) -> Word:
    """x^j y."""
    return Word([X] * j + [Y])


def check_grouplike(L: Mapping[Word, object], max_degree: int, tol=None) -> None:
    """Verify L_∅ = 1 and L_u L_v = Σ L_w over shuffles, for pairs of words present in L."""
    if L.get(EMPTY, 1) != 1:
        raise GrouplikeError("L_∅ must be 1")
    words = [Word(w) for w in L if 0 < len(w) and Word(w).degree <= max_degree]
    for u, v in itertools.combinations_with_replacement(words, 2):
        if u.degree + v.degree > max_degree:
            continue
        sh = shuffle(u, v)
        if any(w not in L for w, _ in sh):
            continue
        total = None
        for w, n in sh:
            term = L[w] * n
            total = term if total is None else total + term
        diff = L[u] * L[v] - total
        if isinstance(diff, PadicNumber):
            ok = diff.is_zero(tol) if tol is not None else diff.unit == 0
        else:
            ok = _is_zero(sp.sympify(diff) if not isinstance(diff, (int, Fraction)) else diff)
        if not ok:
            raise GrouplikeError(f"shuffle relation fails for {u!r} ⧢ {v!r}")


def group_matrix(L: Mapping[Word, object], n: int, check: bool = True) -> UnipotentMatrix:
    """(n+1)x(n+1) matrix of Σ L_w w acting on span{x, [xy], [x^2y], ...}.

    Row i, column j < n holds L_x^(j-i)/(j-i)!; the last column holds
    -L_{x^(n-1-i) y}.
    """
    L = {Word(k): v for k, v in L.items()}
    if check:
        check_grouplike(L, n)
    lx = L.get(Word([X]), 0)
    entries = {}
    for i in range(n + 1):
        for j in range(i + 1, n):
            entries[(i, j)] = lx ** (j - i) * Fraction(1, math.factorial(j - i)) if not _is_zero(lx) else 0
        if i < n:
            w = xy_word(n - 1 - i)
            if w in L:
                entries[(i, n)] = -L[w]
    return UnipotentMatrix(n + 1, entries)


def lie_matrix(l: Mapping[Word, object], n: int) -> Nilpotent:
    """Lie-algebra image: superdiagonal l_x, last column -l_{x^j y}."""
    l = {Word(k): v for k, v in l.items()}
    lx = l.get(Word([X]), 0)
    entries = {(i, i + 1): lx for i in range(n - 1)}
    for i in range(n):
        w = xy_word(n - 1 - i)
        if w in l:
            entries[(i, n)] = entries.get((i, n), 0) + (-l[w])
    return Nilpotent(n + 1, entries)


def superdiagonals(M: UnipotentMatrix) -> list:
    """The k-th superdiagonal of log(M) for k = 1..size-1, each as a list."""
    lg = M.log()
    return [[lg[(i, i + k)] for i in range(M.size - k)] for k in range(1, M.size)]


def polylog_character(logz, log1mz, lis: Mapping[int, object]) -> dict:
    """L_x = log z, L_y = log(1 - z), L_{x^(j-1) y} = -Li_j(z) for j >= 2."""
    L = {EMPTY: 1, Word([X]): logz, Word([Y]): log1mz}
    for j, v in lis.items():
        if j >= 2:
            L[xy_word(j - 1)] = -v
    return L


def alpha_matrix(logz, log1mz, lis: Mapping[int, object], n: int) -> UnipotentMatrix:
    """The unipotent Albanese matrix: first row powers of log z, last column the polylogs."""
    return group_matrix(polylog_character(logz, log1mz, lis), n, check=False)


# ---------------------------------------------------------------------------
# weight-3 word values


V1, V2, V3 = Letter("v1", 1), Letter("v2", 2), Letter("v3", 3)
LI3_WORDS = (Word([V1, V1, V1]), Word([V1, V2]), Word([V2, V1]), Word([V3]))


def word_action_matrices(M: UnipotentMatrix) -> dict:
    """Letter v_k -> the k-th superdiagonal of log(M) as a matrix."""
    lg = M.log()
    return {Letter(f"v{k}", k): lg.superdiagonal(k) for k in range(1, M.size)}


def word_value(actions: Mapping[Letter, Nilpotent], w: Word, corner=None):
    size = next(iter(actions.values())).size
    prod = Nilpotent.one(size)
    for a in w:
        prod = prod.times(actions[a])
    i, j = corner or (0, size - 1)
    return prod[(i, j)]


def li3_word_values(logb, log1mb, li2, li3) -> dict:
    """Li_3^{Fφ}(b)(w) for the four words of degree 3.

    Read off as the north-east corner of the product of the superdiagonal
    actions of log of the 4x4 block of the Albanese matrix.
    """
    M = UnipotentMatrix(
        4,
        {
            (0, 1): logb,
            (0, 2): logb * logb * Fraction(1, 2),
            (0, 3): li3,
            (1, 2): logb,
            (1, 3): li2,
            (2, 3): -log1mb,
        },
    )
    acts = word_action_matrices(M)
    return {w: word_value(acts, w) for w in LI3_WORDS}


# ---------------------------------------------------------------------------
# coproducts on polynomial expressions in motivic generators


l2, z3, L4, c1_sym = sp.symbols("log2 zeta3 Li4half c1")
SYMBOLS = {"log2": l2, "zeta3": z3, "Li4half": L4, "c1": c1_sym}


def _left(s: sp.Symbol) -> sp.Symbol:
    return sp.Symbol(f"{s.name}⊗L", commutative=True)


def _right(s: sp.Symbol) -> sp.Symbol:
    return sp.Symbol(f"{s.name}⊗R", commutative=True)


@dataclass
class Tensor:
    """An element of A ⊗ A as a polynomial in left- and right-tagged symbols."""

    expr: sp.Expr
    generators: tuple

    def coordinates(self, basis: Sequence[tuple]) -> list:
        """Coefficients in a basis of pure tensors of monomials; raises if outside the span."""
        gens = [_left(g) for g in self.generators] + [_right(g) for g in self.generators]
        poly = sp.Poly(sp.expand(self.expr), *gens)
        remaining = dict(poly.terms())
        out = []
        for left, right in basis:
            mono = sp.Poly(sp.expand(_tag(left, self.generators, _left) * _tag(right, self.generators, _right)), *gens)
            (exps, coeff), = mono.terms()
            out.append(sp.simplify(remaining.pop(exps, 0) / coeff))
        leftover = {k: v for k, v in remaining.items() if sp.simplify(v) != 0}
        if leftover:
            raise ValueError(f"tensor has components outside the basis: {leftover}")
        return out

    def is_zero(self) -> bool:
        return sp.expand(self.expr) == 0


def _tag(expr, generators, tag):
    return sp.sympify(expr).subs({g: tag(g) for g in generators}, simultaneous=True)


def coproduct(expr, rules: Mapping[sp.Symbol, sp.Expr], generators: Sequence[sp.Symbol]) -> Tensor:
    """Δ(expr) with Δ(g) = rules[g] (in tagged symbols), or primitive if g is not in rules."""
    subs = {}
    for g in generators:
        subs[g] = rules.get(g, _left(g) + _right(g))
    return Tensor(sp.expand(sp.sympify(expr).subs(subs, simultaneous=True)), tuple(generators))


def reduced_coproduct_expr(expr, rules: Mapping[sp.Symbol, sp.Expr], generators: Sequence[sp.Symbol]) -> Tensor:
    """d(f) = Δ(f) - f ⊗ 1 - 1 ⊗ f for homogeneous f of positive weight."""
    full = coproduct(expr, rules, generators).expr
    edge = _tag(expr, generators, _left) + _tag(expr, generators, _right)
    return Tensor(sp.expand(full - edge), tuple(generators))


def reduced_coproduct(entry: tuple, M: UnipotentMatrix, generators: Sequence[sp.Symbol]) -> Tensor:
    """d(κ_ij) = Σ_{i<l<j} κ_il ⊗ κ_lj for the κ-matrix M with entries in the generators."""
    i, j = entry
    total = sp.Integer(0)
    for l in range(i + 1, j):
        a, b = M[(i, l)], M[(l, j)]
        if _is_zero(a) or _is_zero(b):
            continue
        total += _tag(a, generators, _left) * _tag(b, generators, _right)
    return Tensor(sp.expand(total), tuple(generators))


def kappa_rule(entry: tuple, M: UnipotentMatrix, generators: Sequence[sp.Symbol], symbol: sp.Symbol) -> sp.Expr:
    """Full coproduct of a generator defined as the (i, j) entry of the κ-matrix."""
    return _left(symbol) + _right(symbol) + reduced_coproduct(entry, M, generators).expr


def half_kappa_matrix(c1=c1_sym) -> UnipotentMatrix:
    """κ-matrix of the point b = 1/2 in the concrete basis.

    log b = -log 2, -log(1-b) = log 2, Li_2(1/2) = -(log 2)^2/2 and
    Li_3(1/2) = c1 ζ(3) + (log 2)^3/6; Li_4(1/2) stays a generator.
    """
    lb = -l2
    M = UnipotentMatrix(
        5,
        {
            (0, 1): lb,
            (0, 2): lb**2 / 2,
            (0, 3): lb**3 / 6,
            (0, 4): L4,
            (1, 2): lb,
            (1, 3): lb**2 / 2,
            (1, 4): c1 * z3 + l2**3 / 6,
            (2, 3): lb,
            (2, 4): -(l2**2) / 2,
            (3, 4): l2,
        },
    )
    return M


TENSOR_BASIS = (
    (l2, z3),
    (l2, l2**3),
    (l2**2, l2**2),
    (l2**3, l2),
    (z3, l2),
)
A4_BASIS = (l2**4, l2 * z3, L4)


def dB_matrix(c1=c1_sym) -> sp.Matrix:
    """Reduced coproducts of {(log 2)^4, (log 2)ζ(3), Li_4(1/2)} in TENSOR_BASIS, as columns."""
    gens = (l2, z3, L4)
    M = half_kappa_matrix(c1)
    rules = {L4: kappa_rule((0, 4), M, (l2, z3), L4)}
    cols = []
    for b in A4_BASIS:
        t = reduced_coproduct_expr(b, rules, gens)
        # Li4half's own tagged symbols only appear in its edge terms, which cancel.
        cols.append(Tensor(t.expr, (l2, z3)).coordinates(TENSOR_BASIS))
    return sp.Matrix(5, 3, lambda r, c: cols[c][r])


def basis_rank(c1=c1_sym) -> int:
    """Rank of dB; 3 exactly when c1 != 0, certifying the weight-4 basis."""
    return dB_matrix(c1).rank()


# ---------------------------------------------------------------------------
# the abstract basis φ_w on letters ν1, ν3

NU1, NU3 = Letter("ν1", 1), Letter("ν3", 3)
PHI_ALPHABET = (NU1, NU3)


def phi(*letters: Letter) -> ShufflePoly:
    return ShufflePoly.of(Word(letters))


# Normalisation: log 2 = φ1, ζ(3) = φ3.
GENERATOR_IMAGES = {l2: phi(NU1), z3: phi(NU3)}


def monomial_to_phi(expr) -> ShufflePoly:
    """Image of a polynomial in log2, zeta3 in the shuffle algebra of φ-words."""
    poly = sp.Poly(sp.expand(expr), l2, z3)
    out = ShufflePoly()
    for (a, b), coeff in poly.terms():
        term = GENERATOR_IMAGES[l2] ** a * GENERATOR_IMAGES[z3] ** b
        out = out + term.scale(sp.Rational(coeff) if coeff.is_Rational else coeff)
    return out


def tensor_to_phi(t: Tensor) -> dict:
    """Map a tensor over {log2, zeta3} to (word, word) -> coefficient."""
    gensL = (_left(l2), _left(z3))
    gensR = (_right(l2), _right(z3))
    poly = sp.Poly(sp.expand(t.expr), *gensL, *gensR)
    out: dict = {}
    for (a, b, c, d), coeff in poly.terms():
        left = GENERATOR_IMAGES[l2] ** a * GENERATOR_IMAGES[z3] ** b
        right = GENERATOR_IMAGES[l2] ** c * GENERATOR_IMAGES[z3] ** d
        for wl, cl in left:
            for wr, cr in right:
                key = (wl, wr)
                out[key] = out.get(key, 0) + coeff * cl * cr
    return {k: sp.simplify(v) for k, v in out.items() if sp.simplify(v) != 0}


def solve_by_coproduct(target: dict, degree: int, alphabet=PHI_ALPHABET) -> ShufflePoly:
    """The unique combination of degree-n words whose reduced coproduct is ``target``.

    Uniqueness holds when no single letter has the given degree (the kernel
    of d on words of length >= 2 is zero).
    """
    words = words_of_degree(list(alphabet), degree)
    unknowns = sp.symbols(f"u0:{len(words)}")
    acc: dict = {}
    for u, w in zip(unknowns, words):
        for key, c in deconcatenation(ShufflePoly.of(w)).items():
            acc[key] = acc.get(key, 0) + u * c
    keys = set(acc) | set(target)
    eqs = [sp.expand(acc.get(k, 0) - target.get(k, 0)) for k in keys]
    sol = sp.solve(eqs, unknowns, dict=True)
    if len(sol) != 1:
        raise ValueError("coproduct system has no unique solution")
    sol = sol[0]
    free = [u for u in unknowns if u not in sol]
    if free:
        raise ValueError(f"coproduct system is underdetermined in {free}")
    return ShufflePoly({w: sp.simplify(sol[u]) for u, w in zip(unknowns, words)})


def li4half_abstract(c1=c1_sym) -> ShufflePoly:
    """Li_4(1/2) in the φ-basis, solved from its reduced coproduct."""
    M = half_kappa_matrix(c1)
    target = tensor_to_phi(reduced_coproduct((0, 4), M, (l2, z3)))
    return solve_by_coproduct(target, 4)


# ---------------------------------------------------------------------------
# image of λ


def rho_matrices(a, b, d) -> tuple:
    """Images of v_{-1} and v_{-3} under a graded homomorphism into the 5x5 Lie algebra."""
    N1 = Nilpotent(5, {(0, 1): a, (1, 2): a, (2, 3): a, (3, 4): -b})
    N3 = Nilpotent(5, {(1, 4): -d})
    return N1, N3


LAMBDA_COORDS = ("x1'", "x1", "x11", "x111", "x3", "x1111", "x13", "x31")


def lambda_image(a, b, d) -> tuple:
    """Coordinates of λ(ρ) in the φ-basis and the residuals of the five image equations."""
    N1, N3 = rho_matrices(a, b, d)
    coords = {
        "x1'": N1[(2, 3)],
        "x1": N1[(3, 4)],
        "x11": N1.power(2)[(2, 4)],
        "x111": N1.power(3)[(1, 4)],
        "x3": N3[(1, 4)],
        "x1111": N1.power(4)[(0, 4)],
        "x13": N1.times(N3)[(0, 4)],
        "x31": N3.times(N1)[(0, 4)],
    }
    return tuple(coords[k] for k in LAMBDA_COORDS), image_residuals(coords)


def image_residuals(x: Mapping[str, object]) -> tuple:
    """x11 - x1 x1', x111 - x1 x1'^2, x1111 - x1 x1'^3, x13 - x1' x3, x31."""
    xp, x1 = x["x1'"], x["x1"]
    return (
        x["x11"] - x1 * xp,
        x["x111"] - x1 * xp**2,
        x["x1111"] - x1 * xp**3,
        x["x13"] - xp * x["x3"],
        x["x31"],
    )


# concrete coordinates y on the basis
# (log2)', log2, log2^2, log2^3, zeta3, log2^4, log2*zeta3, Li4half
Y_NAMES = ("yl'", "yl", "yl2", "yl3", "yz", "yl4", "ylz", "yL")


def concrete_to_abstract(c1=c1_sym) -> dict:
    """x-coordinates as linear forms in the concrete y-coordinates.

    Each concrete basis element is expanded in φ-words; x_w is the total
    coefficient of φ_w.
    """
    ys = sp.symbols(" ".join(n.replace("'", "p") for n in Y_NAMES))
    y = dict(zip(Y_NAMES, ys))
    images = {
        "yl2": monomial_to_phi(l2**2),
        "yl3": monomial_to_phi(l2**3),
        "yz": monomial_to_phi(z3),
        "yl4": monomial_to_phi(l2**4),
        "ylz": monomial_to_phi(l2 * z3),
        "yL": li4half_abstract(c1),
    }
    word_for = {
        "x11": Word([NU1, NU1]),
        "x111": Word([NU1] * 3),
        "x3": Word([NU3]),
        "x1111": Word([NU1] * 4),
        "x13": Word([NU1, NU3]),
        "x31": Word([NU3, NU1]),
    }
    x = {"x1'": y["yl'"], "x1": y["yl"]}
    for name, w in word_for.items():
        x[name] = sp.expand(sum((images[k][w] * y[k] for k in images), sp.Integer(0)))
    return x, y


def concrete_image_equations(c1=c1_sym) -> list:
    """The λ-image equations rewritten in the concrete coordinates (each expr = 0)."""
    x, _ = concrete_to_abstract(c1)
    return [sp.expand(r) for r in image_residuals(x)]


# ---------------------------------------------------------------------------
# F2 / F4 synthesis

X1, Y1, Y2, Y3, Y4 = sp.symbols("X1 Y1 Y2 Y3 Y4")
AFFINE = (X1, Y1, Y2, Y3, Y4)


def realization_map(y: Mapping[str, sp.Symbol]) -> list:
    """Evaluation of the concrete coordinates in the five affine coordinates."""
    return [
        l2 * y["yl'"],
        l2 * y["yl"],
        l2**2 * y["yl2"],
        l2**3 * y["yl3"] + z3 * y["yz"],
        l2**4 * y["yl4"] + l2 * z3 * y["ylz"] + L4 * y["yL"],
    ]


@dataclass(frozen=True)
class FCoefficients:
    """F2 and F4 as polynomials in X1 = log z, Y1 = -log(1-z), Y_k = Li_k(z).

    Each is a dict mapping exponent tuples over AFFINE to sympy coefficients
    in log2, zeta3, Li4half, c1.
    """

    F2: dict
    F4: dict
    C: sp.Expr

    def evaluate(self, values: Mapping[str, object]) -> tuple:
        return (
            {m: evaluate(c, values) for m, c in self.F2.items()},
            {m: evaluate(c, values) for m, c in self.F4.items()},
        )


def synthesize_relations(c1=c1_sym) -> tuple:
    """Eliminate the concrete coordinates: returns the relations cutting out the image in A^5."""
    eqs = concrete_image_equations(c1)
    _, y = concrete_to_abstract(c1)
    ysym = {k: v for k, v in y.items()}
    target = realization_map(ysym)
    # X1, Y1 determine yl', yl; the image equations then determine everything but yz.
    sol = sp.solve(
        eqs + [AFFINE[0] - target[0], AFFINE[1] - target[1], AFFINE[3] - target[3]],
        [ysym[k] for k in ("yl'", "yl", "yl2", "yl3", "yl4", "ylz", "yL", "yz")],
        dict=True,
    )
    if len(sol) != 1:
        raise ValueError("elimination did not produce a unique parametrization")
    sol = sol[0]
    rel2 = sp.expand(AFFINE[2] - target[2].subs(sol))
    rel4 = sp.expand(AFFINE[4] - target[4].subs(sol))
    return rel2, rel4


def _as_coeff_dict(expr) -> dict:
    poly = sp.Poly(sp.expand(expr), *AFFINE)
    return {m: sp.factor(c) for m, c in poly.terms()}


def f_coefficients(c1=c1_sym) -> FCoefficients:
    """Coefficient formulas of F2 and F4, derived by elimination."""
    rel2, rel4 = synthesize_relations(c1)
    # normalise so the leading Y coefficient is 1
    rel2 = sp.expand(rel2 / sp.Poly(rel2, *AFFINE).coeff_monomial(Y2))
    rel4 = sp.expand(rel4 / sp.Poly(rel4, *AFFINE).coeff_monomial(Y4))
    C = l2**3 / (24 * z3) + L4 / (l2 * z3)
    return FCoefficients(_as_coeff_dict(rel2), _as_coeff_dict(rel4), C)


def evaluate(expr, values: Mapping[str, object]):
    """Evaluate a sympy expression, substituting the named values.

    Rationals stay Fractions; any symbol is looked up by name, so p-adic
    values propagate through +, *, and integer powers.
    """
    expr = sp.sympify(expr)
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q))
    if expr.is_Symbol:
        if expr.name not in values:
            raise KeyError(f"no value supplied for {expr.name}")
        return values[expr.name]
    if expr.is_Add:
        terms = [evaluate(a, values) for a in expr.args]
        out = terms[0]
        for t in terms[1:]:
            out = out + t
        return out
    if expr.is_Mul:
        factors = [evaluate(a, values) for a in expr.args]
        out = factors[0]
        for f in factors[1:]:
            out = out * f
        return out
    if expr.is_Pow:
        base, e = expr.args
        if not e.is_Integer:
            raise ValueError(f"non-integer exponent in {expr}")
        b = evaluate(base, values)
        e = int(e)
        if e < 0:
            return 1 / (b ** (-e))
        return b**e
    raise TypeError(f"cannot evaluate {expr!r}")


# ---------------------------------------------------------------------------
# the Fφ matrices and the weight-3 expansion


F1, F2w, F3w = Letter("f1", 1), Letter("f2", 2), Letter("f3", 3)
FPHI_BASES = {
    1: (Word([F1]),),
    2: (Word([F1, F1]), Word([F2w])),
    3: (Word([F1, F1, F1]), Word([F1, F2w]), Word([F2w, F1]), Word([F3w])),
}


def fphi_matrices(level: int, log2, zeta3=None) -> list:
    """Matrix of Fφ on the weight-``level`` basis, in the f_w basis.

    Columns are (log 2)^n and, at level 3, ζ(3); entries come from shuffle
    powers of (log 2) f_1, so the (1^n) entry is n! (log 2)^n.
    """
    if level not in FPHI_BASES:
        raise ValueError("levels 1, 2 and 3 are supported")
    f1 = ShufflePoly.of(Word([F1]), log2)
    columns = [f1**level]
    if level == 3:
        if zeta3 is None:
            raise ValueError("level 3 needs ζ(3)")
        columns.append(ShufflePoly.of(Word([F3w]), zeta3))
    return [[col[w] for col in columns] for w in FPHI_BASES[level]]


@dataclass(frozen=True)
class Li3Expansion:
    s: object
    t: object
    s_rational: Fraction | None = None
    t_rational: Fraction | None = None


def expand_li3(logb, log1mb, li3b, log2, zeta3) -> tuple:
    """Li_3(b) = s ζ(3) + t (log 2)^3, read off from the words v1^3 and v3."""
    if isinstance(zeta3, PadicNumber) and zeta3.unit == 0:
        raise ConjectureFailure("ζ_p(3) is zero to the working precision")
    t = -(logb**2) * log1mb / (6 * log2**3)
    s = (Fraction(1, 6) * logb**2 * log1mb + li3b) / zeta3
    return s, t


def stable_reconstruction(x: PadicNumber, digits: int, drop: int = 4) -> Fraction:
    """Rational reconstruction that must agree at ``digits`` and ``digits - drop``."""
    hi = rational_reconstruction(x, digits)
    lo = rational_reconstruction(x, digits - drop)
    if hi != lo:
        raise ReconstructionError(f"reconstruction unstable: {hi} at {digits} digits vs {lo} at {digits - drop}")
    return hi


def expand_li3_half(log2, li3half, zeta3, digits: int | None = None) -> Li3Expansion:
    """s and t for b = 1/2, with rational reconstructions when ``digits`` is given."""
    s, t = expand_li3(-log2, -log2, li3half, log2, zeta3)
    if digits is None:
        return Li3Expansion(s, t)
    rs = rt = None
    try:
        rs = stable_reconstruction(s, digits)
    except ReconstructionError:
        pass
    try:
        rt = stable_reconstruction(t, digits)
    except ReconstructionError:
        pass
    return Li3Expansion(s, t, rs, rt)


@dataclass(frozen=True)
class SymbolicConstant:
    """A named constant with its p-adic value and, if found, a rational reconstruction."""

    name: str
    value: object
    rational: Fraction | None = None

    @property
    def symbol(self) -> sp.Symbol:
        return SYMBOLS[self.name]
