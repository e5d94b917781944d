"""Coleman polylogarithms on the residue disks of X(Z_p).

X(Z_p) is the set of z in Z_p with z and 1 - z units, i.e. the residue disks
a = 2, ..., p-1. Each disk is centred at the Teichmüller lift ω(a). Frobenius
z -> z^p maps every such disk to itself and fixes ω(a).

Construction of Li_k on a disk:

* Li_1 = -log(1 - z) directly.
* g_k(z) = Li_k(z) - p^-k Li_k(z^p) is analytic away from the disk at 1, so it
  is fitted once from its Taylor expansion at 0 (see :func:`ml_fit`).
* At the centre ω, Frobenius gives Li_k(ω) (1 - p^-k) = g_k(ω).
* The remaining coefficients come from dLi_k = Li_{k-1} dz/z.

The Frobenius identity on the whole disk is then a cross-check, not an input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Iterable, Sequence

from .padic import (
    INFINITY,
    PadicContext,
    PadicNumber,
    PrecisionError,
    floor_log,
    padic_log,
    teichmuller,
)
from .series import DiskSeries, compose_poly, find_roots, integrate_dlog

log = logging.getLogger(__name__)


class FitError(PrecisionError):
    """The g_k fit failed validation; more terms or precision are needed."""


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------------------
# g_k = Li_k(z) - p^-k Li_k(z^p)


def g_taylor_at_zero(k: int, M: int, ctx: PadicContext) -> list:
    """e_0..e_M with e_m = 1/m^k for p not dividing m, else 0."""
    if k < 1 or M < 1:
        raise ValueError("need k >= 1 and M >= 1")
    p = ctx.p
    out = [ctx.zero()]
    for m in range(1, M + 1):
        out.append(ctx.zero() if m % p == 0 else ctx.element(Fraction(1, m**k)))
    return out


def _taylor_ints(k: int, M: int, p: int, mod: int) -> list:
    return [0] + [pow(pow(m, k, mod), -1, mod) if m % p else 0 for m in range(1, M + 1)]


@dataclass(frozen=True)
class GFunction:
    """g_k(z) = sum_j d_j (z-1)^-j, valid for |z - 1| = 1.

    ``y_coeffs`` are the same function's Taylor coefficients in y = z/(z-1),
    which maps the region |z - 1| > r < 1 onto a disk of radius > 1 about 0.
    """

    ctx: PadicContext
    k: int
    ml_coeffs: tuple
    y_coeffs: tuple
    report: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def J(self) -> int:
        return len(self.ml_coeffs) - 1

    def _mod(self) -> int:
        return self.ctx.p**self.ctx.N

    def __call__(self, z) -> PadicNumber:
        ctx = self.ctx
        z = ctx.element(z)
        w = z - 1
        if not w.is_unit():
            raise DomainError("g_k is evaluated only where z - 1 is a unit")
        mod = self._mod()
        wi = w.inverse().lift_int() % mod
        acc = 0
        for d in reversed(self.ml_coeffs[1:]):
            acc = (acc + d) * wi % mod
        acc = (acc + self.ml_coeffs[0]) % mod
        return ctx.from_parts(0, acc, ctx.N)

    def disk_series(self, center: PadicNumber, T: int) -> DiskSeries:
        """Expansion of g_k about a unit centre c with c - 1 a unit."""
        ctx = self.ctx
        mod = self._mod()
        c = center
        cm1 = c - 1
        if not cm1.is_unit():
            raise DomainError("centre lies in the disk of 1")
        y0 = (c / cm1).lift_int() % mod
        # Taylor shift of B(y) = sum b_n y^n to y0: G_i = B^(i)(y0)/i!, by
        # repeated synthetic division by (y - y0).
        poly = list(self.y_coeffs)
        G = [0] * (T + 1)
        for i in range(T + 1):
            if not poly:
                break
            rem = 0
            quot = [0] * (len(poly) - 1)
            for n in range(len(poly) - 1, -1, -1):
                rem = (rem * y0 + poly[n]) % mod
                if n:
                    quot[n - 1] = rem
            G[i] = rem
            poly = quot
        # delta(t) = y(c+t) - y0 = -t / ((c-1)^2 (1 + t/(c-1)))
        inv = cm1.inverse().lift_int() % mod
        inv2 = inv * inv % mod
        delta = [0] * (T + 1)
        q = (-inv2) % mod
        for j in range(1, T + 1):
            delta[j] = q
            q = q * (-inv) % mod
        out = [0] * (T + 1)
        power = [1] + [0] * T
        for i in range(T + 1):
            if i:
                power = _mul_trunc(power, delta, T, mod)
            gi = G[i]
            if gi:
                for j in range(i, T + 1):
                    if power[j]:
                        out[j] = (out[j] + gi * power[j]) % mod
        coeffs = tuple(ctx.from_parts(0, x, ctx.N) for x in out)
        return DiskSeries(c, coeffs, 0, 0)


def _mul_trunc(a, b, T, mod):
    out = [0] * (T + 1)
    for i, x in enumerate(a):
        if x:
            for j in range(0, T + 1 - i):
                if b[j]:
                    out[i + j] = (out[i + j] + x * b[j]) % mod
    return out


def default_fit_size(p: int, K: int) -> int:
    """Number of y-coefficients needed for v(b_n) >= K beyond the cut."""
    return (p - 1) * (K + 6) + 2 * p


def ml_fit(k: int, ctx: PadicContext, J: int | None = None, M: int | None = None) -> GFunction:
    """Fit g_k = sum_{j<=J} d_j (z-1)^-j against its Taylor series at 0.

    The re-expansion of (z-1)^-j about 0 is sum_m (-1)^j C(m+j-1, m) z^m; the
    resulting integer system is inverted exactly through y = z/(z-1), where
    the Taylor transform is triangular: b_n = sum_m (-1)^m C(n-1, m-1) e_m and
    d_j = sum_n b_n C(n, j). Coefficients m in (J, M] are held out and must
    be reproduced, which certifies the decay of the dropped terms.
    """
    p, K = ctx.p, ctx.N
    mod = p**K
    if J is None:
        J = default_fit_size(p, K)
    if M is None:
        M = J + 2 * p
    if J > M:
        raise ValueError("J must not exceed M")
    e = _taylor_ints(k, M, p, mod)
    # binomial transform: b_n = sum_{m=1}^n (-1)^m C(n-1, m-1) e_m
    b = [0] * (M + 1)
    row = [1]  # C(n-1, .)
    for n in range(1, M + 1):
        if n > 1:
            new = [1] * n
            for i in range(1, n - 1):
                new[i] = (row[i - 1] + row[i]) % mod
            row = new
        s = 0
        for m in range(1, n + 1):
            em = e[m]
            if em:
                term = row[m - 1] * em
                s = s - term if m % 2 else s + term
        b[n] = s % mod
    # d_j = sum_{n=j}^{J} b_n C(n, j)
    d = [0] * (J + 1)
    row = [1]
    for n in range(0, J + 1):
        if n:
            new = [1] * (n + 1)
            for i in range(1, n):
                new[i] = (row[i - 1] + row[i]) % mod
            row = new
        bn = b[n]
        if bn:
            for j in range(n + 1):
                d[j] = (d[j] + bn * row[j]) % mod
    g = GFunction(ctx, k, tuple(d), tuple(b[: J + 1]))
    report = validate_fit(g, b, K)
    if not report["ok"]:
        raise FitError(f"g_{k} fit rejected: {report}")
    return GFunction(ctx, k, g.ml_coeffs, g.y_coeffs, report)


def _int_val(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


def validate_fit(g: GFunction, b_all: Sequence[int], K: int, slack: int = 4) -> dict:
    """Check d_0 ~ 0, decay at the cut, and the held-out Taylor coefficients."""
    p = g.ctx.p
    mod = p**K
    J = g.J
    v_d0 = _int_val(g.ml_coeffs[0] % mod, p, K)
    window = g.ml_coeffs[max(1, J - p) :]
    v_tail = min((_int_val(x % mod, p, K) for x in window), default=K)
    # held out: e_m predicted from b_1..b_J versus the true e_m, for m in (J, M]
    heldout = K
    M = len(b_all) - 1
    if M > J:
        for m in range(J + 1, M + 1):
            # error = sum_{n=J+1}^{m} (-1)^n C(m-1, n-1) b_n
            err = sum((-1) ** n * comb(m - 1, n - 1) * b_all[n] for n in range(J + 1, m + 1)) % mod
            heldout = min(heldout, _int_val(err, p, K))
    ok = v_d0 >= K - slack and v_tail >= K - slack and heldout >= K - slack
    return {"ok": ok, "v_d0": v_d0, "v_tail": v_tail, "heldout": heldout, "J": J, "M": M}


# ---------------------------------------------------------------------------
# Coleman functions


@dataclass(frozen=True)
class ColemanFunction:
    """A locally analytic function given by one series per residue disk."""

    ctx: PadicContext
    pieces: dict
    name: str = ""

    @property
    def domain(self) -> tuple:
        return tuple(sorted(self.pieces))

    def piece(self, a: int) -> DiskSeries:
        return self.pieces[a]

    def _binary(self, other, op, name=""):
        if isinstance(other, ColemanFunction):
            if set(other.pieces) != set(self.pieces):
                raise DomainError("Coleman functions live on different domains")
            pieces = {a: op(self.pieces[a], other.pieces[a]) for a in self.domain}
        else:
            pieces = {a: op(self.pieces[a], other) for a in self.domain}
        return ColemanFunction(self.ctx, pieces, name)

    def __add__(self, other):
        return self._binary(other, lambda f, g: f + g)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda f, g: f - g)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ColemanFunction(self.ctx, {a: -f for a, f in self.pieces.items()}, self.name)

    def __mul__(self, other):
        return self._binary(other, lambda f, g: f * g)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        return ColemanFunction(self.ctx, {a: f**e for a, f in self.pieces.items()})

    def named(self, name: str) -> "ColemanFunction":
        return ColemanFunction(self.ctx, self.pieces, name)

    def __call__(self, z) -> PadicNumber:
        return coleman_eval(self, z)

    def zeroes(self, **kw) -> list:
        out = []
        for a in self.domain:
            out.extend(find_roots(self.pieces[a], **kw).roots)
        return out


def coleman_algebra(f: ColemanFunction, g, op: str) -> ColemanFunction:
    ops: dict[str, Callable] = {
        "add": lambda: f + g,
        "sub": lambda: f - g,
        "mul": lambda: f * g,
        "scale": lambda: f * g,
        "pow": lambda: f**g,
    }
    if op not in ops:
        raise ValueError(f"unknown operation {op!r}")
    return ops[op]()


def residue_of(z: PadicNumber) -> int:
    if z.val != 0:
        raise DomainError("point is not a unit")
    return z.residue()


def coleman_eval(f: ColemanFunction, z) -> PadicNumber:
    ctx = f.ctx
    z = ctx.element(z)
    if not z.unit or z.val != 0:
        raise DomainError(f"{z!r} is not in X(Z_{ctx.p})")
    a = z.residue()
    if a not in f.pieces:
        raise DomainError(f"residue {a} is outside the domain (residues 0 and 1 are excluded)")
    piece = f.pieces[a]
    return piece(z - piece.center)


# ---------------------------------------------------------------------------
# the family


def default_truncation(p: int, K: int, growth: int) -> int:
    """Smallest T with j - growth*floor_log(j) >= K for every j > T."""
    T = K
    while any(j - growth * floor_log(j, p) < K for j in range(T + 1, T + 2 + 2 * p)):
        T += 1
    return T


def domain_residues(p: int) -> list:
    return list(range(2, p))


def log_series(c: PadicNumber, T: int) -> DiskSeries:
    """log z = log c + log(1 + t/c) about a unit centre c."""
    cinv = c.inverse()
    coeffs = [padic_log(c)]
    q = cinv
    for j in range(1, T + 1):
        term = q / j
        coeffs.append(term if j % 2 else -term)
        q = q * cinv
    return DiskSeries(c, tuple(coeffs), 0, 1)


def log1m_series(c: PadicNumber, T: int) -> DiskSeries:
    """log(1 - z) = log(1 - c) + log(1 - t/(1-c)) about c."""
    u = 1 - c
    uinv = u.inverse()
    coeffs = [padic_log(u)]
    q = uinv
    for j in range(1, T + 1):
        coeffs.append(-(q / j))
        q = q * uinv
    return DiskSeries(c, tuple(coeffs), 0, 1)


@dataclass
class PolylogFamily:
    ctx: PadicContext
    kmax: int
    T: int
    logz: ColemanFunction
    log1mz: ColemanFunction
    li: dict  # k -> ColemanFunction
    g: dict  # k -> GFunction
    zeta: dict  # k -> PadicNumber
    centers: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.ctx.p

    def Li(self, k: int) -> ColemanFunction:
        return self.li[k]

    def log(self, z) -> PadicNumber:
        return padic_log(self.ctx.element(z))

    def zeta_value(self, k: int) -> PadicNumber:
        return self.zeta[k]


def frobenius_constant(k: int, gval: PadicNumber) -> PadicNumber:
    """Li_k(ω) from g_k(ω): Li_k(ω)(1 - p^-k) = g_k(ω) since ω^p = ω."""
    p = gval.p
    return gval.scale_by_p(k) / (p**k - 1)


def frobenius_solve(k: int, g: GFunction, li_lower: ColemanFunction) -> ColemanFunction:
    """Li_k on every disk from g_k and Li_{k-1}."""
    ctx = li_lower.ctx
    pieces = {}
    for a, lower in li_lower.pieces.items():
        c = lower.center
        const = frobenius_constant(k, g(c))
        pieces[a] = integrate_dlog(lower, const)
    return ColemanFunction(ctx, pieces, f"Li{k}")


def zeta_from_minus_one(k: int, li_k: ColemanFunction) -> PadicNumber:
    """ζ_p(k) = Li_k(-1) / (2^(1-k) - 1), from Li_k(z^2) = 2^(k-1)(Li_k(z) + Li_k(-z)) at z = 1."""
    if k < 2:
        raise ValueError("ζ_p(1) is undefined")
    return coleman_eval(li_k, -1) / (Fraction(1, 2 ** (k - 1)) - 1)


def build_family(ctx: PadicContext, kmax: int = 4, T: int | None = None, fit_size: int | None = None) -> PolylogFamily:
    """Construct log z, log(1-z), Li_1..Li_kmax and ζ_p(2..kmax)."""
    p, K = ctx.p, ctx.N
    if T is None:
        T = default_truncation(p, K, kmax + 1)
    centers = {a: teichmuller(a, ctx) for a in domain_residues(p)}
    logz = ColemanFunction(ctx, {a: log_series(c, T) for a, c in centers.items()}, "log z")
    log1mz = ColemanFunction(ctx, {a: log1m_series(c, T) for a, c in centers.items()}, "log(1-z)")
    li = {1: (-log1mz).named("Li1")}
    gs = {}
    for k in range(2, kmax + 1):
        log.debug("fitting g_%d for p=%d", k, p)
        gs[k] = ml_fit(k, ctx, J=fit_size)
        li[k] = frobenius_solve(k, gs[k], li[k - 1])
    zeta = {k: zeta_from_minus_one(k, li[k]) for k in range(2, kmax + 1)}
    return PolylogFamily(ctx, kmax, T, logz, log1mz, li, gs, zeta, centers)


def Lip(family: PolylogFamily, k: int, z) -> PadicNumber:
    return coleman_eval(family.li[k], z)


# ---------------------------------------------------------------------------
# residual checks


def ode_residual(family: PolylogFamily, k: int) -> int:
    """min over disks and coefficients of v((c+t) dLi_k/dt - Li_{k-1})."""
    worst = INFINITY
    for a in family.li[k].domain:
        f = family.li[k].pieces[a]
        lower = family.li[k - 1].pieces[a] if k > 1 else None
        df = f.derivative()
        z = DiskSeries.identity(f.center, f.trunc)
        lhs = (z * df).truncate(f.trunc - 1)
        if k == 1:
            # dLi_1 = dz/(1-z):  z dLi_1/dt = z/(1-z), check (1-z) dLi_1/dt = 1
            one_minus = DiskSeries.constant(f.center, 1, f.trunc) - z
            lhs = (one_minus * df).truncate(f.trunc - 1)
            rhs = DiskSeries.constant(f.center, 1, f.trunc - 1)
        else:
            rhs = lower.truncate(f.trunc - 1)
        for x, y in zip(lhs.coeffs, rhs.coeffs):
            d = x - y
            worst = min(worst, d.val)
    return worst


def frobenius_residual(family: PolylogFamily, k: int, residues: Iterable[int] | None = None, T: int | None = None) -> int:
    """min over disks/coefficients of v(Li_k(z) - p^-k Li_k(z^p) - g_k(z))."""
    ctx = family.ctx
    p = ctx.p
    f = family.li[k]
    T = T or min(family.T, ctx.N)
    if k == 1:
        g = None
    else:
        g = family.g[k]
    worst = INFINITY
    for a in residues or f.domain:
        piece = f.pieces[a].truncate(T)
        c = piece.center
        frob = compose_poly(piece, c, T)
        if g is not None:
            gs = g.disk_series(c, T)
        else:
            # g_1 = -log(1-z) + p^-1 log(1-z^p)
            gs = -family.log1mz.pieces[a].truncate(T) + compose_poly(family.log1mz.pieces[a].truncate(T), c, T).scale(Fraction(1, p))
        res = piece - frob.scale(Fraction(1, p**k)) - gs
        for x in res.coeffs:
            worst = min(worst, x.val)
    return worst


def functional_equation_residuals(family: PolylogFamily, z) -> dict:
    """Valuations of the Li_2/Li_3 functional equations and the inversion law at z.

    Identities whose auxiliary points leave X(Z_p) are reported as None.
    """
    ctx = family.ctx
    z = ctx.element(z)
    L = lambda k, x: coleman_eval(family.li[k], x)
    lg = padic_log

    def inside(x):
        return x.is_unit() and (1 - x).is_unit()

    out = {}
    one_m = 1 - z
    w = z / (z - 1)
    lz, l1 = lg(z), lg(one_m)
    out["li2_reflection"] = (L(2, z) + L(2, one_m) + lz * l1).val
    out["li2_landen"] = (L(2, z) + L(2, w) + Fraction(1, 2) * l1 * l1).val
    if 3 in family.li:
        zeta3 = family.zeta[3]
        e3 = L(3, z) + L(3, one_m) + L(3, w) - Fraction(1, 6) * l1**3 + Fraction(1, 2) * lz * l1**2 - zeta3
        out["li3_three_term"] = e3.val
        sq = z * z
        if inside(sq) and inside(-z):
            out["li3_duplication"] = (L(3, sq) - 4 * L(3, z) - 4 * L(3, -z)).val
        else:
            out["li3_duplication"] = None
    inv = 1 / z
    for k in range(1, family.kmax + 1):
        r = L(k, z) + (-1) ** k * L(k, inv) + Fraction(1, factorial(k)) * lz**k
        out[f"inversion{k}"] = r.val
    return out


# ---------------------------------------------------------------------------
# common zeros


@dataclass
class CommonZeros:
    points: list
    roots: list  # per function: list of RootRecord
    strassman: list  # per function: total count
    warnings: list


def common_zero_search(fs: Sequence[ColemanFunction], match_digits: int = 20) -> CommonZeros:
    """Roots of fs[0] that are (to match_digits) roots of every other function."""
    if not fs:
        raise ValueError("need at least one function")
    domain = fs[0].domain
    all_roots = [[] for _ in fs]
    counts = [0 for _ in fs]
    warnings = []
    for a in domain:
        for i, f in enumerate(fs):
            search = find_roots(f.pieces[a])
            counts[i] += search.strassman
            all_roots[i].extend(search.roots)
            for r in search.roots:
                if not r.certified:
                    warnings.append(f"{f.name or f'f{i}'}: uncertified root near {r.root!r} (multiplicity {r.multiplicity})")
            if search.nonrational:
                log.debug("%s: %d roots on disk %d are not in Z_p", f.name, search.nonrational, a)
    points = []
    for r in all_roots[0]:
        z = r.root
        ok = True
        for i in range(1, len(fs)):
            near = any((z - s.root).val >= match_digits for s in all_roots[i])
            if not near or not coleman_eval(fs[i], z).is_zero(match_digits):
                ok = False
                break
        if ok:
            points.append(z)
    return CommonZeros(points, all_roots, counts, warnings)


def common_zeroes(fs: Sequence[ColemanFunction], match_digits: int = 20) -> list:
    return common_zero_search(fs, match_digits).points
