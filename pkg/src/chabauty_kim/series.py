"""Truncated power series on residue disks and their zeros.

A :class:`DiskSeries` is ``sum a_j t^j`` in the local coordinate ``t = z - c``
on the disk ``v(t) >= 1``. Besides the stored coefficients it carries a
growth bound ``v(a_j) >= base - growth * floor(log_p j)`` valid for *every*
index, stored or omitted; that is what turns truncation into a certified
error term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

from .padic import INFINITY, PadicContext, PadicNumber, PrecisionError, floor_log


class CenterMismatch(ValueError):
    pass


class InconclusiveError(PrecisionError):
    """Coefficient valuations are not determined at the available precision."""


@dataclass(frozen=True)
class DiskSeries:
    center: PadicNumber
    coeffs: tuple
    base: int = 0
    growth: int = 0

    def __post_init__(self):
        if not isinstance(self.coeffs, tuple):
            object.__setattr__(self, "coeffs", tuple(self.coeffs))

    # -- construction -------------------------------------------------------

    @classmethod
    def constant(cls, center: PadicNumber, value, T: int) -> "DiskSeries":
        ctx = center.ctx
        value = ctx.element(value)
        if value.unit:
            base = value.val
        else:
            base = 0 if value.is_exact_zero() else value.prec
        return cls(center, (value,) + (ctx.zero(),) * T, int(base))

    @classmethod
    def identity(cls, center: PadicNumber, T: int) -> "DiskSeries":
        """The coordinate function z = c + t."""
        ctx = center.ctx
        coeffs = [center, ctx.one()] + [ctx.zero()] * (T - 1)
        return cls(center, tuple(coeffs[: T + 1]), min(0, center.val))

    @property
    def ctx(self) -> PadicContext:
        return self.center.ctx

    @property
    def trunc(self) -> int:
        return len(self.coeffs) - 1

    def coefficient_bound(self, j: int) -> int:
        """Lower bound on v(a_j) from the growth law."""
        return self.base - self.growth * floor_log(max(j, 1), self.ctx.p)

    @property
    def tail_bound(self) -> int:
        """Valuation bound for the first omitted coefficient."""
        return self.coefficient_bound(self.trunc + 1)

    def truncation_error(self, vt: int = 1) -> int:
        """Lower bound for v(sum_{j>T} a_j t^j) when v(t) >= vt >= 1."""
        p = self.ctx.p
        T = self.trunc
        best = None
        # j*vt - growth*floor_log(j) is nondecreasing past a short window.
        for j in range(T + 1, T + 2 + 2 * p):
            b = self.base + j * vt - self.growth * floor_log(j, p)
            best = b if best is None else min(best, b)
        return best

    def value_precision(self, vt: int = 1) -> int:
        """Absolute precision of a value at a point with v(t) >= vt."""
        prec = self.truncation_error(vt)
        for j, a in enumerate(self.coeffs):
            prec = min(prec, a.prec + j * vt)
        return prec

    def _check(self, other: "DiskSeries"):
        if other.center != self.center:
            raise CenterMismatch(f"centers differ: {self.center!r} vs {other.center!r}")

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, DiskSeries):
            return self + DiskSeries.constant(self.center, other, self.trunc)
        self._check(other)
        T = min(self.trunc, other.trunc)
        coeffs = tuple(a + b for a, b in zip(self.coeffs[: T + 1], other.coeffs[: T + 1]))
        return DiskSeries(self.center, coeffs, min(self.base, other.base), max(self.growth, other.growth))

    __radd__ = __add__

    def __neg__(self):
        return DiskSeries(self.center, tuple(-a for a in self.coeffs), self.base, self.growth)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, DiskSeries):
            return self.scale(other)
        self._check(other)
        T = min(self.trunc, other.trunc)
        a, b = self.coeffs, other.coeffs
        zero = self.ctx.zero()
        out = []
        for j in range(T + 1):
            s = zero
            for i in range(j + 1):
                s = s + a[i] * b[j - i]
            out.append(s)
        return DiskSeries(self.center, tuple(out), self.base + other.base, self.growth + other.growth)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers of disk series are not supported")
        result = DiskSeries.constant(self.center, 1, self.trunc)
        for _ in range(e):
            result = result * self
        return result

    def scale(self, s) -> "DiskSeries":
        s = self.ctx.element(s)
        if s.is_exact_zero():
            return DiskSeries(self.center, tuple(self.ctx.zero() for _ in self.coeffs), 0, 0)
        return DiskSeries(self.center, tuple(a * s for a in self.coeffs), self.base + s.val, self.growth)

    def truncate(self, T: int) -> "DiskSeries":
        return DiskSeries(self.center, self.coeffs[: T + 1], self.base, self.growth)

    # -- calculus -----------------------------------------------------------

    def __call__(self, t) -> PadicNumber:
        """Evaluate at local coordinate t (v(t) >= 1)."""
        t = self.ctx.element(t)
        if t.is_exact_zero():
            return self.coeffs[0]
        if t.unit and t.val < 1:
            raise ValueError("evaluation point is outside the residue disk")
        vt = max(1, t.val)
        acc = self.ctx.zero()
        for a in reversed(self.coeffs):
            acc = acc * t + a
        return acc.add_bigoh(self.truncation_error(vt))

    def at(self, z) -> PadicNumber:
        """Evaluate at a point z of the disk."""
        return self(self.ctx.element(z) - self.center)

    def derivative(self) -> "DiskSeries":
        coeffs = tuple(a * j for j, a in enumerate(self.coeffs) if j) + (self.ctx.zero(),)
        return DiskSeries(self.center, coeffs, self.base - self.growth, self.growth)

    def recenter(self, new_center: PadicNumber) -> "DiskSeries":
        """Re-expand about a point of the same disk (Taylor shift by d = new - old)."""
        d = new_center - self.center
        if d.unit and d.val < 1:
            raise CenterMismatch("new center is not in the disk")
        T = self.trunc
        err = self.truncation_error(max(1, d.val if d.unit else 1))
        zero = self.ctx.zero()
        out = []
        for i in range(T + 1):
            s = zero
            dpow = self.ctx.one()
            for j in range(i, T + 1):
                s = s + self.coeffs[j] * dpow * comb(j, i)
                dpow = dpow * d
            out.append(s.add_bigoh(err) if i == 0 else s)
        return DiskSeries(new_center, tuple(out), self.base, self.growth)


def series_arith(f: DiskSeries, g, op: str) -> DiskSeries:
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    if op == "scale":
        return f.scale(g)
    raise ValueError(f"unknown series operation {op!r}")


def frobenius_polynomial(c: PadicNumber, target: PadicNumber, T: int) -> list:
    """Coefficients in t of (c+t)^p - target, truncated at degree T."""
    ctx = c.ctx
    p = ctx.p
    out = [c**p - target]
    for j in range(1, min(p, T) + 1):
        out.append(c ** (p - j) * comb(p, j))
    return out + [ctx.zero()] * (T - len(out) + 1)


def compose_poly(f: DiskSeries, c: PadicNumber, T=None) -> DiskSeries:
    """Series of f(z^p) about c, where f is expanded about a point of the disk of c^p."""
    ctx = c.ctx
    T = f.trunc if T is None else T
    cp = c**ctx.p
    d = cp - f.center
    if d.unit and d.val < 1:
        raise CenterMismatch("z -> z^p does not map the disk of c into the disk of f")
    if d.unit:
        f = f.recenter(cp)
    q = frobenius_polynomial(c, f.center, T)
    zero = ctx.zero()
    deg = min(ctx.p, T)
    acc = [zero] * (T + 1)
    for a in reversed(f.coeffs[: T + 1]):
        new = [zero] * (T + 1)
        for i, x in enumerate(acc):
            if x.is_exact_zero():
                continue
            for j in range(1, min(deg, T - i) + 1):
                new[i + j] = new[i + j] + x * q[j]
        new[0] = new[0] + a
        acc = new
    return DiskSeries(c, tuple(acc), f.base, f.growth)


def integrate_dlog(f: DiskSeries, constant) -> DiskSeries:
    """The series F with F(c) = constant and dF = f dz/z on the disk of c."""
    ctx = f.ctx
    c = f.center
    if not c.is_unit():
        raise ValueError("integrate_dlog needs a unit center")
    constant = ctx.element(constant)
    cinv = c.inverse()
    out = [constant]
    h = ctx.zero()
    for j, a in enumerate(f.coeffs[:-1]):
        h = (a - h) * cinv
        out.append(h / (j + 1))
    cbase = constant.val if constant.unit else f.base
    base = min(f.base, cbase if cbase != INFINITY else f.base)
    return DiskSeries(c, tuple(out), int(base), f.growth + 1)


# ---------------------------------------------------------------------------
# zeros


@dataclass(frozen=True)
class RootRecord:
    root: PadicNumber
    multiplicity: int
    certified: bool
    residual_valuation: float

    def to_json(self) -> dict:
        res = self.residual_valuation
        return {
            "root": self.root.to_json(),
            "multiplicity": self.multiplicity,
            "certified": self.certified,
            "residual_valuation": "inf" if res == INFINITY else int(res),
        }


@dataclass
class RootSearch:
    """Result of a root search on one disk."""

    roots: list = field(default_factory=list)
    strassman: int = 0
    nonrational: int = 0


def _scaled(f: DiskSeries) -> list:
    return [a.scale_by_p(j) for j, a in enumerate(f.coeffs)]


def _strassman(b: Sequence[PadicNumber], tail: int):
    """(count, min valuation) for sum b_j u^j on |u| <= 1, or raise InconclusiveError."""
    known = [x.val for x in b if x.unit]
    if not known:
        raise InconclusiveError("series is zero to the available precision")
    m = min(known)
    if tail <= m:
        raise InconclusiveError("truncation tail is not below the dominant coefficient")
    n = 0
    for j, x in enumerate(b):
        if x.unit == 0 and x.prec <= m:
            raise InconclusiveError(f"coefficient {j} is unknown at valuation {m}")
        if x.unit and x.val == m:
            n = j
    return n, m


def strassman_count(f: DiskSeries) -> int:
    """Number of zeros (with multiplicity, over C_p) of f on the disk v(t) >= 1."""
    return _strassman(_scaled(f), f.truncation_error(1))[0]


def _reduction_roots(b, m, p):
    """Roots in F_p, with multiplicity, of the reduction of p^-m * sum b_j u^j."""
    poly = []
    for x in b:
        if x.unit and x.val == m:
            poly.append(x.unit % p)
        else:
            poly.append(0)
    while poly and poly[-1] == 0:
        poly.pop()
    roots = []
    for r in range(p):
        mult = 0
        cur = poly[:]
        while len(cur) > 1:
            # synthetic division by (u - r)
            acc = 0
            quot = []
            for coef in reversed(cur):
                acc = (acc * r + coef) % p
                quot.append(acc)
            rem = quot.pop()
            if rem:
                break
            mult += 1
            cur = list(reversed(quot))
        if mult:
            roots.append((r, mult))
    return roots


def _shift(b, r: int, ctx: PadicContext):
    """Coefficients of P(r + p u) from those of P(u)."""
    n = len(b)
    zero = ctx.zero()
    out = []
    for i in range(n):
        s = zero
        rp = 1
        for j in range(i, n):
            if b[j].unit or not b[j].is_exact_zero():
                s = s + b[j] * (comb(j, i) * rp)
            rp *= r
        out.append(s.scale_by_p(i))
    return out


def _newton(b, ctx: PadicContext):
    """Simple root of sum b_j u^j in |u| <= 1 when its Strassman count is 1."""
    db = [x * j for j, x in enumerate(b)][1:]
    u = ctx.zero()
    for _ in range(200):
        val = ctx.zero()
        for x in reversed(b):
            val = val * u + x
        der = ctx.zero()
        for x in reversed(db):
            der = der * u + x
        if der.unit == 0:
            raise InconclusiveError("derivative vanishes at the available precision")
        step = val / der
        if step.unit == 0:
            return u.add_bigoh(step.prec)
        new = u - step
        if new == u:
            return u
        u = new
    raise InconclusiveError("Newton iteration did not settle")


def find_roots(f: DiskSeries, threshold=None, max_depth=None) -> RootSearch:
    """Zeros of f in Z_p on the disk v(z - c) >= 1, in the z coordinate."""
    ctx = f.ctx
    p = ctx.p
    tail = f.truncation_error(1)
    if threshold is None:
        threshold = f.value_precision(1) - 2
    if max_depth is None:
        max_depth = ctx.N
    b0 = _scaled(f)
    count, _ = _strassman(b0, tail)
    result = RootSearch(strassman=count)

    def descend(b, t0: PadicNumber, e: int, depth: int, mu: int | None = None):
        try:
            n, m = _strassman(b, tail)
        except InconclusiveError:
            result.roots.append(_cluster(t0, e, mu))
            return
        if n == 0:
            return
        if n == 1:
            # b_1 dominates, so P' has constant valuation m on the disk and
            # Newton from 0 contracts.
            u = _newton(b, ctx)
            t = t0 + u.scale_by_p(e)
            z = f.center + t
            res = f(t)
            rv = res.val
            result.roots.append(RootRecord(z, 1, rv >= threshold, rv))
            return
        roots = _reduction_roots(b, m, p)
        found = sum(mu for _, mu in roots)
        result.nonrational += n - found
        if depth >= max_depth:
            for r, mu in roots:
                result.roots.append(_cluster(t0 + ctx.element(r).scale_by_p(e), e + 1, mu))
            return
        for r, mu in roots:
            descend(_shift(b, r, ctx), t0 + ctx.element(r).scale_by_p(e), e + 1, depth + 1, mu)

    def _cluster(t, e, mu):
        z = (f.center + t).add_bigoh(e)
        res = f(t)
        return RootRecord(z, mu or 1, False, res.val)

    descend(b0, ctx.zero(), 1, 0)
    result.roots.sort(key=lambda r: root_sort_key(r.root))
    return result


def root_sort_key(z: PadicNumber):
    p = z.p
    digits = []
    n = z.lift_int() if z.val >= 0 else 0
    for _ in range(min(int(z.prec), 64) if z.prec != INFINITY else 64):
        n, r = divmod(n, p)
        digits.append(r)
    return tuple(digits)
