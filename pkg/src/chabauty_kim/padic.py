"""Capped-precision arithmetic in Q_p.

Every number carries its valuation and an absolute precision: the value is
known modulo ``p**prec``. Exact zero is a separate state with infinite
valuation and precision. Numbers created from rationals get ``ctx.N`` digits
of relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Union

INFINITY = math.inf

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


class PrecisionError(ArithmeticError):
    """Raised when a result cannot be determined at the available precision."""


class ContextMismatch(ValueError):
    pass


class ReconstructionError(ValueError):
    """No small rational is congruent to the input at the requested precision."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % q for q in range(2, math.isqrt(n) + 1))


@lru_cache(maxsize=None)
def _ppow(p: int, e: int) -> int:
    return p**e


def int_valuation(n: int, p: int) -> int:
    if n == 0:
        return INFINITY
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def floor_log(n: int, p: int) -> int:
    """Largest e with p**e <= n (n >= 1)."""
    e = 0
    q = p
    while q <= n:
        q *= p
        e += 1
    return e


@dataclass(frozen=True)
class PadicContext:
    p: int
    N: int
    _teich: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if not is_prime(self.p) or self.p < 3:
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.N < 1:
            raise ValueError(f"precision must be positive, got {self.N}")

    def __call__(self, x, prec=None) -> "PadicNumber":
        return self.element(x, prec)

    def element(self, x, prec=None) -> "PadicNumber":
        """Embed an int, Fraction or PadicNumber.

        ``prec`` is an absolute precision; by default the value gets N digits
        of relative precision.
        """
        if isinstance(x, PadicNumber):
            x._check(self)
            return x if prec is None else x.add_bigoh(prec)
        if isinstance(x, str):
            x = Fraction(x)
        if isinstance(x, int):
            x = Fraction(x)
        if not isinstance(x, Fraction):
            raise TypeError(f"cannot embed {type(x).__name__} in Q_{self.p}")
        if x == 0:
            return PadicNumber(self, INFINITY, 0, INFINITY) if prec is None else self.zero(prec)
        p = self.p
        vn = int_valuation(x.numerator, p)
        vd = int_valuation(x.denominator, p)
        val = vn - vd
        if prec is None:
            prec = val + self.N
        if prec <= val:
            return self.zero(prec)
        num = x.numerator // _ppow(p, vn)
        den = x.denominator // _ppow(p, vd)
        mod = _ppow(p, prec - val)
        return PadicNumber(self, val, num * pow(den, -1, mod) % mod, prec)

    def zero(self, prec=INFINITY) -> "PadicNumber":
        """Zero known to absolute precision ``prec`` (exact when infinite)."""
        return PadicNumber(self, prec, 0, prec)

    def one(self) -> "PadicNumber":
        return self.element(1)

    def from_parts(self, val: int, unit: int, prec: int) -> "PadicNumber":
        return PadicNumber._make(self, val, unit, prec)


Scalar = Union[int, Fraction, "PadicNumber"]


class PadicNumber:
    """An element p**val * unit of Q_p known modulo p**prec."""

    __slots__ = ("ctx", "val", "unit", "prec")

    def __init__(self, ctx: PadicContext, val, unit: int, prec):
        self.ctx = ctx
        self.val = val
        self.unit = unit
        self.prec = prec

    @classmethod
    def _make(cls, ctx, val, n, prec):
        """Normalise p**val * n known modulo p**prec."""
        if prec == INFINITY:
            if n == 0:
                return cls(ctx, INFINITY, 0, INFINITY)
            raise PrecisionError("nonzero values need finite precision")
        if n == 0 or val >= prec:
            return cls(ctx, prec, 0, prec)
        p = ctx.p
        n %= _ppow(p, prec - val)
        if n == 0:
            return cls(ctx, prec, 0, prec)
        while n % p == 0:
            n //= p
            val += 1
        return cls(ctx, val, n, prec)

    # -- inspection ---------------------------------------------------------

    def _check(self, ctx):
        if self.ctx is not ctx and self.ctx != ctx:
            raise ContextMismatch(f"Q_{self.ctx.p}(N={self.ctx.N}) vs Q_{ctx.p}(N={ctx.N})")

    @property
    def p(self) -> int:
        return self.ctx.p

    def valuation(self):
        return self.val

    @property
    def relative_precision(self):
        return self.prec - self.val if self.unit else 0

    def is_exact_zero(self) -> bool:
        return self.prec == INFINITY

    def is_zero(self, digits=None) -> bool:
        """True when the value is zero to ``digits`` (default: all known digits)."""
        if digits is None:
            return self.unit == 0
        return self.val >= digits

    def is_unit(self) -> bool:
        return self.unit != 0 and self.val == 0

    def residue(self) -> int:
        if self.val < 0:
            raise ValueError("not integral")
        if self.val > 0:
            return 0
        return self.unit % self.ctx.p

    def lift(self) -> Fraction:
        """The canonical rational representative p**val * unit."""
        if self.unit == 0:
            return Fraction(0)
        if self.val >= 0:
            return Fraction(self.unit * _ppow(self.p, self.val))
        return Fraction(self.unit, _ppow(self.p, -self.val))

    def lift_int(self) -> int:
        """Integer representative modulo p**prec of an integral number."""
        if self.val < 0:
            raise ValueError("not integral")
        if self.unit == 0:
            return 0
        return self.unit * _ppow(self.p, self.val)

    def add_bigoh(self, prec) -> "PadicNumber":
        if prec >= self.prec:
            return self
        if self.unit == 0:
            return self.ctx.zero(prec)
        return PadicNumber._make(self.ctx, self.val, self.unit, prec)

    # -- coercion -----------------------------------------------------------

    def _coerce(self, other) -> "PadicNumber":
        if isinstance(other, PadicNumber):
            other._check(self.ctx)
            return other
        if isinstance(other, (int, Fraction)):
            return self.ctx.element(other)
        return NotImplemented

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        ctx = self.ctx
        prec = min(self.prec, other.prec)
        if self.unit == 0:
            return other.add_bigoh(prec)
        if other.unit == 0:
            return self.add_bigoh(prec)
        p = ctx.p
        a, b = self.val, other.val
        if a <= b:
            n = self.unit + other.unit * _ppow(p, b - a)
            return PadicNumber._make(ctx, a, n, prec)
        n = other.unit + self.unit * _ppow(p, a - b)
        return PadicNumber._make(ctx, b, n, prec)

    __radd__ = __add__

    def __neg__(self):
        if self.unit == 0:
            return self
        return PadicNumber(self.ctx, self.val, _ppow(self.p, self.prec - self.val) - self.unit, self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        ctx = self.ctx
        if self.is_exact_zero() or other.is_exact_zero():
            return ctx.zero()
        if self.unit == 0:
            if other.unit == 0:
                return ctx.zero(self.prec + other.prec)
            return ctx.zero(self.prec + other.val)
        if other.unit == 0:
            return ctx.zero(other.prec + self.val)
        val = self.val + other.val
        rel = min(self.prec - self.val, other.prec - other.val)
        return PadicNumber(ctx, val, self.unit * other.unit % _ppow(ctx.p, rel), val + rel)

    __rmul__ = __mul__

    def inverse(self) -> "PadicNumber":
        if self.unit == 0:
            raise PrecisionError("division by a number indistinguishable from zero")
        rel = self.prec - self.val
        return PadicNumber(self.ctx, -self.val, pow(self.unit, -1, _ppow(self.p, rel)), rel - self.val)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return self.inverse() ** (-e)
        if e == 0:
            return self.ctx.one()
        if self.unit == 0:
            if self.is_exact_zero():
                return self
            return self.ctx.zero(self.prec * e)
        rel = self.prec - self.val
        return PadicNumber(self.ctx, self.val * e, pow(self.unit, e, _ppow(self.p, rel)), self.val * e + rel)

    def scale_by_p(self, k: int) -> "PadicNumber":
        """Multiply by p**k exactly (precision shifts with the value)."""
        if self.is_exact_zero():
            return self
        if self.unit == 0:
            return self.ctx.zero(self.prec + k)
        return PadicNumber(self.ctx, self.val + k, self.unit, self.prec + k)

    # -- comparison ---------------------------------------------------------

    def _key(self):
        return (self.ctx.p, self.ctx.N, self.val, self.unit, self.prec)

    def __eq__(self, other):
        """Structural equality: same digits at the same precision."""
        if not isinstance(other, PadicNumber):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def agreement(self, other) -> int:
        """Valuation of the difference, capped by the joint precision."""
        return (self - self._coerce(other)).val

    def equals(self, other, digits: int) -> bool:
        return self.agreement(other) >= digits

    # -- display / serialisation --------------------------------------------

    def digits(self) -> str:
        """Base-p digits of the unit, most significant first."""
        return to_base(self.unit, self.p)

    def to_json(self) -> dict:
        def enc(x):
            return "inf" if x == INFINITY else int(x)

        return {"v": enc(self.val), "u": self.digits(), "prec": enc(self.prec)}

    @classmethod
    def from_json(cls, ctx: PadicContext, data: dict) -> "PadicNumber":
        if data["prec"] == "inf":
            return ctx.zero()
        unit = from_base(data["u"], ctx.p)
        return cls._make(ctx, int(data["v"]), unit, int(data["prec"]))

    def __repr__(self):
        if self.is_exact_zero():
            return "0"
        if self.unit == 0:
            return f"O({self.p}^{self.prec})"
        lead = "" if self.val == 0 else f"{self.p}^{self.val}*"
        return f"{lead}{self.unit} + O({self.p}^{self.prec})"

    def rational_reconstruction(self, M=None) -> Fraction:
        return rational_reconstruction(self, M)


def to_base(n: int, p: int) -> str:
    if n == 0:
        return "0"
    out = []
    while n:
        n, r = divmod(n, p)
        out.append(_DIGITS[r] if p <= 36 else f"{r},")
    s = "".join(reversed(out))
    return s.rstrip(",") if p > 36 else s


def from_base(s: str, p: int) -> int:
    if p <= 36:
        return int(s, p)
    n = 0
    for d in s.split(","):
        n = n * p + int(d)
    return n


# ---------------------------------------------------------------------------
# Teichmüller lifts and the logarithm


def teichmuller(a: int, ctx: PadicContext, prec=None) -> PadicNumber:
    """The (p-1)-st root of unity congruent to ``a`` mod p, by iterating x -> x**p."""
    p = ctx.p
    if a % p == 0:
        raise ValueError(f"{a} is divisible by {p}; no Teichmüller lift")
    prec = ctx.N if prec is None else prec
    key = (a % p, prec)
    cached = ctx._teich.get(key)
    if cached is None:
        mod = _ppow(p, prec)
        x = a % p
        while True:
            y = pow(x, p, mod)
            if y == x:
                break
            x = y
        cached = ctx._teich[key] = PadicNumber(ctx, 0, x, prec)
    return cached


def log_terms_needed(vt: int, target: int, p: int) -> int:
    """Smallest J such that v(t^j/j) >= target for all j > J, given v(t) >= vt."""
    j = 1
    while True:
        # j*vt - log_p(j) is eventually increasing; check a window past j.
        if all(i * vt - floor_log(i, p) >= target for i in range(j + 1, j + p * 2 + 2)):
            return j
        j += 1


def padic_log(u: PadicNumber) -> PadicNumber:
    """Iwasawa logarithm of a unit: log(u / ω(u mod p)) by the log(1+t) series."""
    ctx = u.ctx
    if not u.is_unit():
        raise ValueError(f"padic_log is only defined here on units (valuation {u.val})")
    p = ctx.p
    prec = u.prec
    t = u / teichmuller(u.residue(), ctx, prec) - 1
    if t.unit == 0:
        return ctx.zero(prec)
    vt = t.val
    # Terms t^j/j with j*vt - v(j) >= prec are below the input precision.
    J = log_terms_needed(vt, prec, p)
    total = ctx.zero(prec)
    power = ctx.one()
    for j in range(1, J + 1):
        power = power * t
        term = power / j
        total = total + term if j % 2 else total - term
    return total.add_bigoh(prec)


# ---------------------------------------------------------------------------
# Rational reconstruction


@dataclass(frozen=True)
class ReconstructedRational:
    numerator: int
    denominator: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __str__(self):
        return str(self.value)


def rational_reconstruction(x: PadicNumber, M=None) -> Fraction:
    """The unique num/den with |num|, |den| <= sqrt(p^M/2) congruent to x mod p^M.

    Raises ReconstructionError when no such fraction exists.
    """
    p = x.p
    if M is None:
        M = x.prec
    if M > x.prec:
        raise PrecisionError(f"asked for {M} digits, only {x.prec} known")
    if x.val < 0:
        # reconstruct p^(-val) * x and divide back
        scaled = x.scale_by_p(-x.val)
        r = rational_reconstruction(scaled, M + x.val)
        return r / _ppow(p, -x.val)
    mod = _ppow(p, M)
    a = x.lift_int() % mod
    bound = math.isqrt(mod // 2)
    # half extended Euclid on (mod, a)
    r0, r1 = mod, a
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    num, den = r1, s1
    if den == 0 or abs(den) > bound or math.gcd(den, p) != 1:
        raise ReconstructionError(f"no rational with height <= {bound} matches mod {p}^{M}")
    if den < 0:
        num, den = -num, -den
    if (num - a * den) % mod:
        raise ReconstructionError("reconstruction check failed")
    return Fraction(num, den)


def embed(q, ctx: PadicContext) -> PadicNumber:
    return ctx.element(Fraction(q))
