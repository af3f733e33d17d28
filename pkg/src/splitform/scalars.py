"""Exact arithmetic in iterated real quadratic extensions of the rationals.

A tower context fixes a chain Q = F_0 < F_1 < ... < F_m where each step
adjoins the square root of a positive element of the previous field,
F_k = F_{k-1}(sqrt(rho_k)).  Scalars are stored in canonical nested form
``a + b*sqrt(rho_k)`` with ``b != 0``, so structural equality is value
equality and every scalar knows the minimal level it lives at.  All
arithmetic is exact; signs are decided recursively without any floating
point.  Scalars embed in the reals, and :meth:`Scalar.interval` returns a
rational enclosure of that embedding for consumers that want one.
"""

from __future__ import annotations

from fractions import Fraction
from functools import total_ordering
from math import gcd, isqrt, lcm

try:
    # C-implemented rationals; hash- and equality-compatible with Fraction
    from gmpy2 import mpq as _RAT
except ImportError:
    _RAT = Fraction

__all__ = [
    "Scalar",
    "TowerContext",
    "QQ",
    "adjoin_sqrt",
    "sign_of",
    "sqrt_in_tower",
]

_RATIONALS = (int, Fraction, _RAT)
_ZERO = _RAT(0)
_HALF = _RAT(1, 2)


def _fraction_gcd(x, y):
    return _RAT(gcd(x.numerator, y.numerator), lcm(x.denominator, y.denominator))


def _isqrt_frac(x):
    # exact square root of a nonnegative rational, or None
    n, d = x.numerator, x.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return _RAT(rn, rd)
    return None


def _sqrt_interval_frac(lo, hi, prec: int) -> tuple[Fraction, Fraction]:
    # rational enclosure of [sqrt(lo), sqrt(hi)], outward rounded to ~2^-prec
    if hi < 0:
        raise ValueError("negative radicand interval")
    lo = max(lo, _ZERO)
    scale = 1 << (2 * prec)
    a = isqrt((lo.numerator * scale) // lo.denominator) if lo else 0
    b_num = hi.numerator * scale
    b = isqrt(b_num // hi.denominator)
    if b * b * hi.denominator < b_num:
        b += 1
    r = 1 << prec
    return Fraction(a, r), Fraction(b, r)


class TowerContext:
    """An immutable chain of adjoined square roots over the rationals.

    ``radicands[k]`` is the element whose square root was adjoined at step
    ``k+1``; it is a scalar of level at most ``k``.  Contexts are only ever
    extended by :func:`adjoin_sqrt`, which returns a fresh context, so a
    scalar built in a shorter context remains valid in every extension.
    """

    __slots__ = ("radicands", "_zero", "_one")

    def __init__(self, radicands: tuple = ()):
        self.radicands = radicands
        self._zero = None
        self._one = None

    @property
    def level(self) -> int:
        return len(self.radicands)

    def rational(self, num, den=1) -> "Scalar":
        return Scalar(self, 0, _RAT(num, den), None)

    @property
    def zero(self) -> "Scalar":
        if self._zero is None:
            self._zero = self.rational(0)
        return self._zero

    @property
    def one(self) -> "Scalar":
        if self._one is None:
            self._one = self.rational(1)
        return self._one

    def scalar(self, x) -> "Scalar":
        """Coerce an int, Fraction or Scalar into this context."""
        if isinstance(x, Scalar):
            if x._level > self.level:
                raise ValueError("scalar lives above this tower")
            return x
        return self.rational(x)

    def extends(self, other: "TowerContext") -> bool:
        if other.level > self.level:
            return False
        return all(a == b for a, b in zip(self.radicands, other.radicands))

    def root(self, k: int) -> "Scalar":
        """The adjoined square root sqrt(radicands[k]) as a scalar."""
        lvl = k + 1
        lower = self.radicands[k]
        a = _scalar_zero_at(self, 0)
        b = self.rational(1)
        return Scalar(self, lvl, a, b)

    def describe(self) -> list:
        return [r.to_obj() for r in self.radicands]

    def __repr__(self):
        return f"TowerContext(level={self.level})"

    def __eq__(self, other):
        return isinstance(other, TowerContext) and self.radicands == other.radicands

    def __hash__(self):
        return hash(("TowerContext", self.radicands))


QQ = TowerContext()


def _scalar_zero_at(ctx, level):
    return Scalar(ctx, 0, _ZERO, None)


def _common_ctx(x: "Scalar", y: "Scalar") -> TowerContext:
    cx, cy = x._ctx, y._ctx
    if cx is cy:
        return cx
    if cx.level >= cy.level:
        if cx.extends(cy):
            return cx
    elif cy.extends(cx):
        return cy
    raise ValueError("scalars come from incompatible tower contexts")


@total_ordering
class Scalar:
    """An element of a square-root tower, in canonical nested form.

    Level 0 wraps a :class:`fractions.Fraction`.  At level ``k >= 1`` the
    value is ``a + b*sqrt(rho_k)`` with ``a``, ``b`` of lower level and
    ``b`` nonzero; a vanishing ``b`` is normalised away, so two scalars are
    equal exactly when their stored structures are equal.
    """

    __slots__ = ("_ctx", "_level", "_a", "_b")

    def __init__(self, ctx: TowerContext, level: int, a, b):
        self._ctx = ctx
        self._level = level
        self._a = a
        self._b = b

    # -- constructors -------------------------------------------------

    @classmethod
    def from_fraction(cls, x, ctx: TowerContext = QQ) -> "Scalar":
        return ctx.rational(x)

    @property
    def ctx(self) -> TowerContext:
        return self._ctx

    @property
    def level(self) -> int:
        return self._level

    # -- predicates ---------------------------------------------------

    def is_zero(self) -> bool:
        return self._level == 0 and self._a == 0

    def is_rational(self) -> bool:
        return self._level == 0

    def as_fraction(self) -> Fraction:
        if self._level != 0:
            raise ValueError("scalar is irrational")
        a = self._a
        return Fraction(int(a.numerator), int(a.denominator))

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Scalar):
            return other
        if isinstance(other, _RATIONALS):
            return Scalar(self._ctx, 0, _RAT(other), None)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return _add(self, other)

    __radd__ = __add__

    def __neg__(self):
        if self._level == 0:
            return Scalar(self._ctx, 0, -self._a, None)
        return Scalar(self._ctx, self._level, -self._a, -self._b)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return _add(self, -other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return _add(other, -self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return _mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return _mul(self, other.inverse())

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return _mul(other, self.inverse())

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out = self._ctx.one
        base = self
        while n:
            if n & 1:
                out = _mul(out, base)
            base = _mul(base, base)
            n >>= 1
        return out

    def inverse(self) -> "Scalar":
        """Multiplicative inverse; conjugation pushes the problem down a level."""
        if self._level == 0:
            if self._a == 0:
                raise ZeroDivisionError("scalar is zero")
            return Scalar(self._ctx, 0, 1 / self._a, None)
        a, b = self._a, self._b
        rho = self._ctx.radicands[self._level - 1]
        # (a + b r)^-1 = (a - b r) / (a^2 - b^2 rho); denominator is nonzero
        # because sqrt(rho) is irrational over the lower field.
        d = _add(_mul(a, a), -_mul(_mul(b, b), rho))
        dinv = d.inverse()
        return _make(self._ctx, self._level, _mul(a, dinv), _mul(-b, dinv))

    # -- order and sign -----------------------------------------------

    def sign(self) -> int:
        """Exact sign in {-1, 0, +1} of the real embedding."""
        if self._level == 0:
            a = self._a
            return -1 if a < 0 else (1 if a > 0 else 0)
        sa = self._a.sign()
        sb = self._b.sign()
        if sa == 0:
            return sb
        if sa == sb:
            return sa
        # opposite signs: compare a^2 against b^2 * rho; equality would make
        # sqrt(rho) rational over the lower field, which adjoin_sqrt rules out
        rho = self._ctx.radicands[self._level - 1]
        t = _add(_mul(self._a, self._a), -_mul(_mul(self._b, self._b), rho))
        return sa if t.sign() > 0 else sb

    def __eq__(self, other):
        if isinstance(other, _RATIONALS):
            return self._level == 0 and self._a == other
        if not isinstance(other, Scalar):
            return NotImplemented
        return _structurally_equal(self, other)

    def __lt__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).sign() < 0

    def __hash__(self):
        if self._level == 0:
            return hash(self._a)
        return hash((self._level, self._a, self._b))

    def __bool__(self):
        return not self.is_zero()

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def content(self):
        """Positive rational c with self/c integral and primitive; 0 for 0."""
        if self._level == 0:
            return abs(self._a)
        return _fraction_gcd(self._a.content(), self._b.content())

    # -- numeric views ------------------------------------------------

    def interval(self, prec: int = 64) -> tuple:
        """A rational interval [lo, hi] containing the real value."""
        if self._level == 0:
            return (self._a, self._a)
        alo, ahi = self._a.interval(prec)
        blo, bhi = self._b.interval(prec)
        rho = self._ctx.radicands[self._level - 1]
        rlo, rhi = rho.interval(prec)
        slo, shi = _sqrt_interval_frac(rlo, rhi, prec)
        cands = (blo * slo, blo * shi, bhi * slo, bhi * shi)
        return (alo + min(cands), ahi + max(cands))

    def __float__(self):
        lo, hi = self.interval(64)
        return float((lo + hi) / 2)

    # -- serialisation ------------------------------------------------

    def to_obj(self):
        """JSON-ready form: "p/q" at level 0, nested {a, b, root} above."""
        if self._level == 0:
            return f"{self._a.numerator}/{self._a.denominator}"
        return {
            "a": self._a.to_obj(),
            "b": self._b.to_obj(),
            "root": self._ctx.radicands[self._level - 1].to_obj(),
        }

    @classmethod
    def from_obj(cls, obj, ctx: TowerContext = QQ) -> tuple["Scalar", TowerContext]:
        """Parse the nested form, adjoining any missing roots to ``ctx``."""
        if isinstance(obj, str):
            return ctx.rational(Fraction(obj)), ctx
        if isinstance(obj, int):
            return ctx.rational(obj), ctx
        if not isinstance(obj, dict) or set(obj) != {"a", "b", "root"}:
            raise ValueError(f"not a scalar encoding: {obj!r}")
        rho, ctx = cls.from_obj(obj["root"], ctx)
        ctx, root = adjoin_sqrt(ctx, rho)
        a, ctx = cls.from_obj(obj["a"], ctx)
        b, ctx = cls.from_obj(obj["b"], ctx)
        return a + b * root, ctx

    def __repr__(self):
        return f"Scalar({self._pretty()})"

    def _pretty(self) -> str:
        if self._level == 0:
            return str(self._a)
        rho = self._ctx.radicands[self._level - 1]
        return f"({self._a._pretty()} + ({self._b._pretty()})*sqrt({rho._pretty()}))"


def _structurally_equal(x: Scalar, y: Scalar) -> bool:
    if x._level != y._level:
        return False
    if x._level == 0:
        return x._a == y._a
    return _structurally_equal(x._a, y._a) and _structurally_equal(x._b, y._b)


def _make(ctx, level, a, b) -> Scalar:
    if b.is_zero():
        return a
    return Scalar(ctx, level, a, b)


def _add(x: Scalar, y: Scalar) -> Scalar:
    # zero short-circuits keep sparse linear algebra cheap
    if x._level == 0 and not x._a:
        return y
    if y._level == 0 and not y._a:
        return x
    if x._level == 0 and y._level == 0:
        ctx = x._ctx if x._ctx.level >= y._ctx.level else y._ctx
        return Scalar(ctx, 0, x._a + y._a, None)
    ctx = _common_ctx(x, y)
    lvl = max(x._level, y._level)
    xa, xb = (x._a, x._b) if x._level == lvl else (x, None)
    ya, yb = (y._a, y._b) if y._level == lvl else (y, None)
    a = _add(xa, ya)
    if xb is None:
        b = yb
    elif yb is None:
        b = xb
    else:
        b = _add(xb, yb)
        if b.is_zero():
            return a
    return Scalar(ctx, lvl, a, b)


def _mul(x: Scalar, y: Scalar) -> Scalar:
    # 0, 1 and -1 short-circuits keep sparse linear algebra cheap
    if x._level == 0:
        a = x._a
        if not a:
            return x
        if a == 1:
            return y
        if a == -1:
            return -y
    if y._level == 0:
        a = y._a
        if not a:
            return y
        if a == 1:
            return x
        if a == -1:
            return -x
    if x._level == 0 and y._level == 0:
        ctx = x._ctx if x._ctx.level >= y._ctx.level else y._ctx
        return Scalar(ctx, 0, x._a * y._a, None)
    ctx = _common_ctx(x, y)
    lvl = max(x._level, y._level)
    if x._level < lvl:
        # scalar times (a + b r)
        return _make(ctx, lvl, _mul(x, y._a), _mul(x, y._b))
    if y._level < lvl:
        return _make(ctx, lvl, _mul(y, x._a), _mul(y, x._b))
    rho = ctx.radicands[lvl - 1]
    a = _add(_mul(x._a, y._a), _mul(_mul(x._b, y._b), rho))
    b = _add(_mul(x._a, y._b), _mul(x._b, y._a))
    return _make(ctx, lvl, a, b)


def sign_of(x: Scalar) -> int:
    return x.sign()


def sqrt_in_tower(x: Scalar, ctx: TowerContext = None, level: int = None):
    """Exact square root of ``x`` within the tower, or None.

    Solves (c + d*sqrt(rho))^2 = x level by level; no new roots are
    adjoined.  The returned root, when it exists, is the nonnegative one.
    """
    ctx = ctx if ctx is not None else x._ctx
    level = ctx.level if level is None else level
    s = x.sign()
    if s < 0:
        return None
    if s == 0:
        return ctx.zero
    if x._level > level:
        raise ValueError("scalar lives above the requested level")
    if level == 0:
        r = _isqrt_frac(x._a)
        return None if r is None else Scalar(ctx, 0, r, None)
    rho = ctx.radicands[level - 1]
    if x._level < level:
        r = sqrt_in_tower(x, ctx, level - 1)
        if r is not None:
            return r
        d = sqrt_in_tower(_mul(x, rho.inverse()), ctx, level - 1)
        if d is not None and not d.is_zero():
            r = _make(ctx, level, _scalar_zero_at(ctx, 0), d)
            return r if r.sign() > 0 else -r
        return None
    a, b = x._a, x._b
    t2 = _add(_mul(a, a), -_mul(_mul(b, b), rho))
    t = sqrt_in_tower(t2, ctx, level - 1) if t2.sign() >= 0 else None
    if t is None:
        return None
    half = Scalar(ctx, 0, _HALF, None)
    two = Scalar(ctx, 0, _RAT(2), None)
    for c2 in (_mul(_add(a, t), half), _mul(_add(a, -t), half)):
        if c2.sign() <= 0:
            continue
        c = sqrt_in_tower(c2, ctx, level - 1)
        if c is None or c.is_zero():
            continue
        d = _mul(b, _mul(two, c).inverse())  # d = b / (2c)
        r = _make(ctx, level, c, d)
        if (r * r) == x:
            return r if r.sign() > 0 else -r
    return None


def _square_part(n: int) -> tuple[int, int]:
    """n = s*s*m with m free of square factors the factorization finds.

    The factoring effort is capped, so m need not be fully square-free
    for adversarial inputs; every return is exact either way, a larger m
    only costs a fatter radicand."""
    s = isqrt(n)
    if s * s == n:
        return s, 1
    from sympy import factorint

    s = 1
    for p, e in factorint(n, limit=100_000).items():
        if e >= 2:
            q = p ** (e // 2)
            s *= q
            n //= q * q
    r = isqrt(n)
    if r * r == n:
        return s * r, 1
    return s, n


def adjoin_sqrt(ctx: TowerContext, rho) -> tuple[TowerContext, Scalar]:
    """Extend ``ctx`` with sqrt(rho) for a positive scalar ``rho``.

    Rational radicands are canonicalized: sqrt(p/q) is rewritten as
    (s/q) * sqrt(m) with m a positive integer free of small square
    factors, so equal square classes reuse one tower level.  If the
    root already lies in the tower the context is returned unchanged
    together with the existing root; otherwise a new level is added.
    """
    rho = ctx.scalar(rho)
    if rho.sign() <= 0:
        raise ValueError("radicand must be positive")
    if rho.is_rational():
        f = rho.as_fraction()
        s, m = _square_part(f.numerator * f.denominator)
        coef = ctx.rational(Fraction(s, f.denominator))
        if m == 1:
            return ctx, coef
        target = ctx.rational(m)
        existing = sqrt_in_tower(target, ctx)
        if existing is not None:
            return ctx, coef * existing
        new = TowerContext(ctx.radicands + (target,))
        return new, coef * new.root(len(ctx.radicands))
    existing = sqrt_in_tower(rho, ctx)
    if existing is not None:
        return ctx, existing
    new = TowerContext(ctx.radicands + (rho,))
    return new, new.root(len(ctx.radicands))
