"""Dense univariate polynomials over the rationals.

Coefficient tuples are ascending (``c[i]`` multiplies ``t**i``) and
normalised with no trailing zeros; the zero polynomial is the empty
tuple.  This module carries the exact real-root machinery used by the
spectral decision procedures: Sturm chains, root counting on intervals
and half-lines, Yun squarefree decomposition, bisection isolation, and
the Chebyshev-style substitution t + 1/t for palindromic polynomials.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = [
    "pnormalize",
    "pdeg",
    "padd",
    "psub",
    "pneg",
    "pmul",
    "pscale",
    "pdivmod",
    "pgcd",
    "pderiv",
    "peval",
    "pmonic",
    "preverse",
    "is_palindromic",
    "sturm_chain",
    "count_roots_interval",
    "count_roots_above",
    "yun_squarefree",
    "isolate_real_roots",
    "cauchy_bound",
    "trace_substitute",
]

_Z = Fraction(0)


def pnormalize(c) -> tuple[Fraction, ...]:
    c = [Fraction(x) for x in c]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def pdeg(c) -> int:
    return len(c) - 1  # zero polynomial gets degree -1


def padd(a, b):
    n = max(len(a), len(b))
    return pnormalize([(a[i] if i < len(a) else _Z) + (b[i] if i < len(b) else _Z) for i in range(n)])


def pneg(a):
    return tuple(-x for x in a)


def psub(a, b):
    return padd(a, pneg(b))


def pmul(a, b):
    if not a or not b:
        return ()
    out = [_Z] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return pnormalize(out)


def pscale(k, a):
    k = Fraction(k)
    return pnormalize([k * x for x in a])


def pdivmod(a, b):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    q = [_Z] * max(0, len(a) - len(b) + 1)
    inv = 1 / b[-1]
    for i in range(len(a) - len(b), -1, -1):
        f = a[i + len(b) - 1] * inv
        if f:
            q[i] = f
            for j, y in enumerate(b):
                a[i + j] -= f * y
    return pnormalize(q), pnormalize(a)


def pgcd(a, b):
    while b:
        a, b = b, pdivmod(a, b)[1]
    return pmonic(a) if a else ()


def pmonic(a):
    if not a:
        return ()
    return tuple(x / a[-1] for x in a)


def pderiv(a):
    return pnormalize([i * a[i] for i in range(1, len(a))])


def peval(a, x) -> Fraction:
    x = Fraction(x)
    acc = _Z
    for c in reversed(a):
        acc = acc * x + c
    return acc


def preverse(a):
    """The reciprocal t^deg * a(1/t); exact reversal when a(0) != 0."""
    return pnormalize(list(reversed(a)))


def is_palindromic(a) -> bool:
    return bool(a) and all(a[i] == a[len(a) - 1 - i] for i in range(len(a)))


def _sign(x: Fraction) -> int:
    return -1 if x < 0 else (1 if x > 0 else 0)


def sturm_chain(a):
    chain = [pnormalize(a)]
    d = pderiv(a)
    if d:
        chain.append(d)
        while True:
            r = pdivmod(chain[-2], chain[-1])[1]
            if not r:
                break
            chain.append(pneg(r))
    return chain


def _variations(signs) -> int:
    signs = [s for s in signs if s != 0]
    return sum(1 for i in range(len(signs) - 1) if signs[i] != signs[i + 1])


def _variations_at(chain, x) -> int:
    return _variations([_sign(peval(p, x)) for p in chain])


def _variations_at_inf(chain, sign: int) -> int:
    out = []
    for p in chain:
        if not p:
            out.append(0)
        else:
            s = _sign(p[-1])
            if sign < 0 and pdeg(p) % 2 == 1:
                s = -s
            out.append(s)
    return _variations(out)


def count_roots_interval(a, lo, hi) -> int:
    """Distinct real roots in the open interval (lo, hi); endpoints must not be roots."""
    lo, hi = Fraction(lo), Fraction(hi)
    if peval(a, lo) == 0 or peval(a, hi) == 0:
        raise ValueError("interval endpoint is a root")
    chain = sturm_chain(a)
    return _variations_at(chain, lo) - _variations_at(chain, hi)


def count_roots_above(a, lo) -> int:
    """Distinct real roots in (lo, +inf); lo must not be a root."""
    lo = Fraction(lo)
    if peval(a, lo) == 0:
        raise ValueError("endpoint is a root")
    chain = sturm_chain(a)
    return _variations_at(chain, lo) - _variations_at_inf(chain, +1)


def count_real_roots(a) -> int:
    chain = sturm_chain(a)
    return _variations_at_inf(chain, -1) - _variations_at_inf(chain, +1)


def yun_squarefree(a) -> list[tuple[tuple, int]]:
    """Yun's algorithm: [(squarefree factor, multiplicity)], factors monic."""
    a = pmonic(a)
    if pdeg(a) < 1:
        return []
    d = pderiv(a)
    g = pgcd(a, d)
    out = []
    b, c = pdivmod(a, g)[0], pdivmod(d, g)[0]
    i = 1
    while pdeg(b) > 0:
        d = psub(c, pderiv(b))
        h = pgcd(b, d)
        if pdeg(h) > 0:
            out.append((pmonic(h), i))
        b = pdivmod(b, h)[0]
        c = pdivmod(d, h)[0]
        i += 1
    return out


def cauchy_bound(a) -> Fraction:
    """All real roots lie in (-B, B)."""
    lc = abs(a[-1])
    m = max((abs(x) for x in a[:-1]), default=_Z)
    return 1 + m / lc


def squarefree_part(a):
    g = pgcd(a, pderiv(a))
    return pmonic(pdivmod(pmonic(a), g)[0])


def isolate_real_roots(a) -> list[tuple[Fraction, Fraction, int]]:
    """Globally disjoint isolating intervals for the distinct real roots.

    Returns (lo, hi, multiplicity) triples sorted by position; a point
    root has lo == hi.  Each open interval contains exactly one distinct
    root of ``a`` and no endpoint is a root, so intervals of different
    roots can share at most a non-root endpoint.
    """
    if pdeg(a) < 1:
        return []
    factors = yun_squarefree(a)
    f = squarefree_part(a)
    chain = sturm_chain(f)
    bound = cauchy_bound(f)
    lo, hi = -bound, bound
    while peval(f, lo) == 0:
        lo -= 1
    while peval(f, hi) == 0:
        hi += 1
    boxes = []
    stack = [(lo, hi, _variations_at(chain, lo) - _variations_at(chain, hi))]
    while stack:
        lo, hi, n = stack.pop()
        if n == 0:
            continue
        if n == 1:
            boxes.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        if peval(f, mid) == 0:
            boxes.append((mid, mid))
            eps = (hi - lo) / 4
            while peval(f, mid - eps) == 0 or peval(f, mid + eps) == 0:
                eps /= 2
            left = _variations_at(chain, lo) - _variations_at(chain, mid - eps)
            stack.append((lo, mid - eps, left))
            stack.append((mid + eps, hi, n - 1 - left))
        else:
            left = _variations_at(chain, lo) - _variations_at(chain, mid)
            stack.append((lo, mid, left))
            stack.append((mid, hi, n - left))
    out = []
    for lo, hi in sorted(boxes):
        mult = None
        for g, m in factors:
            if lo == hi:
                owned = peval(g, lo) == 0
            else:
                owned = _sign(peval(g, lo)) * _sign(peval(g, hi)) < 0
            if owned:
                mult = m
                break
        if mult is None:
            raise AssertionError("isolated root not claimed by any squarefree factor")
        out.append((lo, hi, mult))
    return out


def refine_root(f, lo: Fraction, hi: Fraction, width: Fraction) -> tuple[Fraction, Fraction]:
    """Shrink an isolating interval of squarefree ``f`` below ``width`` by bisection."""
    if lo == hi:
        return lo, hi
    slo = _sign(peval(f, lo))
    while hi - lo > width:
        mid = (lo + hi) / 2
        sm = _sign(peval(f, mid))
        if sm == 0:
            return mid, mid
        if sm == slo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def trace_substitute(a):
    """For palindromic a of even degree 2m, the G with a(t) = t^m G(t + 1/t)."""
    if not is_palindromic(a):
        raise ValueError("polynomial is not palindromic")
    if pdeg(a) % 2 != 0:
        raise ValueError("degree must be even")
    m = pdeg(a) // 2
    # V_j(w) represents t^j + t^-j:  V_0 = 2, V_1 = w, V_{j+1} = w V_j - V_{j-1}
    w = (_Z, Fraction(1))
    vprev, vcur = (Fraction(2),), w
    g = pscale(a[m], (Fraction(1),))
    for j in range(1, m + 1):
        g = padd(g, pscale(a[m + j], vcur))
        vprev, vcur = vcur, psub(pmul(w, vcur), vprev)
    return g
