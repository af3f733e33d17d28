"""Exact linear algebra over square-root towers.

Matrices hold :class:`~splitform.scalars.Scalar` entries and all
elimination is fraction-free only in the sense that it is exact: pivots
are divided out, signs decided by the scalar layer.  Subspaces are stored
as reduced row echelon bases with zero rows dropped, which makes equality
of subspaces a structural comparison and every derived basis canonical.

Vectors are plain tuples of scalars.  Group elements act on column
vectors, so a subspace with basis rows ``B`` transported by ``h`` has
basis rows ``B @ h.T``.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .scalars import QQ, Scalar, TowerContext, _fraction_gcd

__all__ = [
    "Matrix",
    "Subspace",
    "apply_matrix",
    "vec_add",
    "vec_scale",
    "vec_dot",
    "vec_primitive",
]


def _unify_ctx(a: TowerContext, b: TowerContext) -> TowerContext:
    if a is b:
        return a
    if a.level >= b.level:
        if a.extends(b):
            return a
    elif b.extends(a):
        return b
    raise ValueError("entries come from incompatible tower contexts")


def _coerce_entry(x, ctx: TowerContext) -> Scalar:
    if isinstance(x, Scalar):
        return x
    return ctx.rational(Fraction(x))


def vec_add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def vec_scale(c, v):
    return tuple(c * a for a in v)


def vec_primitive(v):
    """Scale a vector by a positive rational making every component
    integral with no common factor.  Rescaling costs one pass but keeps
    downstream products small, which dominates over deep towers."""
    c = Fraction(0)
    for x in v:
        c = _fraction_gcd(c, x.content())
        if c == 1:
            return v
    if c == 0:
        return v
    f = v[0].ctx.rational(1 / c)
    return tuple(f * x for x in v)


def vec_dot(u, v) -> Scalar:
    if not u:
        raise ValueError("empty vectors")
    acc = None
    for a, b in zip(u, v):
        if a.is_zero() or b.is_zero():
            continue
        t = a * b
        acc = t if acc is None else acc + t
    return QQ.zero if acc is None else acc


def apply_matrix(m: "Matrix", v) -> tuple:
    """m acting on a column vector, returned as a tuple."""
    return tuple(vec_dot(row, v) for row in m.rows)


class Matrix:
    """An immutable dense matrix of tower scalars."""

    __slots__ = ("rows", "nrows", "ncols", "ctx")

    def __init__(self, rows, ctx: TowerContext = None):
        ctx = ctx if ctx is not None else QQ
        for r in rows:
            for x in r:
                if isinstance(x, Scalar):
                    ctx = _unify_ctx(ctx, x.ctx)
        self.rows = tuple(tuple(_coerce_entry(x, ctx) for x in r) for r in rows)
        self.nrows = len(self.rows)
        self.ncols = len(self.rows[0]) if self.rows else 0
        if any(len(r) != self.ncols for r in self.rows):
            raise ValueError("ragged rows")
        self.ctx = ctx

    @classmethod
    def identity(cls, n: int, ctx: TowerContext = QQ) -> "Matrix":
        one, zero = ctx.one, ctx.zero
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)], ctx)

    @classmethod
    def zeros(cls, nrows: int, ncols: int, ctx: TowerContext = QQ) -> "Matrix":
        zero = ctx.zero
        return cls([[zero] * ncols for _ in range(nrows)], ctx)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def row(self, i) -> tuple:
        return self.rows[i]

    def col(self, j) -> tuple:
        return tuple(r[j] for r in self.rows)

    def transpose(self) -> "Matrix":
        return Matrix(list(zip(*self.rows)) if self.rows else [], self.ctx)

    @property
    def T(self) -> "Matrix":
        return self.transpose()

    def __add__(self, other: "Matrix") -> "Matrix":
        return Matrix(
            [[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)]
        )

    def __sub__(self, other: "Matrix") -> "Matrix":
        return Matrix(
            [[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)]
        )

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self.rows], self.ctx)

    def scale(self, c) -> "Matrix":
        c = _coerce_entry(c, self.ctx)
        return Matrix([[c * a for a in r] for r in self.rows])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        ot = list(zip(*other.rows))
        return Matrix([[vec_dot(r, c) for c in ot] for r in self.rows])

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def stack(self, other: "Matrix") -> "Matrix":
        if other.nrows and self.nrows and other.ncols != self.ncols:
            raise ValueError("shape mismatch")
        return Matrix(list(self.rows) + list(other.rows), self.ctx)

    # -- elimination ----------------------------------------------------

    def rref(self) -> tuple["Matrix", tuple[int, ...]]:
        """Reduced row echelon form and the pivot column indices."""
        rows = [list(r) for r in self.rows]
        pivots = []
        pr = 0
        for c in range(self.ncols):
            pivot = next((r for r in range(pr, self.nrows) if not rows[r][c].is_zero()), None)
            if pivot is None:
                continue
            rows[pr], rows[pivot] = rows[pivot], rows[pr]
            inv = rows[pr][c].inverse()
            rows[pr] = [inv * x for x in rows[pr]]
            for r in range(self.nrows):
                if r != pr and not rows[r][c].is_zero():
                    f = rows[r][c]
                    rows[r] = [x - f * y for x, y in zip(rows[r], rows[pr])]
            pivots.append(c)
            pr += 1
            if pr == self.nrows:
                break
        return Matrix(rows, self.ctx), tuple(pivots)

    def rank(self) -> int:
        return len(self.rref()[1])

    def det(self) -> Scalar:
        if self.nrows != self.ncols:
            raise ValueError("determinant of a non-square matrix")
        n = self.nrows
        rows = [list(r) for r in self.rows]
        det = self.ctx.one
        for c in range(n):
            pivot = next((r for r in range(c, n) if not rows[r][c].is_zero()), None)
            if pivot is None:
                return self.ctx.zero
            if pivot != c:
                rows[c], rows[pivot] = rows[pivot], rows[c]
                det = -det
            det = det * rows[c][c]
            inv = rows[c][c].inverse()
            for r in range(c + 1, n):
                if not rows[r][c].is_zero():
                    f = rows[r][c] * inv
                    rows[r] = [x - f * y for x, y in zip(rows[r], rows[c])]
        return det

    def det_sign(self, max_prec: int = 4096) -> int:
        """Certified sign of the determinant.

        Interval elimination over rational enclosures decides the sign
        without expanding tower products; precision escalates until all
        pivots exclude zero, with the exact determinant as a last
        resort.  Much cheaper than det() for matrices with irrational
        entries whose determinant is known to be well separated from 0.
        """
        if self.nrows != self.ncols:
            raise ValueError("determinant of a non-square matrix")
        if self.nrows == 0:
            return 1
        if self.ctx.level == 0:
            return self.det().sign()
        prec = 128
        while prec <= max_prec:
            s = self._det_sign_at(prec)
            if s is not None:
                return s
            prec *= 4
        return self.det().sign()

    def _det_sign_at(self, prec: int):
        scale = 1 << prec

        def rnd(lo, hi):
            return (
                Fraction(math.floor(lo * scale), scale),
                Fraction(math.ceil(hi * scale), scale),
            )

        def mul(x, y):
            c = (x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1])
            return rnd(min(c), max(c))

        def sub(x, y):
            return rnd(x[0] - y[1], x[1] - y[0])

        rows = [[rnd(*x.interval(prec)) for x in r] for r in self.rows]
        n = self.nrows
        sign = 1
        for c in range(n):
            piv = next(
                (r for r in range(c, n) if rows[r][c][0] > 0 or rows[r][c][1] < 0),
                None,
            )
            if piv is None:
                return None
            if piv != c:
                rows[c], rows[piv] = rows[piv], rows[c]
                sign = -sign
            plo, phi = rows[c][c]
            if plo < 0:
                sign = -sign
            pinv = (1 / phi, 1 / plo)
            for r in range(c + 1, n):
                f = mul(rows[r][c], pinv)
                if f == (0, 0):
                    continue
                rows[r] = [sub(a, mul(f, b)) for a, b in zip(rows[r], rows[c])]
        return sign

    def inverse(self) -> "Matrix":
        if self.nrows != self.ncols:
            raise ValueError("inverse of a non-square matrix")
        n = self.nrows
        aug = Matrix([list(r) + list(e) for r, e in zip(self.rows, Matrix.identity(n, self.ctx).rows)])
        red, piv = aug.rref()
        if piv[:n] != tuple(range(n)):
            raise ValueError("matrix is singular")
        return Matrix([r[n:] for r in red.rows], self.ctx)

    def kernel(self) -> "Subspace":
        """Right kernel {x : M x = 0} as a subspace of the column space."""
        red, pivots = self.rref()
        free = [c for c in range(self.ncols) if c not in pivots]
        zero, one = self.ctx.zero, self.ctx.one
        basis = []
        for f in free:
            v = [zero] * self.ncols
            v[f] = one
            for i, p in enumerate(pivots):
                v[p] = -red.rows[i][f]
            basis.append(v)
        return Subspace.from_rows(self.ncols, basis, ctx=self.ctx)

    def solve(self, b):
        """One solution x of M x = b (free coordinates zero), or None."""
        aug = Matrix([list(r) + [val] for r, val in zip(self.rows, b)])
        red, pivots = aug.rref()
        if self.ncols in pivots:
            return None
        zero = self.ctx.zero
        x = [zero] * self.ncols
        for i, p in enumerate(pivots):
            x[p] = red.rows[i][self.ncols]
        return tuple(x)

    def trace(self) -> Scalar:
        acc = self.ctx.zero
        for i in range(min(self.nrows, self.ncols)):
            acc = acc + self.rows[i][i]
        return acc

    # -- serialisation ----------------------------------------------------

    def to_obj(self):
        return [[x.to_obj() for x in r] for r in self.rows]

    @classmethod
    def from_obj(cls, obj, ctx: TowerContext = QQ) -> tuple["Matrix", TowerContext]:
        rows = []
        for r in obj:
            row = []
            for cell in r:
                s, ctx = Scalar.from_obj(cell, ctx)
                row.append(s)
            rows.append(row)
        return cls(rows, ctx), ctx

    def __repr__(self):
        return f"Matrix({self.nrows}x{self.ncols})"


class Subspace:
    """A linear subspace of k^m stored as a canonical RREF basis.

    Two subspaces are equal exactly when their ambient dimensions and
    reduced bases agree; the zero subspace has an empty basis.
    """

    __slots__ = ("ambient", "basis", "pivots")

    def __init__(self, ambient: int, basis: Matrix, pivots: tuple[int, ...]):
        self.ambient = ambient
        self.basis = basis
        self.pivots = pivots

    @classmethod
    def from_rows(cls, ambient: int, rows, ctx: TowerContext = None) -> "Subspace":
        m = Matrix(rows, ctx) if rows else Matrix([], ctx)
        if m.nrows == 0:
            return cls(ambient, Matrix([], ctx if ctx is not None else QQ), ())
        if m.ncols != ambient:
            raise ValueError("row length does not match ambient dimension")
        red, pivots = m.rref()
        kept = [red.rows[i] for i in range(len(pivots))]
        return cls(ambient, Matrix(kept, m.ctx) if kept else Matrix([], m.ctx), pivots)

    @classmethod
    def zero(cls, ambient: int, ctx: TowerContext = QQ) -> "Subspace":
        return cls(ambient, Matrix([], ctx), ())

    @classmethod
    def full(cls, ambient: int, ctx: TowerContext = QQ) -> "Subspace":
        return cls(ambient, Matrix.identity(ambient, ctx), tuple(range(ambient)))

    @property
    def dim(self) -> int:
        return self.basis.nrows

    @property
    def ctx(self) -> TowerContext:
        return self.basis.ctx

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient == other.ambient and self.basis == other.basis

    def __hash__(self):
        return hash((self.ambient, self.basis))

    def contains(self, v) -> bool:
        v = list(v)
        if len(v) != self.ambient:
            raise ValueError("vector length does not match ambient dimension")
        ctx = self.ctx
        v = [_coerce_entry(x, ctx) for x in v]
        for row, p in zip(self.basis.rows, self.pivots):
            if not v[p].is_zero():
                f = v[p]
                v = [x - f * y for x, y in zip(v, row)]
        return all(x.is_zero() for x in v)

    def contains_subspace(self, other: "Subspace") -> bool:
        return all(self.contains(r) for r in other.basis.rows)

    def sum(self, other: "Subspace") -> "Subspace":
        if self.ambient != other.ambient:
            raise ValueError("ambient dimensions differ")
        rows = list(self.basis.rows) + list(other.basis.rows)
        return Subspace.from_rows(self.ambient, rows, ctx=None if rows else self.ctx)

    def intersect(self, other: "Subspace") -> "Subspace":
        """Kernel of the stacked coordinate system: solve c.B1 = d.B2."""
        if self.ambient != other.ambient:
            raise ValueError("ambient dimensions differ")
        k1, k2 = self.dim, other.dim
        if k1 == 0 or k2 == 0:
            return Subspace.zero(self.ambient, self.ctx)
        stacked = Matrix(list(self.basis.rows) + list(other.basis.rows))
        combos = stacked.T.kernel()
        rows = []
        for c in combos.basis.rows:
            v = None
            for coef, brow in zip(c[:k1], self.basis.rows):
                term = vec_scale(coef, brow)
                v = term if v is None else vec_add(v, term)
            if v is not None:
                rows.append(v)
        return Subspace.from_rows(self.ambient, rows, ctx=self.ctx if not rows else None)

    def transform(self, h: Matrix) -> "Subspace":
        """Image h.W for h acting on column vectors."""
        if h.ncols != self.ambient:
            raise ValueError("matrix does not act on this ambient space")
        rows = [apply_matrix(h, r) for r in self.basis.rows]
        return Subspace.from_rows(h.nrows, rows, ctx=self.ctx if not rows else None)

    def to_obj(self):
        return {"ambient": self.ambient, "basis": self.basis.to_obj()}

    @classmethod
    def from_obj(cls, obj, ctx: TowerContext = QQ) -> tuple["Subspace", TowerContext]:
        basis, ctx = Matrix.from_obj(obj["basis"], ctx)
        rows = list(basis.rows)
        return cls.from_rows(int(obj["ambient"]), rows, ctx=ctx), ctx

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"
