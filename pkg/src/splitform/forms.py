"""Symplectic and split quadratic vector spaces with exact invariants.

The symplectic space of half-dimension n has ordered basis
e_1, ..., e_n, f_1, ..., f_n with omega(e_i, f_j) = delta_ij.  The split
quadratic space of the same half-dimension carries, in its diagonal
presentation, the form Q(sum a_i x_i + b_i y_i) = sum a_i^2 - b_i^2; we
work throughout with the associated bilinear form
B(v, w) = Q(v + w) - Q(v) - Q(w), so B(x_i, x_i) = 2.  The split
presentation uses the hyperbolic basis u_i, v_i with B(u_i, v_j) =
2*delta_ij, i.e. the antidiagonal Gram pattern.

Rank of a restricted two-form is reported as dim W - dim rad(W), which is
always even; the radical dimension dim(W cap W^perp) is carried alongside
it, so both readings of "rank" are available to callers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .linalg import Matrix, Subspace, apply_matrix, vec_dot
from .scalars import QQ, Scalar, TowerContext, adjoin_sqrt

__all__ = [
    "RankProfile",
    "SignatureTriple",
    "SymplecticSpace",
    "QuadraticSpace",
    "SpecialLinearSpace",
    "space_from_obj",
    "split_to_diagonal_change_of_basis",
]


@dataclass(frozen=True)
class RankProfile:
    """Dimension, restricted-form rank, and radical dimension of a subspace."""

    dim: int
    rank: int
    radical_dim: int

    def to_obj(self):
        return {"dim": self.dim, "rank": self.rank, "radical_dim": self.radical_dim}


@dataclass(frozen=True)
class SignatureTriple:
    """Inertia (null, pos, neg) of a restricted symmetric form."""

    null: int
    pos: int
    neg: int

    @property
    def dim(self) -> int:
        return self.null + self.pos + self.neg

    def to_obj(self):
        return {"null": self.null, "pos": self.pos, "neg": self.neg}


def _diagonalize_symmetric(g: Matrix) -> list[Scalar]:
    """Diagonal of a congruent diagonal matrix, by symmetric elimination."""
    m = g.nrows
    rows = [list(r) for r in g.rows]
    alive = list(range(m))
    diag = []
    while alive:
        pivot = next((i for i in alive if not rows[i][i].is_zero()), None)
        if pivot is None:
            pair = None
            for i in alive:
                for j in alive:
                    if j > i and not rows[i][j].is_zero():
                        pair = (i, j)
                        break
                if pair:
                    break
            if pair is None:
                diag.extend(g.ctx.zero for _ in alive)
                break
            i, j = pair
            # v_i <- v_i + v_j turns the hyperbolic pair into a diagonal entry
            for k in range(m):
                rows[i][k] = rows[i][k] + rows[j][k]
            for k in range(m):
                rows[k][i] = rows[k][i] + rows[k][j]
            pivot = i
        d = rows[pivot][pivot]
        diag.append(d)
        alive.remove(pivot)
        dinv = d.inverse()
        for i in alive:
            f = rows[i][pivot] * dinv
            if not f.is_zero():
                for k in range(m):
                    rows[i][k] = rows[i][k] - f * rows[pivot][k]
                for k in range(m):
                    rows[k][i] = rows[k][i] - f * rows[k][pivot]
    return diag


class _FormSpace:
    """Shared machinery for spaces carrying a fixed Gram matrix."""

    kind = None

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("half-dimension must be positive")
        self.n = n
        self.dim = 2 * n
        self._gram = self._build_gram()
        # the standard grams are very sparse; form evaluation walks the
        # nonzero entries only
        self._gram_entries = tuple(
            (i, j, x)
            for i, r in enumerate(self._gram.rows)
            for j, x in enumerate(r)
            if not x.is_zero()
        )

    @property
    def gram(self) -> Matrix:
        return self._gram

    def basis_vector(self, i: int) -> tuple:
        z, o = QQ.zero, QQ.one
        return tuple(o if j == i else z for j in range(self.dim))

    def form(self, u, v) -> Scalar:
        acc = None
        for i, j, g in self._gram_entries:
            a, b = u[i], v[j]
            if a.is_zero() or b.is_zero():
                continue
            t = a * g * b
            acc = t if acc is None else acc + t
        return QQ.zero if acc is None else acc

    def gram_of(self, vectors) -> Matrix:
        vectors = list(vectors)
        return Matrix(
            [[self.form(u, v) for v in vectors] for u in vectors],
            ctx=vectors[0][0].ctx if vectors else QQ,
        )

    def restricted_gram(self, w: Subspace) -> Matrix:
        return self.gram_of(w.basis.rows)

    def perp(self, w: Subspace) -> Subspace:
        """{v : form(b, v) = 0 for all basis rows b}."""
        if w.dim == 0:
            return Subspace.full(self.dim, w.ctx)
        return (w.basis @ self._gram).kernel()

    def radical(self, w: Subspace) -> Subspace:
        return w.intersect(self.perp(w))

    def is_isometry(self, g: Matrix) -> bool:
        if g.nrows != self.dim or g.ncols != self.dim:
            return False
        return g.T @ self._gram @ g == self._gram

    def to_obj(self):
        return {"kind": self.kind, "n": self.n}


class SymplecticSpace(_FormSpace):
    """(V, omega) of dimension 2n with the standard symplectic basis."""

    kind = "sp"

    def _build_gram(self) -> Matrix:
        n = self.n
        rows = [[0] * self.dim for _ in range(self.dim)]
        for i in range(n):
            rows[i][n + i] = 1
            rows[n + i][i] = -1
        return Matrix(rows)

    def e(self, i: int) -> tuple:
        if not 1 <= i <= self.n:
            raise ValueError("index out of range")
        return self.basis_vector(i - 1)

    def f(self, i: int) -> tuple:
        if not 1 <= i <= self.n:
            raise ValueError("index out of range")
        return self.basis_vector(self.n + i - 1)

    def rank_profile(self, w: Subspace) -> RankProfile:
        rad = self.radical(w)
        return RankProfile(dim=w.dim, rank=w.dim - rad.dim, radical_dim=rad.dim)

    @staticmethod
    def admissible_rank(n: int, p: int, two_r: int) -> bool:
        """Is there a p-dimensional subspace of restricted rank two_r?"""
        if p < 0 or two_r < 0 or two_r % 2 != 0:
            return False
        return two_r <= p <= 2 * n and 2 * p <= two_r + 2 * n

    def witness_rank(self, p: int, two_r: int) -> Subspace:
        if not self.admissible_rank(self.n, p, two_r):
            raise ValueError(f"no subspace with dim {p} and rank {two_r} in dimension {self.dim}")
        r = two_r // 2
        rows = [self.e(i) for i in range(1, r + 1)]
        rows += [self.f(i) for i in range(1, r + 1)]
        rows += [self.e(i) for i in range(r + 1, r + 1 + (p - two_r))]
        return Subspace.from_rows(self.dim, rows, ctx=QQ)


class QuadraticSpace(_FormSpace):
    """(V, Q) of split signature (n, n), diagonal or split presentation."""

    kind = "so"

    def __init__(self, n: int, presentation: str = "diagonal"):
        if presentation not in ("diagonal", "split"):
            raise ValueError("presentation must be 'diagonal' or 'split'")
        self.presentation = presentation
        super().__init__(n)

    def _build_gram(self) -> Matrix:
        n = self.n
        rows = [[0] * self.dim for _ in range(self.dim)]
        if self.presentation == "diagonal":
            for i in range(n):
                rows[i][i] = 2
                rows[n + i][n + i] = -2
        else:
            for i in range(n):
                rows[i][n + i] = 2
                rows[n + i][i] = 2
        return Matrix(rows)

    def x(self, i: int) -> tuple:
        if not 1 <= i <= self.n:
            raise ValueError("index out of range")
        return self.basis_vector(i - 1)

    def y(self, i: int) -> tuple:
        if not 1 <= i <= self.n:
            raise ValueError("index out of range")
        return self.basis_vector(self.n + i - 1)

    def q_value(self, v) -> Scalar:
        two = QQ.rational(2)
        return self.form(v, v) / two

    def signature(self, w: Subspace) -> SignatureTriple:
        diag = _diagonalize_symmetric(self.restricted_gram(w)) if w.dim else []
        pos = sum(1 for d in diag if d.sign() > 0)
        neg = sum(1 for d in diag if d.sign() < 0)
        return SignatureTriple(null=w.dim - pos - neg, pos=pos, neg=neg)

    @staticmethod
    def admissible_signature(n: int, null: int, pos: int, neg: int) -> bool:
        if min(null, pos, neg) < 0:
            return False
        return null + pos <= n and null + neg <= n

    def witness_signature(self, null: int, pos: int, neg: int) -> Subspace:
        if self.presentation != "diagonal":
            raise ValueError("witnesses are built in the diagonal presentation")
        if not self.admissible_signature(self.n, null, pos, neg):
            raise ValueError(
                f"no subspace with signature ({null},{pos},{neg}) in split form of half-dimension {self.n}"
            )
        rows = [tuple(a + b for a, b in zip(self.x(i), self.y(i))) for i in range(1, null + 1)]
        rows += [self.x(i) for i in range(null + 1, null + 1 + pos)]
        rows += [self.y(i) for i in range(null + 1, null + 1 + neg)]
        return Subspace.from_rows(self.dim, rows, ctx=QQ)

    def to_obj(self):
        return {"kind": self.kind, "n": self.n, "presentation": self.presentation}


class SpecialLinearSpace:
    """Plain k^d acted on by determinant-one matrices; no form."""

    kind = "sl"

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.n = d
        self.dim = d

    def is_isometry(self, g: Matrix) -> bool:
        if g.nrows != self.dim or g.ncols != self.dim:
            return False
        return g.det() == QQ.one

    def to_obj(self):
        return {"kind": self.kind, "n": self.dim}


def space_from_obj(obj) -> object:
    kind = obj["kind"]
    n = int(obj["n"])
    if kind == "sp":
        return SymplecticSpace(n)
    if kind == "so":
        return QuadraticSpace(n, obj.get("presentation", "diagonal"))
    if kind == "sl":
        return SpecialLinearSpace(n)
    raise ValueError(f"unknown space kind {kind!r}")


def split_to_diagonal_change_of_basis(n: int) -> tuple[Matrix, TowerContext]:
    """T with T^t G_diag T = G_split; columns are the split basis in diagonal coordinates.

    u_i = (x_i + y_i) * sqrt(2)/2 and v_i = (x_i - y_i) * sqrt(2)/2, so T
    lives over the sqrt(2) tower and is its own kind of isometry witness.
    """
    ctx, r2 = adjoin_sqrt(QQ, QQ.rational(2))
    h = r2 / 2
    z = ctx.zero
    cols = []
    for i in range(n):
        col = [z] * (2 * n)
        col[i] = h
        col[n + i] = h
        cols.append(col)
    for i in range(n):
        col = [z] * (2 * n)
        col[i] = h
        col[n + i] = -h
        cols.append(col)
    return Matrix(list(zip(*cols)), ctx), ctx
