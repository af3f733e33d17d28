"""Constructive Witt theory: decompositions, completions, and transport.

The two transport theorems implemented here move a subspace onto any
other subspace with the same invariants by an element of the isometry
group: restricted-rank profiles govern the symplectic case, inertia
triples the split-orthogonal case.  Symplectic transport needs division
only; orthogonal transport normalises diagonalised bases and adjoins
square roots of positive length ratios on demand.

Orthogonal transport has one genuine corner: the determinant-one group
has two orbits of maximal totally isotropic subspaces, so a pair of
maximal isotropics in opposite orbits admits no special-orthogonal
transport even though every invariant matches.  That case raises
:class:`SOTransportObstruction` instead of returning a bogus
certificate; every returned certificate is re-verified exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from math import gcd, isqrt, lcm

import numpy as np
from sympy import ZZ, symbols
from sympy import Matrix as SymMatrix
from sympy.matrices.normalforms import smith_normal_decomp
from sympy.polys.matrices import DomainMatrix
from sympy.solvers.diophantine.diophantine import diop_ternary_quadratic

from .forms import QuadraticSpace, SymplecticSpace
from .linalg import Matrix, Subspace, apply_matrix, vec_add, vec_primitive, vec_scale
from .scalars import (
    QQ,
    Scalar,
    TowerContext,
    _fraction_gcd,
    _square_part,
    adjoin_sqrt,
    sqrt_in_tower,
)

__all__ = [
    "WittArtinDecomposition",
    "HyperbolicCompletion",
    "IsometryCertificate",
    "SOTransportObstruction",
    "witt_artin",
    "symplectic_complete",
    "hyperbolic_complete",
    "witt_extend",
    "transport_sp",
    "transport_so",
]


_MINUS_HALF = QQ.rational(Fraction(-1, 2))


class SOTransportObstruction(ValueError):
    """No determinant-one isometry performs the requested transport."""


def _vec_is_zero(v) -> bool:
    return all(x.is_zero() for x in v)


def _max_ctx(*ctxs) -> TowerContext:
    best = QQ
    for c in ctxs:
        if c.level > best.level:
            best = c
    for c in ctxs:
        if not best.extends(c):
            raise ValueError("incompatible tower contexts")
    return best


def _span(ambient, rows) -> Subspace:
    return Subspace.from_rows(ambient, list(rows), ctx=QQ if not rows else None)


def _independent_complement(base_rows, candidate_rows, ambient):
    """Greedy rows from candidates extending span(base_rows) to span(base+candidates)."""
    picked = []
    current = _span(ambient, list(base_rows))
    for r in candidate_rows:
        if not current.contains(r):
            picked.append(r)
            current = current.sum(_span(ambient, [r]))
    return picked


def _symplectic_pairs(space: SymplecticSpace, rows):
    """Greedy symplectic Gram-Schmidt: hyperbolic pairs plus a radical basis.

    Returns (pairs, radical_rows) where omega(a_i, b_i) = 1, distinct
    pairs are orthogonal, and the leftover rows span the radical of the
    restricted form on span(rows).
    """
    pairs = []
    work = [r for r in Subspace.from_rows(space.dim, list(rows)).basis.rows] if rows else []
    while True:
        found = None
        for i, u in enumerate(work):
            for j, v in enumerate(work):
                if j != i and not space.form(u, v).is_zero():
                    found = (i, j)
                    break
            if found:
                break
        if not found:
            return pairs, work
        i, j = found
        u, v = work[i], work[j]
        v = vec_scale(space.form(u, v).inverse(), v)
        pairs.append((u, v))
        rest = []
        for k, r in enumerate(work):
            if k in (i, j):
                continue
            r2 = vec_add(r, vec_scale(-space.form(r, v), u))
            r2 = vec_add(r2, vec_scale(space.form(r2, u), v))
            if not _vec_is_zero(r2):
                rest.append(r2)
        work = list(Subspace.from_rows(space.dim, rest).basis.rows) if rest else []


@dataclass(frozen=True)
class WittArtinDecomposition:
    """W = H + rad(W), W-perp = Jc + rad(W), V = H perp Jc perp rest,
    with rad(W) Lagrangian inside the symplectic subspace rest."""

    space: SymplecticSpace
    w: Subspace
    hyperbolic: Subspace
    coisotropic: Subspace
    rad: Subspace
    rest: Subspace
    h_pairs: tuple = field(repr=False)
    jc_pairs: tuple = field(repr=False)

    def verify(self) -> bool:
        sp, w = self.space, self.w
        rad = sp.radical(w)
        if rad != self.rad:
            return False
        if self.hyperbolic.sum(self.rad) != w:
            return False
        if self.coisotropic.sum(self.rad) != sp.perp(w):
            return False
        hj = self.hyperbolic.sum(self.coisotropic)
        if sp.perp(hj) != self.rest:
            return False
        if self.hyperbolic.dim + self.coisotropic.dim + self.rest.dim != sp.dim:
            return False
        if not self.rest.contains_subspace(self.rad):
            return False
        # rad is Lagrangian in rest: isotropic of half the dimension
        return self.rest.dim == 2 * self.rad.dim and sp.rank_profile(self.rad).rank == 0

    def to_obj(self):
        return {
            "kind": "witt-artin",
            "space": self.space.to_obj(),
            "w": self.w.to_obj(),
            "hyperbolic": self.hyperbolic.to_obj(),
            "coisotropic": self.coisotropic.to_obj(),
            "rad": self.rad.to_obj(),
            "rest": self.rest.to_obj(),
        }


def witt_artin(space: SymplecticSpace, w: Subspace) -> WittArtinDecomposition:
    """Split W along its radical inside the ambient symplectic space."""
    if w.ambient != space.dim:
        raise ValueError("subspace does not live in this space")
    h_pairs, rad_rows = _symplectic_pairs(space, w.basis.rows)
    jc_pairs, rad_rows_perp = _symplectic_pairs(space, space.perp(w).basis.rows)
    hyperbolic = _span(space.dim, [v for p in h_pairs for v in p])
    coisotropic = _span(space.dim, [v for p in jc_pairs for v in p])
    rest = space.perp(hyperbolic.sum(coisotropic))
    dec = WittArtinDecomposition(
        space=space,
        w=w,
        hyperbolic=hyperbolic,
        coisotropic=coisotropic,
        rad=_span(space.dim, rad_rows),
        rest=rest,
        h_pairs=tuple(h_pairs),
        jc_pairs=tuple(jc_pairs),
    )
    if not dec.verify():
        raise AssertionError("Witt-Artin decomposition failed verification")
    return dec


def _lagrangian_dual_pairs(space: SymplecticSpace, rest: Subspace, rad_rows):
    """Inside rest, pair the Lagrangian rad with a dual Lagrangian:
    omega(r_i, z_j) = delta_ij and omega(z_i, z_j) = 0."""
    m = len(rad_rows)
    if m == 0:
        return []
    basis = rest.basis
    gram = space.gram_of(basis.rows)
    coords = [basis.T.solve(r) for r in rad_rows]
    if any(c is None for c in coords):
        raise AssertionError("radical not inside rest")
    cmat = Matrix(coords)
    system = cmat @ gram
    zs = []
    for i in range(m):
        rhs = [QQ.one if j == i else QQ.zero for j in range(m)]
        sol = system.solve(rhs)
        if sol is None:
            raise AssertionError("dual pairing system unsolvable")
        z = None
        for c, brow in zip(sol, basis.rows):
            term = vec_scale(c, brow)
            z = term if z is None else vec_add(z, term)
        for k in range(len(zs)):
            z = vec_add(z, vec_scale(-space.form(z, zs[k]), rad_rows[k]))
        zs.append(z)
    return list(zip(rad_rows, zs))


def symplectic_complete(space: SymplecticSpace, partial) -> Matrix:
    """Complete a prefix of a symplectic basis, given in interleaved order
    a_1, b_1, a_2, b_2, ..., to a full one; returns the matrix whose
    columns are e_1..e_n, f_1..f_n of the completed basis.

    The prefix must be independent and reproduce the standard pairing
    pattern exactly, otherwise a ValueError explains the defect.
    """
    partial = [tuple(x if isinstance(x, Scalar) else QQ.rational(x) for x in v) for v in partial]
    k = len(partial)
    if k > space.dim:
        raise ValueError("more vectors than the dimension allows")
    if k and Subspace.from_rows(space.dim, list(partial)).dim != k:
        raise ValueError("partial basis is linearly dependent")
    for i, u in enumerate(partial):
        for j, v in enumerate(partial):
            expected = QQ.zero
            if j == i + 1 and i % 2 == 0:
                expected = QQ.one
            elif j == i - 1 and i % 2 == 1:
                expected = -QQ.one
            if space.form(u, v) != expected:
                raise ValueError(f"pairing pattern broken at positions {i}, {j}")
    pairs = [(partial[2 * t], partial[2 * t + 1]) for t in range(k // 2)]
    dangling = partial[-1] if k % 2 else None

    while 2 * len(pairs) < space.dim:
        comp = space.perp(_span(space.dim, [v for p in pairs for v in p]))
        if dangling is None:
            dangling = comp.basis.rows[0]
        partner = None
        for r in comp.basis.rows:
            if not space.form(dangling, r).is_zero():
                partner = vec_scale(space.form(dangling, r).inverse(), r)
                break
        if partner is None:
            raise AssertionError("no symplectic partner found")
        pairs.append((dangling, partner))
        dangling = None
    cols = [p[0] for p in pairs] + [p[1] for p in pairs]
    m = Matrix(list(zip(*cols)))
    if not space.is_isometry(m):
        raise AssertionError("completed basis is not symplectic")
    return m


@dataclass(frozen=True)
class HyperbolicCompletion:
    """For W with radical basis r_i, vectors z_i with B(r_i, z_j) = delta_ij,
    Q(z_i) = 0, B(z_i, z_j) = 0, and z_i orthogonal to a fixed complement
    of the radical in W; W + U is nondegenerate."""

    space: QuadraticSpace
    w: Subspace
    pairs: tuple
    u: Subspace
    enlarged: Subspace

    def verify(self) -> bool:
        sp = self.space
        for i, (r, z) in enumerate(self.pairs):
            if not sp.q_value(z).is_zero():
                return False
            for j, (r2, z2) in enumerate(self.pairs):
                want = QQ.one if i == j else QQ.zero
                if sp.form(r, z2) != want:
                    return False
                if i != j and not sp.form(z, z2).is_zero():
                    return False
        if self.u.dim != len(self.pairs):
            return False
        if self.enlarged != self.w.sum(self.u):
            return False
        return sp.radical(self.enlarged).dim == 0

    def to_obj(self):
        return {
            "kind": "hyperbolic-completion",
            "space": self.space.to_obj(),
            "w": self.w.to_obj(),
            "u": self.u.to_obj(),
        }


def hyperbolic_complete(
    space: QuadraticSpace, w: Subspace, rad_rows=None, complement_rows=None
) -> HyperbolicCompletion:
    """Pair the radical of W with fresh null vectors to kill the degeneracy."""
    if w.ambient != space.dim:
        raise ValueError("subspace does not live in this space")
    rad = space.radical(w)
    if rad_rows is None:
        rad_rows = list(rad.basis.rows)
    else:
        rad_rows = [tuple(v) for v in rad_rows]
        if _span(space.dim, rad_rows) != rad:
            raise ValueError("rows do not span the radical")
    if complement_rows is None:
        complement_rows = _independent_complement(rad_rows, w.basis.rows, space.dim)
    m = len(rad_rows)
    constraint_rows = rad_rows + list(complement_rows)
    system = Matrix(constraint_rows) @ space.gram
    zs = []
    for i in range(m):
        rhs = [QQ.one if j == i else QQ.zero for j in range(len(constraint_rows))]
        z = system.solve(rhs)
        if z is None:
            raise AssertionError("hyperbolic pairing system unsolvable")
        z = vec_add(z, vec_scale(-space.q_value(z), rad_rows[i]))
        for j in range(len(zs)):
            z = vec_add(z, vec_scale(-space.form(z, zs[j]), rad_rows[j]))
        zs.append(z)
    u = _span(space.dim, zs)
    comp = HyperbolicCompletion(
        space=space, w=w, pairs=tuple(zip(rad_rows, zs)), u=u, enlarged=w.sum(u)
    )
    if not comp.verify():
        raise AssertionError("hyperbolic completion failed verification")
    return comp


@dataclass(frozen=True)
class IsometryCertificate:
    """A verified group element h with h W1 = W2."""

    kind: str
    space: object
    h: Matrix
    w1: Subspace
    w2: Subspace

    def verify(self) -> bool:
        if not self.space.is_isometry(self.h):
            return False
        # an isometry has determinant +-1, so a certified sign suffices
        if self.h.det_sign() != 1:
            return False
        return self.w1.transform(self.h) == self.w2

    @property
    def ctx(self) -> TowerContext:
        return self.h.ctx

    def to_obj(self):
        return {
            "kind": f"transport-{self.kind}",
            "space": self.space.to_obj(),
            "h": self.h.to_obj(),
            "w1": self.w1.to_obj(),
            "w2": self.w2.to_obj(),
            "tower": self.ctx.describe(),
            "verified": True,
        }


def _lattice_reduced_rows(basis: Matrix):
    """Short spanning rows for a rational row space, or None for towers.

    Diagonalising a subspace adjoins square roots of length ratios whose
    bit size tracks the size of the basis vectors, so work with short
    ones: saturate to the full integer point lattice of the row space
    (integer kernel of the integer kernel, via Smith normal form), then
    LLL-reduce."""
    if basis.ctx.level != 0 or basis.nrows == 0:
        return None
    k, m = basis.nrows, basis.ncols
    if k == m:
        return [
            tuple(QQ.one if i == j else QQ.zero for j in range(m)) for i in range(m)
        ]
    ints = []
    for r in basis.rows:
        den = 1
        for x in r:
            den = lcm(den, x.as_fraction().denominator)
        ints.append([int(x.as_fraction() * den) for x in r])

    def int_kernel(mat):
        # columns of t past the rank span the integer kernel, saturated
        a, _, t = smith_normal_decomp(SymMatrix(mat), domain=ZZ)
        rank = sum(1 for i in range(min(a.shape)) if a[i, i] != 0)
        return rank, [[int(t[i, j]) for i in range(m)] for j in range(rank, m)]

    rank, ann = int_kernel(ints)
    if rank != k:
        raise AssertionError("basis rows are dependent")
    _, rows = int_kernel(ann)
    if len(rows) != k:
        raise AssertionError("saturation lost rank")
    dm = DomainMatrix([[ZZ(v) for v in r] for r in rows], (k, m), ZZ)
    reduced = dm.lll()
    return [tuple(QQ.rational(int(v)) for v in row) for row in reduced.to_list()]


def _pivot_size(x: Scalar):
    if x.is_rational():
        f = x.as_fraction()
        return (0, abs(f.numerator) * f.denominator)
    return (1, 0)


def _sort_diagonal(entries):
    def bucket(e):
        s = e[1].sign()
        return 0 if s > 0 else (1 if s < 0 else 2)

    entries.sort(key=bucket)
    return entries


def _diagonal_basis_lattice(space: QuadraticSpace, w: Subspace):
    """Diagonal basis of a rational subspace built from short vectors.

    Repeatedly takes the shortest usable vector of the saturated integer
    lattice and restricts to its perp, re-reducing each time.  The
    resulting diagonal values stay small, which keeps the radicands that
    transport later adjoins small as well."""
    rows = _lattice_reduced_rows(w.basis)
    out = []
    while rows:
        qs = [space.form(v, v) for v in rows]
        nz = [i for i in range(len(rows)) if not qs[i].is_zero()]
        if nz:
            i = min(nz, key=lambda i: _pivot_size(qs[i]))
            v, qv = rows[i], qs[i]
            if _pivot_size(qv)[1] > 10**4:
                # basis pivot is fat: worth a window search for a shorter one
                alt = _short_anisotropic(space, rows)
                if alt is not None:
                    qa = space.form(alt, alt)
                    if _pivot_size(qa) < _pivot_size(qv):
                        v, qv = alt, qa
        else:
            pair = next(
                (
                    (i, j)
                    for i in range(len(rows))
                    for j in range(i + 1, len(rows))
                    if not space.form(rows[i], rows[j]).is_zero()
                ),
                None,
            )
            if pair is None:
                # the form vanishes identically on what is left
                out.extend((v, QQ.zero) for v in rows)
                break
            v = vec_primitive(vec_add(rows[pair[0]], rows[pair[1]]))
            qv = space.form(v, v)
        out.append((v, qv))
        if len(rows) == 1:
            break
        rows = _perp_restrict(space, rows, (v,))
    return _sort_diagonal(out)


def _diagonal_basis(space: QuadraticSpace, w: Subspace):
    """Basis rows of W on which the restricted form is diagonal, with values.

    Returned sorted: positive lengths first, then negative, then null."""
    if w.basis.ctx.level == 0 and w.dim:
        return _diagonal_basis_lattice(space, w)
    rows = [list(r) for r in w.basis.rows]
    k = len(rows)
    gram = [[space.form(tuple(a), tuple(b)) for b in rows] for a in rows]
    alive = list(range(k))
    order = []
    while alive:
        live = [i for i in alive if not gram[i][i].is_zero()]
        pivot = min(live, key=lambda i: _pivot_size(gram[i][i])) if live else None
        if pivot is None:
            pair = None
            for i in alive:
                for j in alive:
                    if j > i and not gram[i][j].is_zero():
                        pair = (i, j)
                        break
                if pair:
                    break
            if pair is None:
                order.extend(alive)
                break
            i, j = pair
            rows[i] = list(vec_add(tuple(rows[i]), tuple(rows[j])))
            for t in range(k):
                gram[i][t] = gram[i][t] + gram[j][t]
            for t in range(k):
                gram[t][i] = gram[t][i] + gram[t][j]
            pivot = i
        order.append(pivot)
        alive.remove(pivot)
        d = gram[pivot][pivot]
        dinv = d.inverse()
        for i in alive:
            f = gram[i][pivot] * dinv
            if not f.is_zero():
                rows[i] = list(vec_add(tuple(rows[i]), vec_scale(-f, tuple(rows[pivot]))))
                for t in range(k):
                    gram[i][t] = gram[i][t] - f * gram[pivot][t]
                for t in range(k):
                    gram[t][i] = gram[t][i] - f * gram[t][pivot]
    entries = []
    for i in order:
        v = vec_primitive(tuple(rows[i]))
        entries.append((v, space.form(v, v)))
    return _sort_diagonal(entries)


def _combine(coeffs, rows):
    v = None
    for ci, r in zip(coeffs, rows):
        if not ci:
            continue
        term = vec_scale(QQ.rational(ci), r)
        v = term if v is None else vec_add(v, term)
    return vec_primitive(v)


def _int_gram(space: QuadraticSpace, rows):
    """Integer multiple of the gram of rows, with the multiplier."""
    gram = [[space.form(a, b).as_fraction() for b in rows] for a in rows]
    den = 1
    for r in gram:
        for x in r:
            den = lcm(den, x.denominator)
    return [[int(x * den) for x in r] for r in gram], den


# window sizes per dimension chosen to keep the enumeration near 2*10^4
_WINDOW = {1: 1, 2: 24, 3: 8, 4: 4, 5: 3, 6: 2, 7: 1}


def _window_combos(k: int):
    limit = _WINDOW.get(k, 0)
    for bound in range(1, limit + 1):
        for c in product(range(-bound, bound + 1), repeat=k):
            if max(map(abs, c)) != bound:
                continue
            lead = next((x for x in c if x), 0)
            if lead <= 0:
                continue
            yield c


def _eval_int_gram(g, c, k):
    q = sum(c[i] * c[i] * g[i][i] for i in range(k))
    return q + 2 * sum(
        c[i] * c[j] * g[i][j] for i in range(k) for j in range(i + 1, k)
    )


def _short_isotropic(space: QuadraticSpace, rows):
    """A short isotropic vector in the span of rational rows, or None.

    Checks the reduced basis vectors, then rational zeros of every
    two-variable restriction (a square discriminant gives one with
    unbounded coefficients), then small integer combinations.  A miss
    never costs correctness: the caller leaves the direction in the
    anisotropic core and pays one adjoined square root instead of
    none."""
    k = len(rows)
    g, _ = _int_gram(space, rows)
    for i in range(k):
        if not g[i][i]:
            return vec_primitive(rows[i])
    if k < 2:
        return None
    for i in range(k):
        for j in range(i + 1, k):
            disc = g[i][j] * g[i][j] - g[i][i] * g[j][j]
            if disc < 0:
                continue
            s = isqrt(disc)
            if s * s != disc:
                continue
            c = [0] * k
            c[i], c[j] = s - g[i][j], g[i][i]
            return _combine(c, rows)
    c = _window_zero(g, k)
    return _combine(c, rows) if c else None


def _canon_combo(c):
    lead = next((x for x in c if x), 0)
    return tuple(-x for x in c) if lead < 0 else c


def _combo_key(c):
    c = _canon_combo(c)
    return (sum(x * x for x in c), c)


def _window_zero(g, k):
    """First window combination with gram value zero in shell order, or None."""
    for c in _window_combos(k):
        if not _eval_int_gram(g, c, k):
            return c
    return None


def _short_anisotropic(space: QuadraticSpace, rows):
    """The window vector with the smallest nonzero length, or None."""
    k = len(rows)
    g, _ = _int_gram(space, rows)
    bound = _WINDOW.get(k, 0)
    best = None
    if bound and _box_safe(g, k, bound):
        # key mirrors the shell-order scan: value, then shell, then rank
        for full, q in _box_chunks(g, k, bound):
            nz = np.flatnonzero(q)
            if not nz.size:
                continue
            mv = np.min(np.abs(q[nz]))
            for i in np.flatnonzero(np.abs(q) == mv):
                c = tuple(int(x) for x in full[i])
                if next((x for x in c if x), 0) < 0:
                    continue
                key = (abs(_eval_int_gram(g, c, k)), max(map(abs, c)), c)
                if best is None or key < best[0]:
                    best = (key, c)
    else:
        for c in _window_combos(k):
            q = abs(_eval_int_gram(g, c, k))
            if q and (best is None or q < best[0][0]):
                best = ((q,), c)
    return _combine(best[1], rows) if best else None


# escalation caps for the vectorized searches, sized to keep the largest
# sweep in the tens of millions of integer operations
_HARD_BOUND = {2: 64, 3: 32, 4: 16, 5: 12, 6: 7, 7: 5, 8: 3}
_VALUE_BOUND = {2: 160, 3: 48, 4: 20, 5: 10}

# residue masks for vectorized perfect-square screening
_SQ_MOD = {}
for _m in (64, 63, 65, 61):
    _mask = np.zeros(_m, dtype=bool)
    for _i in range(_m):
        _mask[_i * _i % _m] = True
    _SQ_MOD[_m] = _mask
del _m, _mask, _i


def _box_chunks(g, k, bound):
    """Integer combinations with sup norm <= bound and their gram values.

    Yields (combos, values) in chunks; the leading coordinate stays
    nonnegative, which halves the sweep without losing any direction.
    Values are exact provided k^2 bound^2 max|g| stays below 2^63."""
    gm = np.array(g, dtype=np.int64)
    tail = min(k - 1, 5)
    lead = k - tail
    rng = np.arange(-bound, bound + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * tail), indexing="ij")
    full = np.empty((rng.size**tail, k), dtype=np.int64)
    for j, grid in enumerate(grids):
        full[:, lead + j] = grid.ravel()
    heads = product(range(bound + 1), *([range(-bound, bound + 1)] * (lead - 1)))
    for head in heads:
        for j, h in enumerate(head):
            full[:, j] = h
        yield full, np.einsum("ij,ij->i", full @ gm, full)


def _box_safe(g, k, bound):
    gmax = max(abs(x) for r in g for x in r)
    return k * k * bound * bound * gmax < 1 << 62


def _hard_isotropic(space: QuadraticSpace, rows):
    """Isotropic vector by exhaustive screened enumeration, or None.

    Runs only when the peel counts of two matched restrictions disagree,
    so a vector is known to exist unless the forms differ in some local
    invariant; values are screened in bulk and every hit is confirmed
    with exact integer arithmetic before use."""
    k = len(rows)
    if k < 2:
        return None
    g, _ = _int_gram(space, rows)
    bmax = _HARD_BOUND.get(k, 2)
    if not _box_safe(g, k, bmax):
        return None
    for bound in sorted({min(4, bmax), bmax}):
        best = None
        for full, q in _box_chunks(g, k, bound):
            for i in np.flatnonzero(q == 0):
                c = tuple(int(x) for x in full[i])
                if not any(c) or _eval_int_gram(g, c, k):
                    continue
                key = _combo_key(c)
                if best is None or key < best[0]:
                    best = (key, c)
        if best:
            return _combine(best[1], rows)
    return None


def _value_scaled(space: QuadraticSpace, rows, c, target: Fraction):
    """The combination c of rows rescaled so its length is target exactly."""
    v = _combine(c, rows)
    r2 = space.form(v, v).as_fraction() / target
    s = Fraction(isqrt(r2.numerator), isqrt(r2.denominator))
    return vec_scale(QQ.rational(1 / s), v)


def _value_combo(space: QuadraticSpace, rows, target: Scalar):
    """A combination v of rows with q(v) equal to target exactly, or None.

    Any combination whose value differs from target by a nonzero
    rational square works after rescaling.  The sweep is vectorized,
    screened by sign and by square residues, and every survivor is
    confirmed with exact integer arithmetic; the shortest hit wins."""
    k = len(rows)
    g, den = _int_gram(space, rows)
    t = target.as_fraction()
    for c in _window_combos(k):
        q = _eval_int_gram(g, c, k)
        if not q:
            continue
        ratio = Fraction(q, den) / t
        if ratio < 0:
            continue
        num, dnm = ratio.numerator, ratio.denominator
        sn, sd = isqrt(num), isqrt(dnm)
        if sn * sn == num and sd * sd == dnm:
            return _value_scaled(space, rows, c, t)
    bound = _VALUE_BOUND.get(k, 0)
    if not bound or not _box_safe(g, k, bound):
        return None
    # q(c)/(den t) is a positive square iff q(c) t > 0 and the integer
    # q(c) den numerator(t) denominator(t) is a perfect square
    mult = den * abs(t.numerator) * t.denominator
    tsign = 1 if t > 0 else -1
    best = None
    for full, q in _box_chunks(g, k, bound):
        cand = np.sign(q) == tsign
        for m, mask in _SQ_MOD.items():
            r = (q % m) * (mult % m) % m
            cand &= mask[r]
        for i in np.flatnonzero(cand):
            c = tuple(int(x) for x in full[i])
            s2 = _eval_int_gram(g, c, k) * mult
            if s2 > 0 and isqrt(s2) ** 2 == s2:
                key = _combo_key(c)
                if best is None or key < best[0]:
                    best = (key, c)
    return _value_scaled(space, rows, best[1], t) if best else None


_XYZ = symbols("x y z", integer=True)


def _conic_combo(space: QuadraticSpace, diag, target: Scalar):
    """Representation of target through coordinate planes, or None.

    Works on a rational diagonalisation of the lattice: a single slot
    whose ratio to the target is square rescales directly, and each
    coordinate plane poses a ternary equation e_i x^2 + e_j y^2 = t z^2
    decided constructively by descent.  Either way a hit has length
    exactly target, so the slot match costs no adjoined root."""
    ent = [(v, d.as_fraction()) for v, d in diag if not d.is_zero()]
    t = target.as_fraction()
    for v, e in ent:
        r = e / t
        if r > 0:
            num, den = r.numerator, r.denominator
            sn, sd = isqrt(num), isqrt(den)
            if sn * sn == num and sd * sd == den:
                return vec_scale(QQ.rational(Fraction(sd, sn)), v)
    x, y, z = _XYZ
    for i in range(len(ent)):
        for j in range(i + 1, len(ent)):
            (vi, ei), (vj, ej) = ent[i], ent[j]
            if (ei > 0) == (ej > 0) and (ei > 0) != (t > 0):
                continue
            den = lcm(lcm(ei.denominator, ej.denominator), t.denominator)
            a, b, c = int(ei * den), int(ej * den), int(t * den)
            x0, y0, z0 = diop_ternary_quadratic(a * x**2 + b * y**2 - c * z**2)
            if x0 is None or (x0, y0, z0) == (0, 0, 0):
                continue
            x0, y0, z0 = int(x0), int(y0), int(z0)
            p = vec_add(
                vec_scale(QQ.rational(x0), vi), vec_scale(QQ.rational(y0), vj)
            )
            if z0:
                w = vec_scale(QQ.rational(Fraction(1, z0)), p)
            else:
                # q(p) = 0, so the plane is hyperbolic and represents
                # everything: pair p with a second null direction p'
                # having B(p, p') = beta, then q(p + s p') = 2 s beta
                u = vi if not space.form(p, vi).is_zero() else vj
                beta = space.form(p, u)
                lam = space.form(u, u) / (beta + beta)
                pp = vec_add(u, vec_scale(-lam, p))
                s = target / (space.form(p, pp) + space.form(p, pp))
                w = vec_add(p, vec_scale(s, pp))
            if space.form(w, w) == target:
                return w
    return None


def _any_anisotropic(space: QuadraticSpace, w: Subspace):
    """Some primitive vector of W with q != 0, or None if q vanishes on W."""
    rows = [tuple(r) for r in w.basis.rows]
    for r in rows:
        if not space.form(r, r).is_zero():
            return vec_primitive(r)
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            if not space.form(rows[i], rows[j]).is_zero():
                # q(ri + rj) = 2 B(ri, rj) on null vectors
                return vec_primitive(vec_add(rows[i], rows[j]))
    return None


def _perp_restrict(space: QuadraticSpace, rows, vs):
    """Reduced rows of the sublattice of span(rows) orthogonal to vs."""
    cons = Matrix([[space.form(r, v) for r in rows] for v in vs])
    sub = []
    for c in cons.kernel().basis.rows:
        acc = None
        for ci, r in zip(c, rows):
            term = vec_scale(ci, r)
            acc = term if acc is None else vec_add(acc, term)
        sub.append(acc)
    return _lattice_reduced_rows(_span(space.dim, sub).basis) if sub else []


def _peel_adapted(space: QuadraticSpace, w: Subspace, limit=None, hard=False):
    """Split a rational subspace as radical + hyperbolic pairs + core.

    Each pair (x, y) has q(x) = q(y) = 0 and B(x, y) = 1, distinct
    blocks are orthogonal, and the core is diagonal with nonzero
    values.  Hyperbolic blocks carry no metric data, so two subspaces
    of equal signature match rationally along them; only the cores can
    force adjoined square roots, and generic cores are small."""
    rad_rows = [tuple(r) for r in space.radical(w).basis.rows]
    comp = _independent_complement(
        rad_rows, [tuple(r) for r in w.basis.rows], space.dim
    )
    pairs = []
    rows = _lattice_reduced_rows(_span(space.dim, comp).basis) if comp else []
    while rows:
        if limit is not None and len(pairs) >= limit:
            break
        x = _short_isotropic(space, rows)
        if x is None and hard:
            x = _hard_isotropic(space, rows)
        if x is None:
            break
        g = [space.form(r, x) for r in rows]
        i = min(
            (i for i in range(len(rows)) if not g[i].is_zero()),
            key=lambda i: _pivot_size(g[i]),
        )
        y0 = vec_scale(g[i].inverse(), rows[i])
        # slide along x to make the partner isotropic as well
        t = space.form(y0, y0) * _MINUS_HALF
        y = vec_add(y0, vec_scale(t, x))
        pairs.append((x, y))
        rows = _perp_restrict(space, rows, (x, y))
    core = _diagonal_basis(space, _span(space.dim, rows)) if rows else []
    return rad_rows, pairs, core


def _paired_orthogonal(space: QuadraticSpace, dom_rows, img_rows):
    """Orthogonalize matched vector lists with one set of row operations.

    Requires the two lists to have equal grams (an isometric pairing);
    returns (domain vectors, image vectors) with both grams diagonal and
    entrywise equal.  The span must be nondegenerate.
    """
    k = len(dom_rows)
    dom = [tuple(r) for r in dom_rows]
    img = [tuple(r) for r in img_rows]
    gram = [[space.form(a, b) for b in dom] for a in dom]
    for i in range(k):
        for j in range(k):
            if space.form(img[i], img[j]) != gram[i][j]:
                raise AssertionError("pairing is not isometric")
    alive = list(range(k))
    out_d, out_i = [], []
    while alive:
        pivot = next((i for i in alive if not gram[i][i].is_zero()), None)
        if pivot is None:
            pair = next(
                ((i, j) for i in alive for j in alive if j > i and not gram[i][j].is_zero()),
                None,
            )
            if pair is None:
                raise AssertionError("span is degenerate")
            i, j = pair
            dom[i] = vec_add(dom[i], dom[j])
            img[i] = vec_add(img[i], img[j])
            for t in range(k):
                gram[i][t] = gram[i][t] + gram[j][t]
            for t in range(k):
                gram[t][i] = gram[t][i] + gram[t][j]
            pivot = i
        alive.remove(pivot)
        # rescale the pair by a shared rational: grams stay matched and
        # the elimination below works with primitive pivot vectors
        c = Fraction(0)
        for x in (*dom[pivot], *img[pivot]):
            c = _fraction_gcd(c, x.content())
            if c == 1:
                break
        if c not in (0, 1):
            f = QQ.rational(1 / c)
            dom[pivot] = vec_scale(f, dom[pivot])
            img[pivot] = vec_scale(f, img[pivot])
            for t in range(k):
                gram[pivot][t] = f * gram[pivot][t]
            for t in range(k):
                gram[t][pivot] = f * gram[t][pivot]
        d = gram[pivot][pivot]
        dinv = d.inverse()
        for i in alive:
            f = gram[i][pivot] * dinv
            if not f.is_zero():
                dom[i] = vec_add(dom[i], vec_scale(-f, dom[pivot]))
                img[i] = vec_add(img[i], vec_scale(-f, img[pivot]))
                for t in range(k):
                    gram[i][t] = gram[i][t] - f * gram[pivot][t]
                for t in range(k):
                    gram[t][i] = gram[t][i] - f * gram[t][pivot]
        out_d.append(dom[pivot])
        out_i.append(img[pivot])
    return out_d, out_i


def witt_extend(space: QuadraticSpace, w1: Subspace, w2: Subspace, phi: Matrix) -> IsometryCertificate:
    """Extend a partial isometry phi: W1 -> W2 to the full isometry group.

    ``phi`` row i is the image of basis row i of W1.  The result has
    determinant one and restricts to phi on W1; if the only extensions
    have determinant -1 (possible once W2 and its radical fill the whole
    space) an SOTransportObstruction is raised.
    """
    if w1.dim != w2.dim:
        raise ValueError("dimension mismatch")
    if phi.nrows != w1.dim or (w1.dim and phi.ncols != space.dim):
        raise ValueError("phi has the wrong shape")
    images = list(phi.rows)
    if _span(space.dim, images) != w2:
        raise ValueError("phi does not map W1 onto W2")
    if space.gram_of(w1.basis.rows) != space.gram_of(images):
        raise ValueError("phi does not preserve the form on W1")

    rad1 = space.radical(w1)
    # radical rows of W1 expressed in basis coordinates, pushed through phi
    rad1_rows = list(rad1.basis.rows)
    coords = [w1.basis.T.solve(r) for r in rad1_rows]
    rad2_rows = []
    for c in coords:
        img = None
        for coef, im in zip(c, images):
            term = vec_scale(coef, im)
            img = term if img is None else vec_add(img, term)
        rad2_rows.append(img)
    comp1 = _independent_complement(rad1_rows, w1.basis.rows, space.dim)
    comp1_coords = [w1.basis.T.solve(r) for r in comp1]
    comp2 = []
    for c in comp1_coords:
        img = None
        for coef, im in zip(c, images):
            term = vec_scale(coef, im)
            img = term if img is None else vec_add(img, term)
        comp2.append(img)

    domain_rows = list(w1.basis.rows)
    image_rows = list(images)
    if rad1.dim:
        hc1 = hyperbolic_complete(space, w1, rad_rows=rad1_rows, complement_rows=comp1)
        hc2 = hyperbolic_complete(space, w2, rad_rows=rad2_rows, complement_rows=comp2)
        domain_rows += [z for _, z in hc1.pairs]
        image_rows += [z for _, z in hc2.pairs]

    m_img = _span(space.dim, image_rows)
    nperp = space.perp(m_img)

    # Orthogonalize the matched pairs simultaneously: the same row
    # operations applied to both sides keep the grams equal, so each
    # domain vector and its image share the (nonzero) diagonal value.
    dom, img = _paired_orthogonal(space, domain_rows, image_rows)

    # Chain of reflections sending each domain vector to its image.
    # A reflection built from m - n (or from m + n and then n) is
    # orthogonal to every previously placed image, so earlier pairs
    # stay put; this is the classical extension argument, and it never
    # leaves the field the pair data lives in.
    refl = []

    def reflect(v, w, qw):
        c = space.form(v, w) / qw
        if c.is_zero():
            return v
        return vec_add(v, vec_scale(-c - c, w))

    cur = list(dom)
    for i, target in enumerate(img):
        m = cur[i]
        if tuple(m) == tuple(target):
            continue
        # reflections only see the direction of w, so keep w primitive
        diff = vec_primitive(vec_add(m, vec_scale(-QQ.one, target)))
        qd = space.form(diff, diff)
        if not qd.is_zero():
            steps = [(diff, qd)]
        else:
            add = vec_primitive(vec_add(m, target))
            tgt = vec_primitive(target)
            steps = [(add, space.form(add, add)), (tgt, space.form(tgt, tgt))]
        for w, qw in steps:
            refl.append((w, qw))
            for j in range(i, len(cur)):
                cur[j] = reflect(cur[j], w, qw)
        if tuple(cur[i]) != tuple(target):
            raise AssertionError("reflection chain failed to place a vector")

    if len(refl) % 2:
        # determinant is -1 so far; one more reflection, inside the
        # complement of the image, restores it without moving W2
        fix = _any_anisotropic(space, nperp)
        if fix is None:
            raise SOTransportObstruction(
                "every isometry extending phi has determinant -1"
            )
        refl.append((fix, space.form(fix, fix)))

    ctx = _max_ctx(space.gram.ctx, w1.basis.ctx, w2.basis.ctx, phi.ctx)
    cols = []
    for j in range(space.dim):
        v = tuple(QQ.one if i == j else QQ.zero for i in range(space.dim))
        for w, qw in refl:
            v = reflect(v, w, qw)
        cols.append(v)
    h = Matrix([[cols[j][i] for j in range(space.dim)] for i in range(space.dim)], ctx)

    # h is a product of exact reflections with even parity, so it is an
    # isometry of determinant one by construction; only the restriction
    # to W1 needs a check here, callers re-verify the certificate
    cert = IsometryCertificate(kind="so", space=space, h=h, w1=w1, w2=w2)
    for row, image in zip(w1.basis.rows, images):
        if apply_matrix(h, row) != tuple(image):
            raise AssertionError("extension does not restrict to phi")
    return cert


def transport_sp(space: SymplecticSpace, w1: Subspace, w2: Subspace) -> IsometryCertificate:
    """A symplectic h with h W1 = W2, for matching dimension and rank."""
    if w1.ambient != space.dim or w2.ambient != space.dim:
        raise ValueError("subspaces do not live in this space")
    if w1.dim != w2.dim:
        raise ValueError(f"dimension mismatch: {w1.dim} != {w2.dim}")
    p1, p2 = space.rank_profile(w1), space.rank_profile(w2)
    if p1.rank != p2.rank:
        raise ValueError(f"rank mismatch: {p1.rank} != {p2.rank}")

    def adapted_basis(dec: WittArtinDecomposition):
        pairs = list(dec.h_pairs) + list(dec.jc_pairs)
        pairs += _lagrangian_dual_pairs(space, dec.rest, list(dec.rad.basis.rows))
        rows = [v for p in pairs for v in p]
        return Matrix(rows)

    d1 = adapted_basis(witt_artin(space, w1))
    d2 = adapted_basis(witt_artin(space, w2))
    if space.gram_of(d1.rows) != space.gram_of(d2.rows):
        raise AssertionError("adapted bases have different pairing patterns")
    # h maps a full basis with equal pairing grams onto another, so it
    # is symplectic by construction; callers re-verify the certificate
    h = (d1.inverse() @ d2).T
    return IsometryCertificate(kind="sp", space=space, h=h, w1=w1, w2=w2)


def transport_so(space: QuadraticSpace, w1: Subspace, w2: Subspace) -> IsometryCertificate:
    """A determinant-one isometry h with h W1 = W2, for matching signature.

    Raises SOTransportObstruction for the one impossible configuration:
    both subspaces maximal totally isotropic but in opposite orbits of
    the determinant-one group.
    """
    if w1.ambient != space.dim or w2.ambient != space.dim:
        raise ValueError("subspaces do not live in this space")
    s1, s2 = space.signature(w1), space.signature(w2)
    if s1 != s2:
        raise ValueError(f"signature mismatch: {s1} != {s2}")

    if w1.dim > space.n:
        # an isometry aligning the orthogonal complements aligns the
        # subspaces; the complements are smaller, so the matching needs
        # fewer adjoined roots
        inner = transport_so(space, space.perp(w1), space.perp(w2))
        if w1.transform(inner.h) != w2:
            raise AssertionError("complement transport failed to align")
        return IsometryCertificate(kind="so", space=space, h=inner.h, w1=w1, w2=w2)

    def attempt(dom, img) -> IsometryCertificate:
        # re-express phi on the canonical RREF basis of W1
        dmat = Matrix(dom)
        coords = [dmat.T.solve(r) for r in w1.basis.rows]
        phi_rows = []
        for c in coords:
            im = None
            for coef, iv in zip(c, img):
                term = vec_scale(coef, iv)
                im = term if im is None else vec_add(im, term)
            phi_rows.append(im)
        return witt_extend(space, w1, w2, Matrix(phi_rows))

    if w1.basis.ctx.level == 0 and w2.basis.ctx.level == 0:
        return _transport_so_peeled(space, w1, w2, attempt)

    e1 = _diagonal_basis(space, w1)
    e2 = _diagonal_basis(space, w2)

    def slot_map(entries2):
        dom, img = [], []
        ctx = _max_ctx(space.gram.ctx, w1.basis.ctx, w2.basis.ctx)
        for (v1, d1v), (v2, d2v) in zip(e1, entries2):
            if d1v.sign() != d2v.sign():
                raise AssertionError("diagonalised bases disagree in inertia")
            if d1v.is_zero():
                scale = QQ.one
            else:
                ctx, scale = adjoin_sqrt(ctx, d1v / d2v)
            dom.append(v1)
            img.append(vec_scale(scale, v2))
        return dom, img

    try:
        return attempt(*slot_map(e2))
    except SOTransportObstruction:
        if all(d.is_zero() for _, d in e2):
            raise SOTransportObstruction(
                "maximal totally isotropic subspaces in opposite determinant-one orbits"
            ) from None
        flipped = []
        done = False
        for v, d in e2:
            if not done and not d.is_zero():
                flipped.append((vec_scale(-QQ.one, v), d))
                done = True
            else:
                flipped.append((v, d))
        return attempt(*slot_map(flipped))


def _radicand_bits(ratio: Scalar) -> int:
    f = ratio.as_fraction()
    _, m = _square_part(abs(f.numerator) * f.denominator)
    return m.bit_length()


def _represent(space: QuadraticSpace, rows, diag, target):
    """A vector of the lattice span with length exactly target, or None."""
    if not rows:
        return None
    y = _value_combo(space, rows, target)
    if y is None:
        y = _conic_combo(space, diag, target)
    return y


def _match_core(space: QuadraticSpace, core1, core2):
    """Match the two core spans slot by slot across sides.

    Witt cancellation keeps the leftovers matched after every split, so
    each round tries to represent a side-1 value exactly inside side 2,
    then a side-2 value inside side 1, and only when both searches miss
    defers a same-sign slot pair to a square root of its value ratio.
    Returns triples (domain vector, image vector, ratio), ratio None
    when the pairing is exact."""
    matched = []
    anch1, anch2 = list(core1), list(core2)
    rows2 = (
        _lattice_reduced_rows(_span(space.dim, [v for v, _ in anch2]).basis)
        if anch2
        else []
    )
    while anch1:
        by_size = lambda e: _pivot_size(e[1])
        pick = None
        for v1, d1 in sorted(anch1, key=by_size):
            y = _represent(space, rows2, anch2, d1)
            if y is not None:
                pick = (v1, d1)
                matched.append((v1, y, None))
                anch1.remove(pick)
                rows2 = _perp_restrict(space, rows2, (y,)) if len(rows2) > 1 else []
                anch2 = (
                    _diagonal_basis(space, _span(space.dim, rows2)) if rows2 else []
                )
                break
        if pick is not None:
            continue
        rows1 = _lattice_reduced_rows(_span(space.dim, [v for v, _ in anch1]).basis)
        for v2, d2 in sorted(anch2, key=by_size):
            y = _represent(space, rows1, anch1, d2)
            if y is not None:
                pick = (v2, d2)
                matched.append((y, v2, None))
                anch2.remove(pick)
                rows2 = _perp_restrict(space, rows2, (v2,)) if len(rows2) > 1 else []
                rows1 = _perp_restrict(space, rows1, (y,)) if len(rows1) > 1 else []
                anch1 = (
                    _diagonal_basis(space, _span(space.dim, rows1)) if rows1 else []
                )
                break
        if pick is not None:
            continue
        # no exact link either way: pay one root, on the smallest radicand
        best = None
        for v1, d1 in anch1:
            for v2, d2 in anch2:
                if (d1.sign() > 0) != (d2.sign() > 0):
                    continue
                bits = _radicand_bits(d1 / d2)
                if best is None or bits < best[0]:
                    best = (bits, (v1, d1), (v2, d2))
        if best is None:
            raise AssertionError("adapted cores disagree in inertia")
        _, (v1, d1), (v2, d2) = best
        matched.append((v1, v2, d1 / d2))
        anch1.remove((v1, d1))
        anch2.remove((v2, d2))
        rows2 = _perp_restrict(space, rows2, (v2,)) if len(rows2) > 1 else []
    return matched


def _transport_so_peeled(space: QuadraticSpace, w1: Subspace, w2: Subspace, attempt):
    rad1, pairs1, core1 = _peel_adapted(space, w1)
    rad2, pairs2, core2 = _peel_adapted(space, w2)
    if len(pairs1) != len(pairs2):
        # matched restrictions usually share their rational Witt index,
        # so a shorter peel is a window-search miss: dig harder on that
        # side before giving up pairs on the other
        want = max(len(pairs1), len(pairs2))
        if len(pairs1) < want:
            rad1, pairs1, core1 = _peel_adapted(space, w1, limit=want, hard=True)
        if len(pairs2) < want:
            rad2, pairs2, core2 = _peel_adapted(space, w2, limit=want, hard=True)
    a = min(len(pairs1), len(pairs2))
    if len(pairs1) > a:
        rad1, pairs1, core1 = _peel_adapted(space, w1, limit=a)
    if len(pairs2) > a:
        rad2, pairs2, core2 = _peel_adapted(space, w2, limit=a)
    if len(rad1) != len(rad2) or len(core1) != len(core2):
        raise AssertionError("adapted decompositions disagree")
    matched = _match_core(space, core1, core2)
    dom = list(rad1) + [v for p in pairs1 for v in p] + [v for v, _, _ in matched]

    def images(flip_core: bool, flip_pair: bool):
        ctx = _max_ctx(space.gram.ctx, w1.basis.ctx, w2.basis.ctx)
        img = list(rad2)
        for i, (x, y) in enumerate(pairs2):
            # swapping one dual pair is an isometry of W2 whose
            # extensions flip determinant, like negating a core vector
            img += [y, x] if flip_pair and i == 0 else [x, y]
        for i, (_, v2, ratio) in enumerate(matched):
            if ratio is None:
                scale = -QQ.one if flip_core and i == 0 else QQ.one
            else:
                ctx, scale = adjoin_sqrt(ctx, ratio)
                if flip_core and i == 0:
                    scale = -scale
            img.append(vec_scale(scale, v2))
        return img

    try:
        return attempt(dom, images(False, False))
    except SOTransportObstruction:
        if matched:
            return attempt(dom, images(True, False))
        if pairs2:
            return attempt(dom, images(False, True))
        raise SOTransportObstruction(
            "maximal totally isotropic subspaces in opposite determinant-one orbits"
        ) from None
