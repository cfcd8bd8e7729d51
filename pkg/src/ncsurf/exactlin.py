"""Exact integer linear algebra and finitely generated abelian groups.

Everything in this module is immutable after construction and all operations
are pure functions, so values can be shared freely between threads.

Conventions, fixed once for the whole package:

* A finitely generated abelian group is presented as Z^n modulo the *column*
  span of an n x m relation matrix.
* Smith normal form pivoting is deterministic: the candidate with the smallest
  absolute value wins, ties broken by lowest row index, then lowest column
  index.  Reports built on top of this are byte-reproducible.
* A dimension-0 determinant is 1 (empty product).
* Rational matrices are handled exactly via Fraction; matrices with float
  entries go through numpy with a descent tolerance (default 1e-9).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy


class IllDefinedMap(ValueError):
    """A matrix does not send source relations into the target relation span."""


class NotDescending(ValueError):
    """An ambient action does not preserve the relation span, so it does not
    induce a map on the torsion-free quotient."""

    def __init__(self, violation):
        super().__init__(f"action does not descend (violation {violation})")
        self.violation = violation


def _as_int(x):
    if isinstance(x, bool) or not isinstance(x, int):
        raise TypeError(f"integer entry expected, got {x!r}")
    return x


class IntMatrix:
    """Immutable arbitrary-precision integer matrix, row-major storage.

    >>> m = IntMatrix.from_rows([[2, 4], [6, 8]])
    >>> m.entry(1, 0)
    6
    >>> (m * IntMatrix.identity(2)) == m
    True
    """

    __slots__ = ("rows", "cols", "_entries")

    def __init__(self, rows, cols, entries):
        if rows < 0 or cols < 0:
            raise ValueError("negative shape")
        entries = tuple(_as_int(e) for e in entries)
        if len(entries) != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {len(entries)}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "_entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("IntMatrix is immutable")

    @classmethod
    def from_rows(cls, rows):
        rows = [list(r) for r in rows]
        n = len(rows)
        c = len(rows[0]) if rows else 0
        if any(len(r) != c for r in rows):
            raise ValueError("ragged rows")
        return cls(n, c, [e for r in rows for e in r])

    @classmethod
    def identity(cls, n):
        return cls(n, n, [1 if i == j else 0 for i in range(n) for j in range(n)])

    @classmethod
    def zero(cls, rows, cols):
        return cls(rows, cols, [0] * (rows * cols))

    @classmethod
    def diagonal(cls, diag):
        diag = list(diag)
        n = len(diag)
        return cls(n, n, [diag[i] if i == j else 0 for i in range(n) for j in range(n)])

    @classmethod
    def column(cls, vec):
        vec = list(vec)
        return cls(len(vec), 1, vec)

    def entry(self, i, j):
        return self._entries[i * self.cols + j]

    def row(self, i):
        return self._entries[i * self.cols:(i + 1) * self.cols]

    def col(self, j):
        return tuple(self._entries[i * self.cols + j] for i in range(self.rows))

    def rows_tuple(self):
        return tuple(self.row(i) for i in range(self.rows))

    def transpose(self):
        return IntMatrix(self.cols, self.rows,
                         [self.entry(i, j) for j in range(self.cols) for i in range(self.rows)])

    def __mul__(self, other):
        if not isinstance(other, IntMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError("shape mismatch in product")
        ocols = other.cols
        out = [0] * (self.rows * ocols)
        for i in range(self.rows):
            rowi = self.row(i)
            base = i * ocols
            for k, a in enumerate(rowi):
                if a:
                    orow = other.row(k)
                    for j in range(ocols):
                        if orow[j]:
                            out[base + j] += a * orow[j]
        return IntMatrix(self.rows, ocols, out)

    def mul_vec(self, vec):
        vec = tuple(vec)
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        return tuple(sum(a * v for a, v in zip(self.row(i), vec)) for i in range(self.rows))

    def __add__(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch in sum")
        return IntMatrix(self.rows, self.cols,
                         [a + b for a, b in zip(self._entries, other._entries)])

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return IntMatrix(self.rows, self.cols, [-a for a in self._entries])

    def scale(self, c):
        return IntMatrix(self.rows, self.cols, [c * a for a in self._entries])

    def hstack(self, other):
        if self.rows != other.rows:
            raise ValueError("row mismatch in hstack")
        ents = []
        for i in range(self.rows):
            ents.extend(self.row(i))
            ents.extend(other.row(i))
        return IntMatrix(self.rows, self.cols + other.cols, ents)

    def vstack(self, other):
        if self.cols != other.cols:
            raise ValueError("column mismatch in vstack")
        return IntMatrix(self.rows + other.rows, self.cols, self._entries + other._entries)

    @classmethod
    def block_diag(cls, blocks):
        blocks = list(blocks)
        rows = sum(b.rows for b in blocks)
        cols = sum(b.cols for b in blocks)
        ents = [0] * (rows * cols)
        ro = co = 0
        for b in blocks:
            for i in range(b.rows):
                base = (ro + i) * cols + co
                ents[base:base + b.cols] = b.row(i)
            ro += b.rows
            co += b.cols
        return cls(rows, cols, ents)

    def select_columns(self, indices):
        indices = list(indices)
        ents = []
        for i in range(self.rows):
            r = self.row(i)
            ents.extend(r[j] for j in indices)
        return IntMatrix(self.rows, len(indices), ents)

    def select_rows(self, indices):
        indices = list(indices)
        ents = []
        for i in indices:
            ents.extend(self.row(i))
        return IntMatrix(len(indices), self.cols, ents)

    def kron(self, other):
        rows = self.rows * other.rows
        cols = self.cols * other.cols
        ents = [0] * (rows * cols)
        for i in range(self.rows):
            for j in range(self.cols):
                a = self.entry(i, j)
                if not a:
                    continue
                for k in range(other.rows):
                    base = (i * other.rows + k) * cols + j * other.cols
                    orow = other.row(k)
                    for l in range(other.cols):
                        ents[base + l] = a * orow[l]
        return IntMatrix(rows, cols, ents)

    def is_zero(self):
        return all(e == 0 for e in self._entries)

    def max_abs(self):
        return max((abs(e) for e in self._entries), default=0)

    def __eq__(self, other):
        return (isinstance(other, IntMatrix) and self.rows == other.rows
                and self.cols == other.cols and self._entries == other._entries)

    def __hash__(self):
        return hash((self.rows, self.cols, self._entries))

    def __repr__(self):
        if self.rows * self.cols <= 16:
            return f"IntMatrix({[list(self.row(i)) for i in range(self.rows)]})"
        return f"IntMatrix({self.rows}x{self.cols})"


def _swap_rows(a, u, i, j):
    a[i], a[j] = a[j], a[i]
    u[i], u[j] = u[j], u[i]


def _swap_cols(a, v, i, j):
    for row in a:
        row[i], row[j] = row[j], row[i]
    for row in v:
        row[i], row[j] = row[j], row[i]


def _snf_with_transforms(m):
    """Smith normal form with transforms and the inverse of the row transform.

    Returns (U, Uinv, S, V) with U*m*V = S and U*Uinv = identity.
    """
    n, c = m.rows, m.cols
    a = [list(m.row(i)) for i in range(n)]
    u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    # row ops on u correspond to inverse column ops on uinv
    uinv = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    v = [[1 if i == j else 0 for j in range(c)] for i in range(c)]

    def swap_rows(i, j):
        _swap_rows(a, u, i, j)
        for row in uinv:
            row[i], row[j] = row[j], row[i]

    def negate_row(i):
        a[i] = [-x for x in a[i]]
        u[i] = [-x for x in u[i]]
        for row in uinv:
            row[i] = -row[i]

    def add_row(dst, src, q):
        # row_dst += q*row_src  <->  col_src of uinv -= q*col_dst
        arow_s, urow_s = a[src], u[src]
        arow_d, urow_d = a[dst], u[dst]
        for j in range(c):
            arow_d[j] += q * arow_s[j]
        for j in range(n):
            urow_d[j] += q * urow_s[j]
        for row in uinv:
            row[src] -= q * row[dst]

    def add_col(dst, src, q):
        for row in a:
            row[dst] += q * row[src]
        for row in v:
            row[dst] += q * row[src]

    exhausted = False
    for k in range(min(n, c)):
        if exhausted:
            break
        while True:
            best = None
            for i in range(k, n):
                arow = a[i]
                for j in range(k, c):
                    val = arow[j]
                    if val and (best is None or abs(val) < best[0]):
                        best = (abs(val), i, j)
            if best is None:
                exhausted = True
                break
            _, bi, bj = best
            if bi != k:
                swap_rows(k, bi)
            if bj != k:
                _swap_cols(a, v, k, bj)
            if a[k][k] < 0:
                negate_row(k)
            p = a[k][k]
            dirty = False
            for i in range(k + 1, n):
                if a[i][k]:
                    add_row(i, k, -(a[i][k] // p))
                    if a[i][k]:
                        dirty = True
            for j in range(k + 1, c):
                if a[k][j]:
                    add_col(j, k, -(a[k][j] // p))
                    if a[k][j]:
                        dirty = True
            if dirty:
                continue
            offender = None
            for i in range(k + 1, n):
                arow = a[i]
                for j in range(k + 1, c):
                    if arow[j] % p:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            add_row(k, offender, 1)

    U = IntMatrix(n, n, [x for r in u for x in r])
    Uinv = IntMatrix(n, n, [x for r in uinv for x in r])
    S = IntMatrix(n, c, [x for r in a for x in r])
    V = IntMatrix(c, c, [x for r in v for x in r])
    return U, Uinv, S, V


def smith_normal_form(m):
    """Diagonalize an integer matrix: U*m*V = S.

    S is diagonal with nonnegative entries, each dividing the next; U and V
    are unimodular.  The pivot rule is fixed (smallest absolute value, then
    lowest row, then lowest column), so the output is deterministic.

    >>> m = IntMatrix.from_rows([[2, 4], [6, 8]])
    >>> u, s, v = smith_normal_form(m)
    >>> [s.entry(0, 0), s.entry(1, 1)]
    [2, 4]
    >>> (u * m * v) == s
    True
    """
    u, _, s, v = _snf_with_transforms(m)
    return u, s, v


def snf_diagonal(m):
    _, _, s, _ = _snf_with_transforms(m)
    return tuple(s.entry(i, i) for i in range(min(s.rows, s.cols)))


def integer_kernel_basis(m):
    """Basis of {x in Z^c : m*x = 0}, as the columns of a c x k matrix."""
    _, _, s, v = _snf_with_transforms(m)
    t = sum(1 for i in range(min(s.rows, s.cols)) if s.entry(i, i))
    return v.select_columns(range(t, m.cols))


def column_lattice_basis(m):
    """Basis of the column lattice of m, as the columns of an n x t matrix."""
    _, uinv, s, _ = _snf_with_transforms(m)
    diag = [s.entry(i, i) for i in range(min(s.rows, s.cols))]
    t = sum(1 for d in diag if d)
    cols = uinv.select_columns(range(t))
    ents = []
    for i in range(cols.rows):
        r = cols.row(i)
        ents.extend(r[j] * diag[j] for j in range(t))
    return IntMatrix(cols.rows, t, ents)


def solve_in_lattice(basis, vec):
    """Solve basis * z = vec over Z, or return None.

    ``basis`` need not have independent columns; any solution is returned.
    """
    u, _, s, v = _snf_with_transforms(basis)
    c = u.mul_vec(vec)
    k = basis.cols
    t = min(basis.rows, k)
    y = [0] * k
    for i in range(basis.rows):
        d = s.entry(i, i) if i < t else 0
        if d:
            if c[i] % d:
                return None
            y[i] = c[i] // d
        elif c[i]:
            return None
    return v.mul_vec(y)


def preimage_lattice_basis(m, span):
    """Basis of {x : m*x lies in the column span of ``span``}."""
    if span.cols == 0:
        return integer_kernel_basis(m)
    k = integer_kernel_basis(m.hstack(span))
    top = k.select_rows(range(m.cols))
    return column_lattice_basis(top)


class FgAbGroup:
    """Finitely generated abelian group Z^n modulo a column span.

    >>> g = FgAbGroup(IntMatrix.from_rows([[2, 0], [0, 3]]))
    >>> g.rank, g.torsion
    (0, (6,))
    >>> FgAbGroup.free(2).rank
    2
    """

    __slots__ = ("ambient_rank", "relations", "rank", "torsion",
                 "_u", "_uinv", "_diag", "_free_idx")

    def __init__(self, relations):
        n = relations.rows
        u, uinv, s, _ = _snf_with_transforms(relations)
        diag = tuple(s.entry(i, i) for i in range(min(n, relations.cols)))
        t = sum(1 for d in diag if d)
        object.__setattr__(self, "ambient_rank", n)
        object.__setattr__(self, "relations", relations)
        object.__setattr__(self, "rank", n - t)
        object.__setattr__(self, "torsion", tuple(d for d in diag if d > 1))
        object.__setattr__(self, "_u", u)
        object.__setattr__(self, "_uinv", uinv)
        object.__setattr__(self, "_diag", diag)
        object.__setattr__(self, "_free_idx", tuple(range(t, n)))

    def __setattr__(self, name, value):
        raise AttributeError("FgAbGroup is immutable")

    @classmethod
    def free(cls, n):
        return cls(IntMatrix(n, 0, []))

    @classmethod
    def from_relation_rows(cls, ambient_rank, columns):
        """Group on ``ambient_rank`` generators with the given relation columns."""
        cols = [tuple(c) for c in columns]
        ents = []
        for i in range(ambient_rank):
            ents.extend(c[i] for c in cols)
        return cls(IntMatrix(ambient_rank, len(cols), ents))

    @classmethod
    def direct_sum(cls, groups):
        groups = list(groups)
        if not groups:
            return cls.free(0)
        return cls(IntMatrix.block_diag([g.relations for g in groups]))

    def invariants(self):
        return (self.rank, self.torsion)

    def torsion_order(self):
        n = 1
        for d in self.torsion:
            n *= d
        return n

    def is_trivial(self):
        return self.rank == 0 and not self.torsion

    def free_projection(self):
        """r x n integer matrix projecting onto free-part coordinates."""
        return self._u.select_rows(self._free_idx)

    def free_embedding(self):
        """n x r integer matrix whose columns map to a basis of the free quotient."""
        return self._uinv.select_columns(self._free_idx)

    def contains(self, vec):
        """Is the ambient vector inside the relation span?"""
        c = self._u.mul_vec(vec)
        for i in range(self.ambient_rank):
            d = self._diag[i] if i < len(self._diag) else 0
            if d:
                if c[i] % d:
                    return False
            elif c[i]:
                return False
        return True

    def canonical_coset(self, vec):
        """Hashable canonical form of the coset of an ambient vector."""
        c = self._u.mul_vec(vec)
        tor = []
        free = []
        for i in range(self.ambient_rank):
            d = self._diag[i] if i < len(self._diag) else 0
            if d:
                tor.append(c[i] % d)
            else:
                free.append(c[i])
        return (tuple(tor), tuple(free))

    def fingerprint(self):
        return ("fgab", self.ambient_rank, self.relations.cols,
                self.relations._entries)

    def __eq__(self, other):
        return isinstance(other, FgAbGroup) and self.relations == other.relations

    def __hash__(self):
        return hash(self.relations)

    def __repr__(self):
        parts = [f"Z^{self.rank}"] if self.rank else []
        parts += [f"Z/{d}" for d in self.torsion]
        return "FgAbGroup(" + (" + ".join(parts) if parts else "0") + ")"


def group_invariants(g):
    """(rank, torsion divisors) of a presented group."""
    return g.rank, list(g.torsion)


class GroupMap:
    """Map between presented groups, given by a matrix on ambient generators.

    Well-definedness (source relations land in the target relation span) is
    checked at construction unless the caller vouches for it.
    """

    __slots__ = ("source", "target", "matrix")

    def __init__(self, source, target, matrix, check=True):
        if matrix.rows != target.ambient_rank or matrix.cols != source.ambient_rank:
            raise ValueError("matrix shape does not match ambient ranks")
        if check:
            rel = source.relations
            for j in range(rel.cols):
                if not target.contains(matrix.mul_vec(rel.col(j))):
                    raise IllDefinedMap(f"relation column {j} not respected")
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "matrix", matrix)

    def __setattr__(self, name, value):
        raise AttributeError("GroupMap is immutable")

    @classmethod
    def identity(cls, g):
        return cls(g, g, IntMatrix.identity(g.ambient_rank), check=False)

    @classmethod
    def zero(cls, source, target):
        return cls(source, target, IntMatrix.zero(target.ambient_rank, source.ambient_rank),
                   check=False)

    def after(self, other):
        """self composed after other (apply ``other`` first)."""
        if other.target is not self.source and other.target != self.source:
            raise ValueError("composition mismatch")
        return GroupMap(other.source, self.target, self.matrix * other.matrix, check=False)

    def apply(self, vec):
        return self.matrix.mul_vec(vec)

    def same_map(self, other):
        """Equality as maps on the quotients (matrices may differ)."""
        if self.source != other.source or self.target != other.target:
            return False
        diff = self.matrix - other.matrix
        return all(self.target.contains(diff.col(j)) for j in range(diff.cols))

    def is_zero_map(self):
        return all(self.target.contains(self.matrix.col(j)) for j in range(self.matrix.cols))

    def __repr__(self):
        return f"GroupMap({self.source!r} -> {self.target!r})"


def kernel_with_inclusion(phi):
    """Kernel of a GroupMap, with its inclusion into the source."""
    src = phi.source
    basis = preimage_lattice_basis(phi.matrix, phi.target.relations)
    rel_cols = []
    rel = src.relations
    for j in range(rel.cols):
        z = solve_in_lattice(basis, rel.col(j))
        if z is None:
            raise RuntimeError("source relations escaped the kernel lattice")
        rel_cols.append(z)
    ker = FgAbGroup.from_relation_rows(basis.cols, rel_cols)
    incl = GroupMap(ker, src, basis, check=False)
    return ker, incl


def cokernel_with_projection(phi):
    """Cokernel of a GroupMap, with the projection from the target."""
    tgt = phi.target
    coker = FgAbGroup(phi.matrix.hstack(tgt.relations))
    proj = GroupMap(tgt, coker, IntMatrix.identity(tgt.ambient_rank), check=False)
    return coker, proj


def _vec_index(i, j, cols):
    # row-major flattening of an entry (i, j) of a matrix with ``cols`` columns
    return i * cols + j


def _unvec(rows, cols, flat):
    return IntMatrix(rows, cols, list(flat))


def hom_lattice_basis(source, target, intertwine=()):
    """Basis of the lattice of matrices representing maps source -> target.

    ``intertwine`` is a sequence of pairs (A, B) of IntMatrix imposing the
    additional condition F*A = B*F modulo target relations.  Returns an
    (m*n) x w matrix whose columns are flattened representing matrices.
    """
    n = source.ambient_rank
    m = target.ambient_rank
    N = m * n
    constraint_blocks = []
    span_blocks = []
    rel_s = source.relations
    rel_t = target.relations
    for j in range(rel_s.cols):
        cvec = IntMatrix(1, n, list(rel_s.col(j)))
        constraint_blocks.append(IntMatrix.identity(m).kron(cvec))
        span_blocks.append(rel_t)
    for A, B in intertwine:
        # vec(F*A - B*F) = (I (x) A^T - B (x) I) vec F, must land in relations
        op = IntMatrix.identity(m).kron(A.transpose()) - B.kron(IntMatrix.identity(n))
        constraint_blocks.append(op)
        span_blocks.append(rel_t)
    if not constraint_blocks:
        return IntMatrix.identity(N)
    big_c = constraint_blocks[0]
    for b in constraint_blocks[1:]:
        big_c = big_c.vstack(b)
    big_d = IntMatrix.block_diag(span_blocks)
    return preimage_lattice_basis(big_c, big_d)


def _maps_into_relations(source_n, target):
    """Generators of the sublattice of matrices landing in target relations."""
    rel = target.relations
    m = target.ambient_rank
    cols = []
    for k in range(rel.cols):
        rc = rel.col(k)
        for j in range(source_n):
            flat = [0] * (m * source_n)
            for i in range(m):
                flat[_vec_index(i, j, source_n)] = rc[i]
            cols.append(flat)
    ents = []
    for idx in range(m * source_n):
        ents.extend(c[idx] for c in cols)
    return IntMatrix(m * source_n, len(cols), ents)


def hom_group(source, target, intertwine=()):
    """Hom(source, target) as a group, with representing maps for generators.

    With ``intertwine`` conditions this computes the subgroup of maps
    commuting with the given pairs of actions.

    >>> z6 = FgAbGroup(IntMatrix.from_rows([[6]]))
    >>> z4 = FgAbGroup(IntMatrix.from_rows([[4]]))
    >>> h, reps = hom_group(z6, z4)
    >>> group_invariants(h)
    (0, [2])
    """
    basis = hom_lattice_basis(source, target, intertwine)
    tgens = _maps_into_relations(source.ambient_rank, target)
    rel_cols = []
    for j in range(tgens.cols):
        z = solve_in_lattice(basis, tgens.col(j))
        if z is None:
            raise RuntimeError("relation-valued maps escaped the hom lattice")
        rel_cols.append(z)
    grp = FgAbGroup.from_relation_rows(basis.cols, rel_cols)
    reps = []
    for j in range(basis.cols):
        mat = _unvec(target.ambient_rank, source.ambient_rank, basis.col(j))
        reps.append(GroupMap(source, target, mat, check=False))
    return grp, reps


# ---------------------------------------------------------------------------
# real / rational bridge


def _is_exact_scalar(x):
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def num_rows(mat):
    """Normalize a matrix-like (IntMatrix, RealMatrix, nested sequence) to
    a tuple of row tuples."""
    if isinstance(mat, IntMatrix):
        return mat.rows_tuple()
    if isinstance(mat, RealMatrix):
        return mat.entries
    return tuple(tuple(r) for r in mat)


def num_is_exact(rows):
    return all(_is_exact_scalar(x) for r in rows for x in r)


def num_identity(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def num_scale(rows, c):
    return tuple(tuple(c * x for x in r) for r in rows)


def num_transpose(rows):
    if not rows:
        return ()
    return tuple(tuple(r[j] for r in rows) for j in range(len(rows[0])))


def num_matmul(a, b):
    a = num_rows(a)
    b = num_rows(b)
    if not a or not b:
        inner = len(b)
        return tuple(() for _ in a) if inner == 0 else ()
    bc = len(b[0])
    out = []
    for ra in a:
        row = [0] * bc
        for k, x in enumerate(ra):
            if x:
                rb = b[k]
                for j in range(bc):
                    if rb[j]:
                        row[j] += x * rb[j]
        out.append(tuple(row))
    return tuple(out)


def num_kron(a, b):
    a = num_rows(a)
    b = num_rows(b)
    if not a or not b:
        return ()
    ac, bc = len(a[0]), len(b[0])
    out = []
    for ra in a:
        for rb in b:
            row = []
            for x in ra:
                row.extend(x * y for y in rb)
            out.append(tuple(row))
    return tuple(out)


def num_max_abs(rows):
    return max((abs(float(x)) for r in rows for x in r), default=0.0)


def num_block_diag(blocks):
    blocks = [num_rows(b) for b in blocks]
    total_r = sum(len(b) for b in blocks)
    total_c = sum(len(b[0]) if b else 0 for b in blocks)
    out = [[0] * total_c for _ in range(total_r)]
    ro = co = 0
    for b in blocks:
        for i, r in enumerate(b):
            for j, x in enumerate(r):
                out[ro + i][co + j] = x
        ro += len(b)
        co += len(b[0]) if b else 0
    return tuple(tuple(r) for r in out)


def _frac_det(rows):
    n = len(rows)
    if n == 0:
        return Fraction(1)
    a = [[Fraction(x) for x in r] for r in rows]
    det = Fraction(1)
    for k in range(n):
        piv = None
        for i in range(k, n):
            if a[i][k]:
                piv = i
                break
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        inv = 1 / a[k][k]
        for i in range(k + 1, n):
            if a[i][k]:
                f = a[i][k] * inv
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return det


def _frac_solve(a_rows, b_rows):
    """Solve A X = B exactly; A square and invertible."""
    n = len(a_rows)
    if n == 0:
        return tuple(() for _ in range(0)), True
    m = len(b_rows[0]) if b_rows else 0
    a = [[Fraction(x) for x in r] for r in a_rows]
    b = [[Fraction(x) for x in r] for r in b_rows]
    for k in range(n):
        piv = None
        for i in range(k, n):
            if a[i][k]:
                piv = i
                break
        if piv is None:
            return None, False
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            b[k], b[piv] = b[piv], b[k]
        inv = 1 / a[k][k]
        a[k] = [x * inv for x in a[k]]
        b[k] = [x * inv for x in b[k]]
        for i in range(n):
            if i != k and a[i][k]:
                f = a[i][k]
                a[i] = [x - f * y for x, y in zip(a[i], a[k])]
                b[i] = [x - f * y for x, y in zip(b[i], b[k])]
    return tuple(tuple(r) for r in b), True


def num_det(mat):
    """Determinant; exact Fraction for rational entries, float otherwise.

    The empty matrix has determinant 1.
    """
    rows = num_rows(mat)
    if len(rows) == 0:
        return Fraction(1)
    if len(rows) != len(rows[0]):
        raise ValueError("determinant of a non-square matrix")
    if num_is_exact(rows):
        return _frac_det(rows)
    arr = numpy.array([[float(x) for x in r] for r in rows], dtype=float)
    return float(numpy.linalg.det(arr))


def num_inverse(mat, tol=1e-12):
    """Inverse of a square matrix; exact for rational input.

    Raises ValueError when the determinant magnitude falls below ``tol``
    (float path) or is exactly zero (exact path).
    """
    rows = num_rows(mat)
    n = len(rows)
    if n == 0:
        return ()
    if num_is_exact(rows):
        sol, ok = _frac_solve(rows, num_identity(n))
        if not ok:
            raise ValueError("singular matrix")
        return sol
    arr = numpy.array([[float(x) for x in r] for r in rows], dtype=float)
    if abs(numpy.linalg.det(arr)) < tol:
        raise ValueError("numerically singular matrix")
    inv = numpy.linalg.inv(arr)
    return tuple(tuple(float(x) for x in row) for row in inv)


def solve_coordinates(basis, target, tol=1e-9):
    """Solve basis * X = target where ``basis`` has full column rank.

    ``basis`` is an IntMatrix (columns span the relevant subspace); ``target``
    is a numeric matrix whose columns are known to lie in that span.  Exact
    for rational targets; float targets use least squares with a residual
    check at tolerance ``tol``.
    """
    brows = num_rows(basis)
    trows = num_rows(target)
    w = basis.cols if isinstance(basis, IntMatrix) else (len(brows[0]) if brows else 0)
    if w == 0:
        return ()
    if num_is_exact(trows):
        # pick w independent rows by exact elimination, solve the square system
        idx = _independent_rows(brows, w)
        sub_b = [brows[i] for i in idx]
        sub_t = [trows[i] for i in idx]
        sol, ok = _frac_solve(sub_b, sub_t)
        if not ok:
            raise ValueError("basis does not have full column rank")
        check = num_matmul(brows, sol)
        for rc, rt in zip(check, trows):
            for x, y in zip(rc, rt):
                if Fraction(x) != Fraction(y):
                    raise ValueError("target columns are outside the basis span")
        return sol
    b_arr = numpy.array([[float(x) for x in r] for r in brows], dtype=float)
    t_arr = numpy.array([[float(x) for x in r] for r in trows], dtype=float)
    sol, _, _, _ = numpy.linalg.lstsq(b_arr, t_arr, rcond=None)
    resid = b_arr @ sol - t_arr
    scale = max(1.0, float(numpy.max(numpy.abs(t_arr)))) if t_arr.size else 1.0
    if resid.size and float(numpy.max(numpy.abs(resid))) > tol * scale:
        raise ValueError("target columns are outside the basis span")
    return tuple(tuple(float(x) for x in row) for row in sol)


def _independent_rows(rows, want):
    n = len(rows)
    cols = len(rows[0]) if rows else 0
    chosen = []
    work = []
    pivots = []
    for i in range(n):
        row = [Fraction(x) for x in rows[i]]
        for prow, pcol in zip(work, pivots):
            if row[pcol]:
                f = row[pcol] / prow[pcol]
                row = [x - f * y for x, y in zip(row, prow)]
        lead = next((j for j in range(cols) if row[j]), None)
        if lead is not None:
            work.append(row)
            pivots.append(lead)
            chosen.append(i)
            if len(chosen) == want:
                break
    if len(chosen) < want:
        raise ValueError("basis does not have full column rank")
    return chosen


class RealMatrix:
    """Square numeric matrix (int, Fraction or float entries).

    Dimension 0 has determinant 1 by convention.
    """

    __slots__ = ("entries", "dim", "exact")

    def __init__(self, rows):
        rows = tuple(tuple(x for x in r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("RealMatrix must be square")
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "exact", num_is_exact(rows))

    def __setattr__(self, name, value):
        raise AttributeError("RealMatrix is immutable")

    @classmethod
    def identity(cls, n):
        return cls(num_identity(n))

    def det(self):
        return num_det(self.entries)

    def trace(self):
        return sum(self.entries[i][i] for i in range(self.dim))

    def __mul__(self, other):
        if isinstance(other, RealMatrix):
            return RealMatrix(num_matmul(self.entries, other.entries))
        return NotImplemented

    def __eq__(self, other):
        return isinstance(other, RealMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"RealMatrix(dim={self.dim})"


def real_determinant_of_induced_map(g, action, tol=1e-9):
    """Determinant of the map induced on the free quotient of ``g``.

    ``action`` is a numeric matrix on ambient generators.  It must preserve
    the relation span (exactly for rational entries, within ``tol`` for float
    entries); otherwise NotDescending is raised.  Rank-0 groups give 1.

    >>> g = FgAbGroup.free(2)
    >>> real_determinant_of_induced_map(g, [[2, 0], [0, 3]])
    Fraction(6, 1)
    """
    rows = num_rows(action)
    n = g.ambient_rank
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError("action must be square of ambient size")
    exact = num_is_exact(rows)
    rel = g.relations
    if rel.cols:
        proj = g.free_projection()
        if proj.rows:
            viol = num_matmul(num_matmul(proj, rows), rel)
            if exact:
                if any(x for r in viol for x in r):
                    raise NotDescending(max(abs(Fraction(x)) for r in viol for x in r))
            else:
                scale = max(1.0, num_max_abs(rows) * max(1.0, float(rel.max_abs())) * max(1, n))
                worst = num_max_abs(viol)
                if worst > tol * scale:
                    raise NotDescending(worst)
    if g.rank == 0:
        return Fraction(1) if exact else 1.0
    induced = num_matmul(num_matmul(g.free_projection(), rows), g.free_embedding())
    return num_det(induced)


def log_fraction(q):
    """log of a positive Fraction, stable for huge numerators/denominators."""
    if q <= 0:
        raise ValueError("log of a nonpositive rational")
    return math.log(q.numerator) - math.log(q.denominator)
