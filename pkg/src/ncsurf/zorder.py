"""Rings of finite rank over Z given by integer structure constants, their
right modules and bimodules, regular representations, the trace form and the
dual bimodule.

Action conventions (fixed package-wide):

* a left action satisfies lambda(x*y) = lambda(x)*lambda(y);
* a right action satisfies rho(x*y) = rho(y)*rho(x), i.e. rho is an
  anti-homomorphism, matching m.(xy) = (m.x).y;
* action matrices live on ambient generators of the underlying group and all
  action laws are checked as maps on the quotient, so torsion lattices are
  first-class.
"""

from __future__ import annotations

from fractions import Fraction

from .exactlin import (
    FgAbGroup,
    GroupMap,
    IntMatrix,
    RealMatrix,
    hom_group,
    hom_lattice_basis,
    real_determinant_of_induced_map,
    snf_diagonal,
    solve_in_lattice,
)


class NotAssociative(ValueError):
    """Structure constants fail associativity at basis triple (i, j, k)."""

    def __init__(self, i, j, k):
        super().__init__(f"(e{i}*e{j})*e{k} != e{i}*(e{j}*e{k})")
        self.triple = (i, j, k)


class BadUnit(ValueError):
    """The claimed unit is not a two-sided identity."""


class ZOrder:
    """Ring free of finite rank over Z: e_i*e_j = sum_k c[i][j][k]*e_k.

    Use :func:`validate_order` to construct one with the ring laws checked.
    """

    __slots__ = ("rank", "constants", "unit", "name")

    def __init__(self, rank, constants, unit, name=None):
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "constants", constants)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "name", name)

    def __setattr__(self, name, value):
        raise AttributeError("ZOrder is immutable")

    def multiply(self, x, y):
        """Product of two coordinate vectors (entries may be rational/real)."""
        r = self.rank
        out = [0] * r
        for i in range(r):
            xi = x[i]
            if not xi:
                continue
            ci = self.constants[i]
            for j in range(r):
                yj = y[j]
                if not yj:
                    continue
                cij = ci[j]
                for k in range(r):
                    if cij[k]:
                        out[k] += xi * yj * cij[k]
        return tuple(out)

    def left_matrix(self, a):
        """Matrix of x -> a*x in the basis (column j is a*e_j)."""
        r = self.rank
        return tuple(
            tuple(sum(a[i] * self.constants[i][j][k] for i in range(r)) for j in range(r))
            for k in range(r))

    def right_matrix(self, a):
        """Matrix of x -> x*a in the basis (column j is e_j*a)."""
        r = self.rank
        return tuple(
            tuple(sum(a[i] * self.constants[j][i][k] for i in range(r)) for j in range(r))
            for k in range(r))

    def basis_left_matrices(self):
        r = self.rank
        return tuple(self.left_matrix(tuple(1 if s == i else 0 for s in range(r)))
                     for i in range(r))

    def basis_right_matrices(self):
        r = self.rank
        return tuple(self.right_matrix(tuple(1 if s == i else 0 for s in range(r)))
                     for i in range(r))

    def trace_gram(self):
        """Gram matrix of the trace form T(x, y) = trace(lambda_{x*y})."""
        r = self.rank
        traces = [sum(self.constants[k][j][j] for j in range(r)) for k in range(r)]
        return tuple(
            tuple(sum(self.constants[i][j][k] * traces[k] for k in range(r))
                  for j in range(r))
            for i in range(r))

    def fingerprint(self):
        return ("zorder", self.rank,
                tuple(tuple(tuple(row) for row in plane) for plane in self.constants),
                self.unit)

    def __eq__(self, other):
        return isinstance(other, ZOrder) and self.fingerprint() == other.fingerprint()

    def __hash__(self):
        return hash(self.fingerprint())

    def __repr__(self):
        return f"ZOrder({self.name or f'rank {self.rank}'})"


class OrderElement:
    """Coordinate vector of a ring element; integral elements have int entries."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        object.__setattr__(self, "coords", tuple(coords))

    def __setattr__(self, name, value):
        raise AttributeError("OrderElement is immutable")

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __len__(self):
        return len(self.coords)

    def __repr__(self):
        return f"OrderElement{self.coords}"


def _coords(a):
    return tuple(a.coords) if isinstance(a, OrderElement) else tuple(a)


def validate_order(constants, unit, name=None):
    """Build a ZOrder after checking associativity and the unit laws.

    ``constants`` is an r x r x r nested integer array, ``unit`` a length-r
    integer vector.  Raises NotAssociative or BadUnit.
    """
    constants = tuple(tuple(tuple(int(x) for x in row) for row in plane)
                      for plane in constants)
    r = len(constants)
    if r < 1:
        raise ValueError("rank must be at least 1")
    if any(len(plane) != r or any(len(row) != r for row in plane) for plane in constants):
        raise ValueError("constants must be r x r x r")
    unit = tuple(int(x) for x in unit)
    if len(unit) != r:
        raise ValueError("unit must have length r")
    order = ZOrder(r, constants, unit, name)
    basis = [tuple(1 if s == i else 0 for s in range(r)) for i in range(r)]
    for i in range(r):
        for j in range(r):
            ij = order.multiply(basis[i], basis[j])
            for k in range(r):
                left = order.multiply(ij, basis[k])
                right = order.multiply(basis[i], order.multiply(basis[j], basis[k]))
                if left != right:
                    raise NotAssociative(i, j, k)
    for i in range(r):
        if order.multiply(unit, basis[i]) != basis[i]:
            raise BadUnit(f"u*e{i} != e{i}")
        if order.multiply(basis[i], unit) != basis[i]:
            raise BadUnit(f"e{i}*u != e{i}")
    return order


def regular_representations(order, a):
    """Left and right multiplication by ``a`` on the order itself."""
    c = _coords(a)
    return RealMatrix(order.left_matrix(c)), RealMatrix(order.right_matrix(c))


def semisimplicity_check(order):
    """Necessary-condition report for simplicity of the real algebra.

    separable_over_R: the trace form is nondegenerate.
    center_rank: rank of the solution lattice of [x, e_i] = 0 for all i.
    The pair (separable, center rank 1) certifies a central simple algebra;
    other simple algebras must be asserted by the caller.
    """
    r = order.rank
    gram = IntMatrix.from_rows(order.trace_gram())
    gram_diag = snf_diagonal(gram)
    separable = all(d != 0 for d in gram_diag) and len(gram_diag) == r
    lam = order.basis_left_matrices()
    rho = order.basis_right_matrices()
    stacked_rows = []
    for i in range(r):
        for k in range(r):
            stacked_rows.append(tuple(lam[i][k][j] - rho[i][k][j] for j in range(r)))
    stacked = IntMatrix.from_rows(stacked_rows)
    nonzero = sum(1 for d in snf_diagonal(stacked) if d)
    center_rank = r - nonzero
    return {
        "separable_over_R": separable,
        "center_rank": center_rank,
        "central": center_rank == 1,
        "certified_simple": separable and center_rank == 1,
    }


def _int_matrix(rows):
    return IntMatrix.from_rows([[int(x) for x in row] for row in rows])


class RightModule:
    """Lattice with a right action of a ZOrder, all laws checked."""

    __slots__ = ("order", "underlying", "rho", "name")

    def __init__(self, order, underlying, rho, name=None, check=True):
        rho = tuple(m if isinstance(m, IntMatrix) else _int_matrix(m) for m in rho)
        if len(rho) != order.rank:
            raise ValueError("one action matrix per basis element required")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "underlying", underlying)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "name", name)
        if check:
            self._check_action()

    def __setattr__(self, name, value):
        raise AttributeError("RightModule is immutable")

    def _maps(self):
        g = self.underlying
        return [GroupMap(g, g, m) for m in self.rho]

    def _check_action(self):
        order = self.order
        g = self.underlying
        maps = self._maps()  # raises IllDefinedMap when an action fails descent
        unit_mat = _combine(self.rho, order.unit)
        if not GroupMap(g, g, unit_mat).same_map(GroupMap.identity(g)):
            raise BadUnit("unit does not act as the identity on the module")
        r = order.rank
        for i in range(r):
            for j in range(r):
                # rho(e_i e_j) = rho(e_j) rho(e_i)
                prod = _combine(self.rho, order.constants[i][j])
                lhs = GroupMap(g, g, prod, check=False)
                rhs = maps[j].after(maps[i])
                if not lhs.same_map(rhs):
                    raise ValueError(
                        f"right action is not multiplicative at pair ({i}, {j})")

    def action_matrix(self, a):
        """Ambient matrix of the right action of element ``a`` (numeric rows)."""
        return _num_combine(self.rho, _coords(a))

    def rank(self):
        return self.underlying.rank

    def ambient_rank(self):
        return self.underlying.ambient_rank

    def fingerprint(self):
        return ("rmod", self.order.fingerprint(), self.underlying.fingerprint(),
                tuple(m._entries for m in self.rho))

    def __eq__(self, other):
        return isinstance(other, RightModule) and self.fingerprint() == other.fingerprint()

    def __hash__(self):
        return hash(self.fingerprint())

    def __repr__(self):
        return f"RightModule({self.name or self.underlying!r} over {self.order!r})"


class Bimodule:
    """Lattice with commuting left and right actions of the same ZOrder."""

    __slots__ = ("order", "underlying", "lam", "rho", "name")

    def __init__(self, order, underlying, lam, rho, name=None, check=True):
        lam = tuple(m if isinstance(m, IntMatrix) else _int_matrix(m) for m in lam)
        rho = tuple(m if isinstance(m, IntMatrix) else _int_matrix(m) for m in rho)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "underlying", underlying)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "name", name)
        if check:
            self._check()

    def __setattr__(self, name, value):
        raise AttributeError("Bimodule is immutable")

    def _check(self):
        order = self.order
        g = self.underlying
        r = order.rank
        lam_maps = [GroupMap(g, g, m) for m in self.lam]
        rho_maps = [GroupMap(g, g, m) for m in self.rho]
        unit_l = GroupMap(g, g, _combine(self.lam, order.unit), check=False)
        unit_r = GroupMap(g, g, _combine(self.rho, order.unit), check=False)
        ident = GroupMap.identity(g)
        if not unit_l.same_map(ident):
            raise BadUnit("unit does not act as identity on the left")
        if not unit_r.same_map(ident):
            raise BadUnit("unit does not act as identity on the right")
        for i in range(r):
            for j in range(r):
                prod = _combine(self.lam, order.constants[i][j])
                if not GroupMap(g, g, prod, check=False).same_map(
                        lam_maps[i].after(lam_maps[j])):
                    raise ValueError(f"left action fails at pair ({i}, {j})")
                prod_r = _combine(self.rho, order.constants[i][j])
                if not GroupMap(g, g, prod_r, check=False).same_map(
                        rho_maps[j].after(rho_maps[i])):
                    raise ValueError(f"right action fails at pair ({i}, {j})")
                if not lam_maps[i].after(rho_maps[j]).same_map(
                        rho_maps[j].after(lam_maps[i])):
                    raise ValueError(f"actions do not commute at pair ({i}, {j})")

    def as_right_module(self, name=None):
        return RightModule(self.order, self.underlying, self.rho,
                           name=name or self.name, check=False)

    def left_action_matrix(self, a):
        return _num_combine(self.lam, _coords(a))

    def right_action_matrix(self, a):
        return _num_combine(self.rho, _coords(a))

    def fingerprint(self):
        return ("bimod", self.order.fingerprint(), self.underlying.fingerprint(),
                tuple(m._entries for m in self.lam), tuple(m._entries for m in self.rho))

    def __repr__(self):
        return f"Bimodule({self.name or self.underlying!r} over {self.order!r})"


def _combine(mats, coeffs):
    """Integer linear combination of action matrices."""
    out = None
    for c, m in zip(coeffs, mats):
        term = m.scale(int(c))
        out = term if out is None else out + term
    return out


def _num_combine(mats, coeffs):
    """Linear combination of action matrices with arbitrary numeric weights,
    returned as a tuple-of-rows numeric matrix."""
    n = mats[0].rows
    out = [[0] * n for _ in range(n)]
    for c, m in zip(coeffs, mats):
        if not c:
            continue
        for i in range(n):
            row = m.row(i)
            for j in range(n):
                if row[j]:
                    out[i][j] += c * row[j]
    return tuple(tuple(r) for r in out)


def regular_right_module(order, name=None):
    """The order as a right module over itself."""
    g = FgAbGroup.free(order.rank)
    rho = [_int_matrix(m) for m in order.basis_right_matrices()]
    return RightModule(order, g, rho, name=name or "regular", check=False)


def regular_bimodule(order, name=None):
    """The order as a bimodule over itself."""
    g = FgAbGroup.free(order.rank)
    lam = [_int_matrix(m) for m in order.basis_left_matrices()]
    rho = [_int_matrix(m) for m in order.basis_right_matrices()]
    return Bimodule(order, g, lam, rho, name=name or "regular", check=False)


def dual_bimodule(order):
    """Dual lattice Hom(R, Z) with (a.f.b)(x) = f(b*x*a).

    On the dual basis the left action of e is the transpose of right
    multiplication by e, and the right action is the transpose of left
    multiplication.
    """
    g = FgAbGroup.free(order.rank)
    lam = [_int_matrix(m).transpose() for m in order.basis_right_matrices()]
    rho = [_int_matrix(m).transpose() for m in order.basis_left_matrices()]
    return Bimodule(order, g, lam, rho, name="dual")


def abelian_module(order, ambient_rank, relation_columns=(), name=None):
    """Rank-1-order module: a presented abelian group with the identity action.

    Over Z every abelian group is a module this way; other orders need
    explicit action matrices through RightModule directly.
    """
    if order.rank != 1:
        raise ValueError("default identity action only exists over rank-1 orders")
    g = FgAbGroup.from_relation_rows(ambient_rank, relation_columns)
    return RightModule(order, g, [IntMatrix.identity(ambient_rank)], name=name)


_HOM_CACHE = {}


def hom_right(j_mod, p_mod):
    """Right-linear maps between modules over the same order.

    Returns (group, representing GroupMaps for the group generators),
    computed as hom_group cut down by F rho_J(e_i) = rho_P(e_i) F.
    """
    if j_mod.order != p_mod.order:
        raise ValueError("modules live over different orders")
    key = (j_mod.fingerprint(), p_mod.fingerprint())
    hit = _HOM_CACHE.get(key)
    if hit is not None:
        return hit
    intertwine = list(zip(j_mod.rho, p_mod.rho))
    result = hom_group(j_mod.underlying, p_mod.underlying, intertwine)
    _HOM_CACHE[key] = result
    return result


def hom_bimodule(b1, b2):
    """Maps commuting with both actions of two bimodules over one order."""
    if b1.order != b2.order:
        raise ValueError("bimodules live over different orders")
    intertwine = list(zip(b1.rho, b2.rho)) + list(zip(b1.lam, b2.lam))
    return hom_group(b1.underlying, b2.underlying, intertwine)


def det_left_right_check(order, bimod, a, tol=1e-9):
    """Determinants of left and right multiplication by ``a`` on a bimodule.

    Both are computed on the free quotient; equality is the caller's claim to
    test (it holds when the real algebra is simple).
    """
    if bimod.order != order:
        raise ValueError("bimodule does not live over the given order")
    c = _coords(a)
    g = bimod.underlying
    det_l = real_determinant_of_induced_map(g, bimod.left_action_matrix(c), tol=tol)
    det_r = real_determinant_of_induced_map(g, bimod.right_action_matrix(c), tol=tol)
    return det_l, det_r


def tensor_with_bimodule(p_mod, bimod, name=None):
    """Right module P (x)_R B for a right module P and a bimodule B.

    Generators are p_a (x) b_c (row-major); relations are relations of each
    factor plus the balancing columns (p.e_i) (x) b - p (x) (e_i.b); the right
    action is through the right action of B.
    """
    if p_mod.order != bimod.order:
        raise ValueError("modules live over different orders")
    order = p_mod.order
    np_ = p_mod.ambient_rank()
    nb = bimod.underlying.ambient_rank
    n = np_ * nb
    rel_blocks = []
    relp = p_mod.underlying.relations
    relb = bimod.underlying.relations
    if relp.cols:
        rel_blocks.append(relp.kron(IntMatrix.identity(nb)))
    if relb.cols:
        rel_blocks.append(IntMatrix.identity(np_).kron(relb))
    for i in range(order.rank):
        balance = p_mod.rho[i].kron(IntMatrix.identity(nb)) - \
            IntMatrix.identity(np_).kron(bimod.lam[i])
        rel_blocks.append(balance)
    if rel_blocks:
        rel = rel_blocks[0]
        for b in rel_blocks[1:]:
            rel = rel.hstack(b)
    else:
        rel = IntMatrix(n, 0, [])
    g = FgAbGroup(rel)
    rho = [IntMatrix.identity(np_).kron(bimod.rho[i]) for i in range(order.rank)]
    return RightModule(order, g, rho, name=name)


def invertibility_necessary_check(j_mod, expected_end_rank=None):
    """Necessary conditions for a user-asserted invertible module.

    Checks that End(J) has the expected rank (defaults to the order rank) and
    contains the identity.  Sufficiency is out of reach; callers must assert.
    """
    expected = expected_end_rank if expected_end_rank is not None else j_mod.order.rank
    end_grp, _ = hom_right(j_mod, j_mod)
    ok_rank = end_grp.rank == expected
    n = j_mod.ambient_rank()
    ident = IntMatrix.identity(n)
    # identity is always right-linear; confirm it lies in the computed lattice
    basis = hom_lattice_basis(j_mod.underlying, j_mod.underlying,
                              list(zip(j_mod.rho, j_mod.rho)))
    flat = [ident.entry(i, jj) for i in range(n) for jj in range(n)]
    has_unit = solve_in_lattice(basis, flat) is not None
    return {
        "end_rank": end_grp.rank,
        "expected_end_rank": expected,
        "end_rank_matches": ok_rank,
        "contains_unit": has_unit,
        "pass": ok_rank and has_unit,
    }


# ---------------------------------------------------------------------------
# builtin order library


def _m2z_constants():
    # basis E11, E12, E21, E22; Eij * Ekl = delta_jk * Eil
    idx = {(1, 1): 0, (1, 2): 1, (2, 1): 2, (2, 2): 3}
    r = 4
    c = [[[0] * r for _ in range(r)] for _ in range(r)]
    for (i, j), a in idx.items():
        for (k, l), b in idx.items():
            if j == k:
                c[a][b][idx[(i, l)]] = 1
    return c


def _lipschitz_constants():
    # basis 1, i, j, k with i^2 = j^2 = k^2 = -1, ij = k, jk = i, ki = j
    r = 4
    c = [[[0] * r for _ in range(r)] for _ in range(r)]
    table = {
        (0, 0): (0, 1), (0, 1): (1, 1), (0, 2): (2, 1), (0, 3): (3, 1),
        (1, 0): (1, 1), (2, 0): (2, 1), (3, 0): (3, 1),
        (1, 1): (0, -1), (2, 2): (0, -1), (3, 3): (0, -1),
        (1, 2): (3, 1), (2, 1): (3, -1),
        (2, 3): (1, 1), (3, 2): (1, -1),
        (3, 1): (2, 1), (1, 3): (2, -1),
    }
    for (i, j), (k, sign) in table.items():
        c[i][j][k] = sign
    return c


def _gaussian_constants():
    # basis 1, i with i^2 = -1
    return [[[1, 0], [0, 1]], [[0, 1], [-1, 0]]]


def _zxz_constants():
    # basis e1, e2 with e1^2 = e1, e2^2 = e2, e1*e2 = 0
    return [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]


def _dual_numbers_constants():
    # basis 1, eps with eps^2 = 0
    return [[[1, 0], [0, 1]], [[0, 1], [0, 0]]]


_BUILTINS = {
    "Z": lambda: validate_order([[[1]]], [1], name="Z"),
    "Z[i]": lambda: validate_order(_gaussian_constants(), [1, 0], name="Z[i]"),
    "M2(Z)": lambda: validate_order(_m2z_constants(), [1, 0, 0, 1], name="M2(Z)"),
    "lipschitz": lambda: validate_order(_lipschitz_constants(), [1, 0, 0, 0],
                                        name="lipschitz"),
    "ZxZ": lambda: validate_order(_zxz_constants(), [1, 1], name="ZxZ"),
    "Z[eps]": lambda: validate_order(_dual_numbers_constants(), [1, 0],
                                     name="Z[eps]"),
}

# orders whose real algebra the built-in certificate or standard theory marks
# simple; Z[i] realifies to the complex numbers, simple but not central
_ASSERTED_SIMPLE = {"Z", "Z[i]", "M2(Z)", "lipschitz"}


def builtin_order(name):
    """One of the shipped orders: Z, Z[i], M2(Z), lipschitz, ZxZ, Z[eps]."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin order {name!r}; "
                       f"choose from {sorted(_BUILTINS)}") from None
    return factory()


def builtin_names():
    return sorted(_BUILTINS)


def is_simple_real_algebra(order, user_asserted=False):
    """Certified or asserted simplicity of the realification."""
    if user_asserted:
        return True
    if order.name in _ASSERTED_SIMPLE:
        return True
    return semisimplicity_check(order)["certified_simple"]


def column_module(order):
    """For M2(Z): the column lattice Z^2 with v.A = A^T v."""
    if order.name != "M2(Z)":
        raise ValueError("column module is defined for the builtin M2(Z)")
    g = FgAbGroup.free(2)
    # right action of E11, E12, E21, E22 via transposes
    e = {0: [[1, 0], [0, 0]], 1: [[0, 0], [1, 0]],
         2: [[0, 1], [0, 0]], 3: [[0, 0], [0, 1]]}
    rho = [_int_matrix(e[i]) for i in range(4)]
    return RightModule(order, g, rho, name="columns")


def first_factor_bimodule(order):
    """Over ZxZ: the lattice Z with left action through the first projection
    and right action through the second.  Left and right determinants differ,
    which is impossible over a simple real algebra."""
    if order.name != "ZxZ":
        raise ValueError("this control bimodule is defined over the builtin ZxZ")
    g = FgAbGroup.free(1)
    lam = [_int_matrix([[1]]), _int_matrix([[0]])]
    rho = [_int_matrix([[0]]), _int_matrix([[1]])]
    return Bimodule(order, g, lam, rho, name="skew control")


def skew_line_bimodule(order):
    """Alias of the control bimodule, packaged for line-bundle scenarios."""
    return first_factor_bimodule(order)


def skew_line_inverse(order):
    """The opposite skew lattice, used as asserted inverse data."""
    if order.name != "ZxZ":
        raise ValueError("this control bimodule is defined over the builtin ZxZ")
    g = FgAbGroup.free(1)
    lam = [_int_matrix([[0]]), _int_matrix([[1]])]
    rho = [_int_matrix([[1]]), _int_matrix([[0]])]
    return Bimodule(order, g, lam, rho, name="skew control inverse")
