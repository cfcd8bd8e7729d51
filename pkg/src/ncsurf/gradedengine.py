"""Graded right modules over R[T0, T1] on an explicit degree window, with
torsion submodules, truncation and shift, section functors, and graded Cech
cohomology via stabilized two-chart colimits.

This module is the slow, literal oracle: it never uses the monomial counting
shortcuts of the sheaf layer, only degreewise integer linear algebra.  Charts
are the loci T0 != 0 and T1 != 0; degree-d fractions x / T^k live at stage k
of a directed system, and all colimits are detected by invariant plateaus of
length at least max(4, presentation degree + 2).
"""

from __future__ import annotations

from .exactlin import (
    FgAbGroup,
    GroupMap,
    IntMatrix,
    cokernel_with_projection,
    kernel_with_inclusion,
    solve_in_lattice,
)
from .p1cohomology import TwistSum
from .zorder import RightModule, regular_right_module


class NotStable(ValueError):
    """Operation requires a module whose window is marked stable."""


class WindowTooSmall(ValueError):
    """The degree window cannot witness the requested operation."""


class StabilizationNotDetected(ValueError):
    """Invariants kept changing through the whole window."""

    def __init__(self, message, degree=None):
        super().__init__(message)
        self.degree = degree


def _zero_group():
    return FgAbGroup.free(0)


def _zero_map(src, tgt):
    return GroupMap(src, tgt, IntMatrix(tgt.ambient_rank, src.ambient_rank,
                                        [0] * (tgt.ambient_rank * src.ambient_rank)),
                    check=False)


class GradedModule:
    """Degreewise data of a graded right R[T0, T1]-module on a window.

    components[i] is the degree (d_min + i) piece; t0[i], t1[i] are the two
    multiplication maps out of it.  ``actions`` gives the right R-action per
    degree (one integer matrix per order basis element); omitted actions are
    identity and only legal over rank-1 orders.  ``stable`` asserts that the
    window is wide enough that colimit detection can be trusted; builders set
    it, hand-rolled data must claim it explicitly.
    """

    __slots__ = ("order", "d_min", "d_max", "components", "t0", "t1",
                 "actions", "stable", "presentation_degree")

    def __init__(self, order, d_min, components, t0, t1, actions=None,
                 stable=False, presentation_degree=0, check=True):
        components = tuple(components)
        if not components:
            raise WindowTooSmall("empty degree window")
        d_min = int(d_min)
        d_max = d_min + len(components) - 1
        t0 = tuple(t0)
        t1 = tuple(t1)
        if len(t0) != len(components) - 1 or len(t1) != len(components) - 1:
            raise ValueError("need exactly one map per adjacent degree pair")
        if actions is None:
            if order.rank != 1:
                raise ValueError("implicit identity action needs a rank-1 order")
            actions = tuple((IntMatrix.identity(c.ambient_rank),)
                            for c in components)
        else:
            actions = tuple(tuple(m for m in acts) for acts in actions)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "d_min", d_min)
        object.__setattr__(self, "d_max", d_max)
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "stable", bool(stable))
        object.__setattr__(self, "presentation_degree", int(presentation_degree))
        if check:
            self._check()

    def __setattr__(self, name, value):
        raise AttributeError("GradedModule is immutable")

    def _check(self):
        n = len(self.components)
        for i in range(n - 1):
            # GroupMap validates descent of both multiplication maps
            a = GroupMap(self.components[i], self.components[i + 1],
                         self.t0[i])
            b = GroupMap(self.components[i], self.components[i + 1],
                         self.t1[i])
            if i + 2 < n:
                a2 = GroupMap(self.components[i + 1], self.components[i + 2],
                              self.t0[i + 1], check=False)
                b2 = GroupMap(self.components[i + 1], self.components[i + 2],
                              self.t1[i + 1], check=False)
                if not b2.after(a).same_map(a2.after(b)):
                    raise ValueError(
                        f"t0 and t1 do not commute at degree {self.d_min + i}")
        for i, acts in enumerate(self.actions):
            mod = RightModule(self.order, self.components[i], acts,
                              name=f"degree {self.d_min + i}")
            if i + 1 < n:
                nxt = self.actions[i + 1]
                for s in range(self.order.rank):
                    for t in (self.t0[i], self.t1[i]):
                        lhs = GroupMap(self.components[i], self.components[i + 1],
                                       t * mod.rho[s], check=False)
                        rhs = GroupMap(self.components[i], self.components[i + 1],
                                       nxt[s] * t, check=False)
                        if not lhs.same_map(rhs):
                            raise ValueError(
                                f"order action does not commute with "
                                f"multiplication at degree {self.d_min + i}")

    def component(self, d):
        if d < self.d_min or d > self.d_max:
            raise WindowTooSmall(f"degree {d} outside window "
                                 f"[{self.d_min}, {self.d_max}]")
        return self.components[d - self.d_min]

    def map_out(self, which, d):
        """The matrix of t_which: M_d -> M_{d+1}."""
        if d < self.d_min or d + 1 > self.d_max:
            raise WindowTooSmall(f"no map out of degree {d} in window")
        return (self.t0 if which == 0 else self.t1)[d - self.d_min]

    def power_map(self, which, d, k):
        """GroupMap of t_which^k: M_d -> M_{d+k}."""
        src = self.component(d)
        if k == 0:
            return GroupMap.identity(src)
        mat = self.map_out(which, d)
        for j in range(1, k):
            mat = self.map_out(which, d + j) * mat
        return GroupMap(src, self.component(d + k), mat, check=False)

    def margin(self):
        return max(4, self.presentation_degree + 2)

    def fingerprint(self):
        return ("graded", self.order.fingerprint(), self.d_min,
                tuple(c.fingerprint() for c in self.components),
                tuple(m._entries for m in self.t0),
                tuple(m._entries for m in self.t1))

    def __repr__(self):
        return (f"GradedModule(window=[{self.d_min}, {self.d_max}], "
                f"order={self.order!r})")


# ---------------------------------------------------------------------------
# builders


def poly_monomials(k):
    """Degree-k monomials T0^a T1^b, a + b = k, descending in a."""
    return [(k - j, j) for j in range(k + 1)] if k >= 0 else []


def from_twist_sum(e_sum, d_min, d_max):
    """The graded module ⊕_i P_i ⊗ R[T0, T1][n_i] on the window.

    Degree d collects one copy of P_i per degree-(d + n_i) monomial, ordered
    by summand then by descending T0 exponent; t0 and t1 shift exponents.
    """
    order = e_sum.order
    if d_max < d_min:
        raise WindowTooSmall("empty window requested")
    components = []
    actions = []
    layout = []  # per degree: list of (summand, monomial, offset, width)
    for d in range(d_min, d_max + 1):
        blocks = []
        groups = []
        acts = [[] for _ in range(order.rank)]
        offset = 0
        for idx, (p, n) in enumerate(e_sum.summands):
            w = p.ambient_rank()
            for mono in poly_monomials(d + n):
                groups.append(p.underlying)
                blocks.append((idx, mono, offset, w))
                for s in range(order.rank):
                    acts[s].append(p.rho[s])
                offset += w
        components.append(FgAbGroup.direct_sum(groups))
        actions.append(tuple(IntMatrix.block_diag(mats) if mats
                             else IntMatrix.identity(0) for mats in acts))
        layout.append(blocks)
    t0 = []
    t1 = []
    for i in range(len(components) - 1):
        src_blocks = layout[i]
        tgt_blocks = layout[i + 1]
        tgt_total = components[i + 1].ambient_rank
        src_total = components[i].ambient_rank
        m0 = [[0] * src_total for _ in range(tgt_total)]
        m1 = [[0] * src_total for _ in range(tgt_total)]
        tgt_index = {(idx, mono): (off, w) for idx, mono, off, w in tgt_blocks}
        for idx, (a, b), off, w in src_blocks:
            for mat, shift in ((m0, (a + 1, b)), (m1, (a, b + 1))):
                toff, tw = tgt_index[(idx, shift)]
                for r in range(w):
                    mat[toff + r][off + r] = 1
        t0.append(IntMatrix.from_rows(m0))
        t1.append(IntMatrix.from_rows(m1))
    pres = max([0] + [-n for _, n in e_sum.summands])
    return GradedModule(order, d_min, components, t0, t1, actions=actions,
                        stable=True, presentation_degree=pres, check=False)


def free_graded(order, d_min, d_max, twist=0):
    """R[T0, T1] shifted by ``twist``, as a graded module on the window."""
    return from_twist_sum(
        TwistSum.single(regular_right_module(order), twist), d_min, d_max)


def finite_stalk(order, relation_columns, degree, d_min, d_max, ambient_rank=1):
    """Finite-length junk: one group sitting in a single degree, zero maps."""
    if order.rank != 1:
        raise ValueError("finite_stalk uses the identity action; rank-1 only")
    if not d_min <= degree <= d_max:
        raise WindowTooSmall("stalk degree outside window")
    stalk = FgAbGroup.from_relation_rows(ambient_rank, relation_columns)
    components = []
    for d in range(d_min, d_max + 1):
        components.append(stalk if d == degree else _zero_group())
    t0 = []
    t1 = []
    for i in range(len(components) - 1):
        t0.append(_zero_map(components[i], components[i + 1]).matrix)
        t1.append(_zero_map(components[i], components[i + 1]).matrix)
    return GradedModule(order, d_min, components, t0, t1,
                        stable=True, presentation_degree=degree + 1,
                        check=False)


def direct_sum_graded(a, b):
    """Degreewise direct sum; windows must agree exactly."""
    if a.order != b.order or a.d_min != b.d_min or a.d_max != b.d_max:
        raise ValueError("windows or orders differ")
    components = [FgAbGroup.direct_sum([x, y])
                  for x, y in zip(a.components, b.components)]
    t0 = [IntMatrix.block_diag([x, y]) for x, y in zip(a.t0, b.t0)]
    t1 = [IntMatrix.block_diag([x, y]) for x, y in zip(a.t1, b.t1)]
    actions = [tuple(IntMatrix.block_diag([ax[s], bx[s]])
                     for s in range(a.order.rank))
               for ax, bx in zip(a.actions, b.actions)]
    return GradedModule(a.order, a.d_min, components, t0, t1, actions=actions,
                        stable=a.stable and b.stable,
                        presentation_degree=max(a.presentation_degree,
                                                b.presentation_degree),
                        check=False)


# ---------------------------------------------------------------------------
# truncation, shift


def truncate_shift(m, d, mode):
    """M_{>= d} (mode "truncate") or M[d] with M[d]_i = M_{i+d} ("shift")."""
    if mode == "shift":
        return GradedModule(m.order, m.d_min - d, m.components, m.t0, m.t1,
                            actions=m.actions, stable=m.stable,
                            presentation_degree=m.presentation_degree - d,
                            check=False)
    if mode != "truncate":
        raise ValueError("mode must be 'truncate' or 'shift'")
    if d <= m.d_min:
        return m
    if d > m.d_max + 1:
        raise WindowTooSmall(
            "truncation level is above the window; nothing would be left")
    components = []
    t0 = []
    t1 = []
    actions = []
    for i, c in enumerate(m.components):
        deg = m.d_min + i
        keep = deg >= d
        components.append(c if keep else _zero_group())
        actions.append(m.actions[i] if keep
                       else tuple(IntMatrix.identity(0)
                                  for _ in range(m.order.rank)))
    for i in range(len(components) - 1):
        deg = m.d_min + i
        if deg + 1 >= d and deg >= d:
            t0.append(m.t0[i])
            t1.append(m.t1[i])
        else:
            zm = _zero_map(components[i], components[i + 1]).matrix
            t0.append(zm)
            t1.append(zm)
    return GradedModule(m.order, m.d_min, components, t0, t1, actions=actions,
                        stable=m.stable,
                        presentation_degree=max(m.presentation_degree, d + 1),
                        check=False)


# ---------------------------------------------------------------------------
# torsion


def _restricted_matrix(big_map, inc_src, ker_src, inc_tgt, ker_tgt):
    """Matrix of the restriction of a map to kernel subgroups.

    Columns of big_map o inc_src must land in the subgroup cut out by
    inc_tgt up to target relations; coordinates are solved in the lattice
    spanned by [inc_tgt | target relations].
    """
    composed = big_map.matrix * inc_src.matrix
    lattice = inc_tgt.matrix.hstack(inc_tgt.target.relations)
    cols = []
    for j in range(composed.cols):
        sol = solve_in_lattice(lattice, composed.col(j))
        if sol is None:
            raise RuntimeError("restriction does not preserve the submodule")
        cols.append(sol[:ker_tgt.ambient_rank])
    ents = []
    for i in range(ker_tgt.ambient_rank):
        ents.extend(c[i] for c in cols)
    return IntMatrix(ker_tgt.ambient_rank, composed.cols, ents)


def _same_subgroup(ambient_group, inc_a, inc_b):
    """True when the columns of inc_b lie in span(inc_a) + relations.

    The torsion kernels form an increasing chain, so this one-sided check
    already decides subgroup equality between consecutive stages.
    """
    lattice = inc_a.hstack(ambient_group.relations)
    for j in range(inc_b.cols):
        if solve_in_lattice(lattice, inc_b.col(j)) is None:
            return False
    return True


def torsion_submodule(m, _check_quotient=True):
    """Degreewise kernel of the stabilized maps into both chart colimits.

    tau(M)_d = ker(M_d -> M_{d+k} ⊕ M_{d+k}), x -> (t0^k x, t1^k x), once the
    kernel stops growing as a subgroup for margin() consecutive stages.  The
    output window is trimmed at the top to the degrees where the plateau is
    witnessed, and the quotient is checked to be torsion-free.
    """
    if not m.stable:
        raise NotStable("torsion submodule needs a stable window")
    margin = m.margin()
    kernels = {}
    top = None
    for d in range(m.d_min, m.d_max + 1):
        k_max = m.d_max - d
        found = None
        run = []
        for k in range(1, k_max + 1):
            phi = GroupMap(
                m.component(d),
                FgAbGroup.direct_sum([m.component(d + k), m.component(d + k)]),
                m.power_map(0, d, k).matrix.vstack(m.power_map(1, d, k).matrix),
                check=False)
            ker, inc = kernel_with_inclusion(phi)
            if run and _same_subgroup(m.component(d), run[-1][1].matrix,
                                      inc.matrix):
                run.append((ker, inc))
            else:
                run = [(ker, inc)]
            if len(run) >= margin:
                found = run[0]
                break
        if found is None:
            top = d - 1
            break
        kernels[d] = found
    else:
        top = m.d_max
    if top is None or top < m.d_min:
        raise WindowTooSmall(
            "window too small to stabilize any torsion kernel")
    degrees = list(range(m.d_min, top + 1))
    components = [kernels[d][0] for d in degrees]
    incs = [kernels[d][1] for d in degrees]
    t0 = []
    t1 = []
    actions = []
    for i, d in enumerate(degrees):
        acts = []
        for s in range(m.order.rank):
            big = GroupMap(m.component(d), m.component(d),
                           m.actions[d - m.d_min][s], check=False)
            acts.append(_restricted_matrix(big, incs[i], components[i],
                                           incs[i], components[i]))
        actions.append(tuple(acts))
        if i + 1 < len(degrees):
            for which, out in ((0, t0), (1, t1)):
                big = GroupMap(m.component(d), m.component(d + 1),
                               m.map_out(which, d), check=False)
                out.append(_restricted_matrix(big, incs[i], components[i],
                                              incs[i + 1], components[i + 1]))
    tau = GradedModule(m.order, m.d_min, components, t0, t1, actions=actions,
                       stable=True, presentation_degree=m.presentation_degree,
                       check=False)
    if _check_quotient:
        quot_components = []
        for i, d in enumerate(degrees):
            phi = GroupMap(components[i], m.component(d), incs[i].matrix,
                           check=False)
            coker, _ = cokernel_with_projection(phi)
            quot_components.append(coker)
        # cokernels keep ambient generators, so the original matrices restrict
        quot = GradedModule(m.order, m.d_min, quot_components,
                            m.t0[:len(degrees) - 1], m.t1[:len(degrees) - 1],
                            actions=[m.actions[i] for i in range(len(degrees))],
                            stable=True,
                            presentation_degree=m.presentation_degree,
                            check=False)
        tau2, _ = torsion_submodule(quot, _check_quotient=False)
        for c in tau2.components:
            if not c.is_trivial():
                raise RuntimeError("quotient by the torsion submodule "
                                   "still has torsion")
    return tau, incs


# ---------------------------------------------------------------------------
# Cech cohomology


def _stage_groups(m, d, k):
    """delta_k: M_{d+k}^2 -> M_{d+2k}, (x, y) -> t1^k x - t0^k y."""
    c0 = FgAbGroup.direct_sum([m.component(d + k), m.component(d + k)])
    p0 = m.power_map(1, d + k, k).matrix
    p1 = m.power_map(0, d + k, k).matrix
    delta = p0.hstack(-p1)
    phi = GroupMap(c0, m.component(d + 2 * k), delta, check=False)
    ker, _ = kernel_with_inclusion(phi)
    coker, _ = cokernel_with_projection(phi)
    return ker, coker


def cech_cohomology(m, d):
    """H^0 and H^1 of the image of M in the quotient category, twisted to
    degree d, via the two-chart comparison at stabilized stage k.

    Raises StabilizationNotDetected when no invariant plateau of length
    margin() fits inside the window.
    """
    if not m.stable:
        raise NotStable("Cech cohomology needs a stable window")
    margin = m.margin()
    k_lo = max(1, m.d_min - d)
    k_hi = (m.d_max - d) // 2
    if k_hi < k_lo:
        raise WindowTooSmall(
            f"window cannot host any Cech stage for degree {d}")
    run = []
    for k in range(k_lo, k_hi + 1):
        ker, coker = _stage_groups(m, d, k)
        inv = (ker.invariants(), coker.invariants())
        if run and run[-1][0] == inv:
            run.append((inv, ker, coker))
        else:
            run = [(inv, ker, coker)]
        if len(run) >= margin:
            return run[-1][1], run[-1][2]
    raise StabilizationNotDetected(
        f"no plateau of length {margin} below stage {k_hi}", degree=d)


def gamma_sections(m, d_range):
    """The graded section object: H^0 of each twist in the range."""
    return {d: cech_cohomology(m, d)[0] for d in d_range}


def window_for(d_min, d_max, twists, extra=0):
    """A window big enough to run cech_cohomology for all d in [d_min, d_max]
    against a twist sum with the given twists.

    Stage k needs degrees up to d + 2k; plateaus start only after the free
    resolution tail clears, roughly at max(0, -n) + margin stages.
    """
    pres = max([0] + [-n for n in twists])
    margin = max(4, pres + 2)
    hi = d_max + 2 * (pres + margin + 2) + extra
    lo = min(d_min - 1, 0)
    return lo, hi
