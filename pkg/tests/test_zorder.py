"""Structure-constant rings, modules, bimodules, trace form, dual lattice."""

import itertools
import random
from fractions import Fraction

import pytest

from ncsurf.exactlin import FgAbGroup, IntMatrix, group_invariants, num_matmul
from ncsurf.zorder import (
    BadUnit,
    Bimodule,
    NotAssociative,
    OrderElement,
    RightModule,
    abelian_module,
    builtin_names,
    builtin_order,
    column_module,
    det_left_right_check,
    dual_bimodule,
    first_factor_bimodule,
    hom_right,
    invertibility_necessary_check,
    is_simple_real_algebra,
    regular_bimodule,
    regular_representations,
    regular_right_module,
    semisimplicity_check,
    skew_line_inverse,
    tensor_with_bimodule,
    validate_order,
)


def test_builtins_validate():
    for name in builtin_names():
        order = builtin_order(name)
        assert order.rank >= 1


def test_m2z_unit_and_products():
    m2 = builtin_order("M2(Z)")
    assert m2.unit == (1, 0, 0, 1)
    # E12 * E21 = E11, E21 * E12 = E22
    e12 = (0, 1, 0, 0)
    e21 = (0, 0, 1, 0)
    assert m2.multiply(e12, e21) == (1, 0, 0, 0)
    assert m2.multiply(e21, e12) == (0, 0, 0, 1)


def test_lipschitz_relations():
    h = builtin_order("lipschitz")
    i = (0, 1, 0, 0)
    j = (0, 0, 1, 0)
    k = (0, 0, 0, 1)
    minus_one = (-1, 0, 0, 0)
    assert h.multiply(i, i) == minus_one
    assert h.multiply(j, j) == minus_one
    assert h.multiply(i, j) == k
    assert h.multiply(j, i) == tuple(-x for x in k)
    assert h.multiply(j, k) == i
    assert h.multiply(k, i) == j


def test_not_associative():
    # e2*e2 = e2 with e1 the unit fails associativity only if inconsistent;
    # craft: e2*e2 = e1 but e2*(e2*e2) vs (e2*e2)*e2 mismatch via e2*e1 = 0
    constants = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
    with pytest.raises((NotAssociative, BadUnit)):
        validate_order(constants, [1, 0])


def test_bad_unit():
    constants = [[[1, 0], [0, 1]], [[0, 1], [-1, 0]]]
    with pytest.raises(BadUnit):
        validate_order(constants, [0, 1])


def test_regular_representation_examples():
    z = builtin_order("Z")
    lam, rho = regular_representations(z, OrderElement([5]))
    assert lam.entries == ((5,),) and rho.entries == ((5,),)
    m2 = builtin_order("M2(Z)")
    lam2, rho2 = regular_representations(m2, OrderElement([1, 0, 0, 0]))  # E11
    assert lam2.trace() == 2 and rho2.trace() == 2
    assert (lam2 * lam2).entries == lam2.entries
    assert (rho2 * rho2).entries == rho2.entries
    lam_u, rho_u = regular_representations(m2, OrderElement([1, 0, 0, 1]))
    assert lam_u.entries == rho_u.entries == tuple(
        tuple(1 if a == b else 0 for b in range(4)) for a in range(4))


def test_regular_representation_covariance():
    # lambda_a lambda_b = lambda_{ab}, rho_a rho_b = rho_{ba}, and they commute
    rng = random.Random(3)
    for name in ["Z[i]", "M2(Z)", "lipschitz", "ZxZ"]:
        order = builtin_order(name)
        r = order.rank
        for _ in range(10):
            a = tuple(rng.randrange(-4, 5) for _ in range(r))
            b = tuple(rng.randrange(-4, 5) for _ in range(r))
            la, ra = regular_representations(order, a)
            lb, rb = regular_representations(order, b)
            lab, rab = regular_representations(order, order.multiply(a, b))
            lba, rba = regular_representations(order, order.multiply(b, a))
            assert (la * lb).entries == lab.entries
            assert (ra * rb).entries == rba.entries
            assert (la * rb).entries == (rb * la).entries


def test_semisimplicity_reports():
    m2 = semisimplicity_check(builtin_order("M2(Z)"))
    assert m2["separable_over_R"] and m2["center_rank"] == 1
    assert m2["certified_simple"]
    eps = semisimplicity_check(builtin_order("Z[eps]"))
    assert not eps["separable_over_R"]
    zxz = semisimplicity_check(builtin_order("ZxZ"))
    assert zxz["separable_over_R"] and zxz["center_rank"] == 2
    assert not zxz["certified_simple"]
    lip = semisimplicity_check(builtin_order("lipschitz"))
    assert lip["separable_over_R"] and lip["center_rank"] == 1
    zi = semisimplicity_check(builtin_order("Z[i]"))
    assert zi["separable_over_R"] and zi["center_rank"] == 2
    assert is_simple_real_algebra(builtin_order("Z[i]"))
    assert not is_simple_real_algebra(builtin_order("ZxZ"))


def test_gaussian_trace_gram():
    zi = builtin_order("Z[i]")
    assert zi.trace_gram() == ((2, 0), (0, -2))


def test_dual_bimodule_laws_and_double_dual():
    for name in ["Z", "Z[i]", "M2(Z)", "lipschitz", "ZxZ"]:
        order = builtin_order(name)
        dual = dual_bimodule(order)  # constructor checks all bimodule laws
        reg = regular_bimodule(order)
        assert dual.underlying.rank == order.rank
        # double dual: action matrices return to the regular ones
        double_lam = [m.transpose().transpose() for m in reg.lam]
        assert [m._entries for m in double_lam] == [m._entries for m in reg.lam]
        traces_reg = sorted(sum(m.entry(i, i) for i in range(m.rows)) for m in reg.lam)
        dd = dual_bimodule_of_dual(order)
        traces_dd = sorted(sum(m.entry(i, i) for i in range(m.rows)) for m in dd.lam)
        assert traces_reg == traces_dd


def dual_bimodule_of_dual(order):
    dual = dual_bimodule(order)
    # dualize again by hand: transpose and swap the two actions
    lam = [m.transpose() for m in dual.rho]
    rho = [m.transpose() for m in dual.lam]
    return Bimodule(order, FgAbGroup.free(order.rank), lam, rho, name="double dual")


def test_self_duality_via_bimodule_homs():
    # R and its dual lattice are isomorphic as bimodules for these orders:
    # some small integer combination of hom generators is unimodular
    from ncsurf.exactlin import num_det
    from ncsurf.zorder import hom_bimodule
    for name in ["Z", "Z[i]", "M2(Z)"]:
        order = builtin_order(name)
        reg = regular_bimodule(order)
        dual = dual_bimodule(order)
        grp, reps = hom_bimodule(reg, dual)
        assert grp.rank >= 1
        found = False
        mats = [r.matrix.rows_tuple() for r in reps]
        for combo in itertools.product(range(-2, 3), repeat=len(mats)):
            acc = [[sum(c * m[i][j] for c, m in zip(combo, mats))
                    for j in range(order.rank)] for i in range(order.rank)]
            if abs(num_det(acc)) == 1:
                found = True
                break
        assert found, f"no unimodular bimodule map onto the dual for {name}"


def test_hom_right_regular_is_module():
    for name in ["Z", "Z[i]", "M2(Z)", "lipschitz"]:
        order = builtin_order(name)
        reg = regular_right_module(order)
        grp, reps = hom_right(reg, reg)
        assert group_invariants(grp) == (order.rank, [])
    z = builtin_order("Z")
    p = abelian_module(z, 1, [(6,)])
    grp, _ = hom_right(regular_right_module(z), p)
    assert group_invariants(grp) == group_invariants(p.underlying)


def test_hom_right_column_module():
    m2 = builtin_order("M2(Z)")
    cols = column_module(m2)
    grp, reps = hom_right(cols, regular_right_module(m2))
    assert grp.rank == 2
    # oracle: brute force integer 4x2 matrices with small entries satisfying
    # the commutation conditions, and confirm the lattice rank is 2
    sols = []
    rho_j = [m.rows_tuple() for m in cols.rho]
    rho_p = [m.rows_tuple() for m in regular_right_module(m2).rho]
    for flat in itertools.product(range(-1, 2), repeat=8):
        f = [flat[0:2], flat[2:4], flat[4:6], flat[6:8]]
        ok = True
        for a in range(4):
            lhs = num_matmul(f, rho_j[a])
            rhs = num_matmul(rho_p[a], f)
            if lhs != rhs:
                ok = False
                break
        if ok:
            sols.append(flat)
    # the solution set is a lattice; rank from the span of the enumerated box
    from ncsurf.exactlin import IntMatrix as IM, snf_diagonal
    span = IM.from_rows([list(s) for s in sols]) if sols else IM(0, 8, [])
    rank = sum(1 for d in snf_diagonal(span) if d)
    assert rank == 2


def test_det_left_right_m2z_and_quaternions():
    rng = random.Random(5)
    for name in ["M2(Z)", "lipschitz"]:
        order = builtin_order(name)
        reg = regular_bimodule(order)
        hits = 0
        while hits < 10:
            a = tuple(rng.randrange(-5, 6) for _ in range(4))
            dl, dr = det_left_right_check(order, reg, a)
            if dl == 0:
                continue
            hits += 1
            assert dl == dr


def test_det_left_right_negative_control():
    zxz = builtin_order("ZxZ")
    skew = first_factor_bimodule(zxz)
    dl, dr = det_left_right_check(zxz, skew, (2, 1))
    assert dl == 2 and dr == 1


def test_tensor_with_bimodule():
    zxz = builtin_order("ZxZ")
    skew = first_factor_bimodule(zxz)
    inv = skew_line_inverse(zxz)
    # rank-1 module (second factor pattern) tensored with the inverse skew
    j_right = skew.as_right_module()
    t = tensor_with_bimodule(j_right, inv)
    assert t.underlying.rank == 1
    # the result carries the right action of the inverse: e1 acts as 1, e2 as 0
    from ncsurf.exactlin import real_determinant_of_induced_map
    d1 = real_determinant_of_induced_map(t.underlying, t.action_matrix((1, 0)))
    d2 = real_determinant_of_induced_map(t.underlying, t.action_matrix((0, 1)))
    assert (d1, d2) == (1, 0)
    # regular (x) dual over M2(Z) keeps rank r
    m2 = builtin_order("M2(Z)")
    t2 = tensor_with_bimodule(regular_right_module(m2), dual_bimodule(m2))
    assert t2.underlying.rank == 4


def test_invertibility_necessary_check():
    m2 = builtin_order("M2(Z)")
    rep = invertibility_necessary_check(regular_right_module(m2))
    assert rep["pass"] and rep["end_rank"] == 4
    zxz = builtin_order("ZxZ")
    skew = first_factor_bimodule(zxz).as_right_module()
    rep2 = invertibility_necessary_check(skew, expected_end_rank=1)
    assert rep2["pass"]
    rep3 = invertibility_necessary_check(skew)  # default expects rank 2
    assert not rep3["pass"]


def test_module_action_validation_catches_errors():
    z = builtin_order("Z")
    g = FgAbGroup.from_relation_rows(1, [(4,)])
    with pytest.raises(Exception):
        # 2 is not the identity map on Z/4, so the unit law fails
        RightModule(z, g, [IntMatrix.from_rows([[2]])])
    zxz = builtin_order("ZxZ")
    with pytest.raises(Exception):
        # both basis elements acting as identity is not multiplicative:
        # e1*e2 = 0 must act as 0
        RightModule(zxz, FgAbGroup.free(1),
                    [IntMatrix.from_rows([[1]]), IntMatrix.from_rows([[1]])])


def test_order_element_wrapper():
    e = OrderElement([1, 2, 3])
    assert len(e) == 3 and e[1] == 2 and tuple(e) == (1, 2, 3)
