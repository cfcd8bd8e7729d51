"""Graded-module oracle: torsion, truncation, shift, Cech cohomology."""

import pytest

from ncsurf.exactlin import FgAbGroup, IntMatrix
from ncsurf.gradedengine import (
    GradedModule,
    NotStable,
    StabilizationNotDetected,
    WindowTooSmall,
    cech_cohomology,
    direct_sum_graded,
    finite_stalk,
    free_graded,
    from_twist_sum,
    gamma_sections,
    poly_monomials,
    torsion_submodule,
    truncate_shift,
    window_for,
)
from ncsurf.p1cohomology import TwistSum, twist_cohomology
from ncsurf.zorder import abelian_module, builtin_order, regular_right_module


def _free_window(twist=0, d0=None, d1=None):
    z = builtin_order("Z")
    lo, hi = window_for(d0 if d0 is not None else 0,
                        d1 if d1 is not None else 3, [twist])
    return free_graded(z, lo, hi, twist=twist)


def test_free_component_ranks():
    m = free_graded(builtin_order("Z"), 0, 8)
    for d in range(0, 9):
        assert m.component(d).invariants() == (d + 1, ())
    assert poly_monomials(2) == [(2, 0), (1, 1), (0, 2)]


def test_validation_runs_on_handmade_data():
    z = builtin_order("Z")
    comps = [FgAbGroup.free(2)] * 3
    good = IntMatrix.from_rows([[1, 0], [0, 1]])
    GradedModule(z, 0, comps, [good, good], [good, good], check=True)
    a = IntMatrix.from_rows([[1, 1], [0, 1]])
    b = IntMatrix.from_rows([[1, 0], [1, 1]])
    with pytest.raises(ValueError):
        GradedModule(z, 0, comps, [a, a], [b, b], check=True)


def test_truncate_ranks_and_idempotence():
    m = free_graded(builtin_order("Z"), 0, 6)
    t = truncate_shift(m, 2, "truncate")
    assert [t.component(d).rank for d in range(0, 7)] == [0, 0, 3, 4, 5, 6, 7]
    t2 = truncate_shift(t, 2, "truncate")
    assert t2.fingerprint() == t.fingerprint()
    assert truncate_shift(m, -5, "truncate").fingerprint() == m.fingerprint()
    with pytest.raises(WindowTooSmall):
        truncate_shift(m, 9, "truncate")


def test_shift_reindexes():
    m = free_graded(builtin_order("Z"), 0, 6)
    s = truncate_shift(m, 2, "shift")
    assert s.d_min == -2
    for i in range(-2, 5):
        assert s.component(i).rank == m.component(i + 2).rank
    back = truncate_shift(s, -2, "shift")
    assert back.fingerprint() == m.fingerprint()
    assert truncate_shift(m, 0, "shift").fingerprint() == m.fingerprint()


def test_torsion_of_stalk_is_everything():
    z = builtin_order("Z")
    m = finite_stalk(z, [(6,)], 0, 0, 12)
    tau, _ = torsion_submodule(m)
    assert tau.component(0).invariants() == (0, (6,))
    for d in range(1, tau.d_max + 1):
        assert tau.component(d).is_trivial()


def test_torsion_of_free_is_zero():
    m = free_graded(builtin_order("Z"), 0, 12)
    tau, _ = torsion_submodule(m)
    for d in range(tau.d_min, tau.d_max + 1):
        assert tau.component(d).is_trivial()


def test_torsion_commutes_with_direct_sum():
    z = builtin_order("Z")
    free = free_graded(z, 0, 12)
    junk = finite_stalk(z, [(4,)], 1, 0, 12)
    both = direct_sum_graded(free, junk)
    tau, _ = torsion_submodule(both)
    tau_j, _ = torsion_submodule(junk)
    top = min(tau.d_max, tau_j.d_max)
    for d in range(tau.d_min, top + 1):
        assert tau.component(d).invariants() == tau_j.component(d).invariants()


def test_torsion_needs_stable_flag():
    z = builtin_order("Z")
    comps = [FgAbGroup.free(1)] * 3
    one = IntMatrix.identity(1)
    m = GradedModule(z, 0, comps, [one, one], [one, one], stable=False)
    with pytest.raises(NotStable):
        torsion_submodule(m)
    with pytest.raises(NotStable):
        cech_cohomology(m, 0)


def test_cech_positive_twist():
    m = _free_window()
    h0, h1 = cech_cohomology(m, 3)
    assert h0.invariants() == (4, ())
    assert h1.is_trivial()


def test_cech_negative_twist():
    m = _free_window(twist=-3, d0=0, d1=0)
    h0, h1 = cech_cohomology(m, 0)
    assert h0.is_trivial()
    assert h1.invariants() == (2, ())


def test_cech_torsion_coefficients():
    z = builtin_order("Z")
    e = TwistSum.single(abelian_module(z, 1, [(6,)], name="Z/6"), 0)
    lo, hi = window_for(0, 0, [0])
    m = from_twist_sum(e, lo, hi)
    h0, h1 = cech_cohomology(m, 0)
    assert h0.invariants() == (0, (6,))
    assert h1.is_trivial()


def test_cech_shift_compatibility():
    m = _free_window(twist=1, d0=-1, d1=3)
    s = truncate_shift(m, 1, "shift")
    for d in (-1, 0, 1, 2):
        a = cech_cohomology(s, d)
        b = cech_cohomology(m, d + 1)
        assert a[0].invariants() == b[0].invariants()
        assert a[1].invariants() == b[1].invariants()


def test_cech_detects_missing_stabilization():
    m = free_graded(builtin_order("Z"), 0, 6)
    with pytest.raises(StabilizationNotDetected) as exc:
        cech_cohomology(m, 0)
    assert exc.value.degree == 0
    with pytest.raises(WindowTooSmall):
        cech_cohomology(m, 6)


def test_gamma_sections_free():
    m = _free_window(d0=0, d1=3)
    secs = gamma_sections(m, range(0, 4))
    assert [secs[d].rank for d in range(0, 4)] == [1, 2, 3, 4]


def test_oracle_matches_sheaf_counts():
    z = builtin_order("Z")
    reg = regular_right_module(z)
    e = TwistSum(z, [(reg, 2), (abelian_module(z, 1, [(4,)], name="Z/4"), 0)])
    lo, hi = window_for(-2, 2, e.twists())
    m = from_twist_sum(e, lo, hi)
    for d in range(-2, 3):
        shifted = TwistSum(z, [(p, n + d) for p, n in e.summands])
        want0 = twist_cohomology(shifted, 0).group.invariants()
        want1 = twist_cohomology(shifted, 1).group.invariants()
        h0, h1 = cech_cohomology(m, d)
        assert h0.invariants() == want0
        assert h1.invariants() == want1


def test_oracle_matches_sheaf_counts_m2():
    r = builtin_order("M2(Z)")
    e = TwistSum.single(regular_right_module(r), -2)
    lo, hi = window_for(0, 1, e.twists())
    m = from_twist_sum(e, lo, hi)
    for d in (0, 1):
        shifted = TwistSum(r, [(p, n + d) for p, n in e.summands])
        h0, h1 = cech_cohomology(m, d)
        assert h0.invariants() == twist_cohomology(shifted, 0).group.invariants()
        assert h1.invariants() == twist_cohomology(shifted, 1).group.invariants()
