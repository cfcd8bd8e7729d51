"""Acceptance gate: every shipped claim checked at its stated tolerance.

Each test covers one numbered criterion, records a pass/fail line for the
summary section, and then asserts.  Tolerances and time budgets are the
published ones, not loosened.
"""

import math
import random
import time
from fractions import Fraction

from click.testing import CliRunner

from ncsurf.arithbundles import (
    ArithBundle,
    ArithLineBundle,
    DetLine,
    OmegaChoice,
    det_line,
    duality_residual,
    euler_characteristic,
    rr_residual,
)
from ncsurf.cli import main
from ncsurf.exactlin import FgAbGroup, num_det, num_inverse, num_matmul
from ncsurf.gradedengine import cech_cohomology, from_twist_sum, window_for
from ncsurf.p1cohomology import TwistSum, h0_rank, h1_rank, regular_line, twist_cohomology
from ncsurf.zorder import (
    abelian_module,
    builtin_order,
    det_left_right_check,
    first_factor_bimodule,
    regular_bimodule,
    regular_right_module,
    semisimplicity_check,
)

REAL_SIMPLE_ORDERS = ("Z", "Z[i]", "M2(Z)", "lipschitz")
CERTIFIED_ORDERS = ("Z", "M2(Z)", "lipschitz")


def test_criterion_1_closed_forms(criterion_report):
    start = time.perf_counter()
    ok = True
    for name in REAL_SIMPLE_ORDERS:
        order = builtin_order(name)
        reg = regular_right_module(order)
        for n in range(-8, 9):
            e_sum = TwistSum.single(reg, n)
            got0 = twist_cohomology(e_sum, 0).group.invariants()
            got1 = twist_cohomology(e_sum, 1).group.invariants()
            ok = ok and got0 == (order.rank * h0_rank(n), ())
            ok = ok and got1 == (order.rank * h1_rank(n), ())
    elapsed = time.perf_counter() - start
    in_budget = elapsed < 1.0
    criterion_report(1, "cohomology closed forms over four orders", ok and in_budget,
                     f"{4 * 17} cases in {elapsed:.2f}s")
    assert ok
    assert in_budget


def test_criterion_2_two_path_oracle(criterion_report):
    start = time.perf_counter()
    z = builtin_order("Z")
    reg = regular_right_module(z)
    z6 = abelian_module(z, 1, [(6,)], name="Z/6")
    zz4 = abelian_module(z, 2, [(0, 4)], name="Z+Z/4")
    instances = [TwistSum.single(z6, n) for n in range(-4, 5)]
    instances += [TwistSum.single(zz4, n) for n in range(-4, 5)]
    instances.append(TwistSum(z, [(reg, 2), (z6, -1)]))
    instances.append(TwistSum(z, [(zz4, 0), (reg, -3)]))
    assert len(instances) >= 20
    ok = True
    for e_sum in instances:
        lo, hi = window_for(0, 0, e_sum.twists())
        cech0, cech1 = cech_cohomology(from_twist_sum(e_sum, lo, hi), 0)
        ok = ok and twist_cohomology(e_sum, 0).group.invariants() == cech0.invariants()
        ok = ok and twist_cohomology(e_sum, 1).group.invariants() == cech1.invariants()
    elapsed = time.perf_counter() - start
    in_budget = elapsed < 30.0
    criterion_report(2, "sheaf model matches graded oracle", ok and in_budget,
                     f"{len(instances)} instances in {elapsed:.2f}s")
    assert ok
    assert in_budget


def test_criterion_3_left_right_determinants(criterion_report):
    rng = random.Random(2026)
    worst = 0.0
    for name in REAL_SIMPLE_ORDERS:
        order = builtin_order(name)
        bimod = regular_bimodule(order)
        for _ in range(100):
            a = tuple(rng.randint(-5, 5) for _ in range(order.rank))
            dl, dr = det_left_right_check(order, bimod, a)
            worst = max(worst, abs(dl - dr) / max(1.0, abs(dl), abs(dr)))
    zz = builtin_order("ZxZ")
    dl, dr = det_left_right_check(zz, first_factor_bimodule(zz), (2, 1))
    control = (dl, dr) == (2, 1)
    ok = worst <= 1e-9 and control
    criterion_report(3, "left/right determinants agree, skew control splits", ok,
                     f"max rel gap {worst:.2g}, control dets {float(dl):g} vs {float(dr):g}")
    assert worst <= 1e-9
    assert control


def _seeded_rational_units(order, rng, count=5):
    scales = (Fraction(1), Fraction(3, 2), Fraction(2, 3), Fraction(5, 4), Fraction(4, 5))
    units = []
    while len(units) < count:
        u = tuple(rng.randint(-3, 3) for _ in range(order.rank))
        lam = order.left_matrix(u)
        if num_det(lam) == 0:
            continue
        s = rng.choice(scales)
        units.append(tuple(tuple(s * x for x in row) for row in lam))
    return units


def _alpha_pair(order):
    r = order.rank
    scaled = tuple(tuple(Fraction(3, 2) if i == j else Fraction(0) for j in range(r))
                   for i in range(r))
    return (None, scaled)


def _residual_sweep(fn):
    rng = random.Random(1789)
    worst = 0.0
    cases = 0
    for name in CERTIFIED_ORDERS:
        order = builtin_order(name)
        assert semisimplicity_check(order)["certified_simple"]
        betas = _seeded_rational_units(order, rng)
        alphas = _alpha_pair(order)
        for n in range(-3, 4):
            for beta in betas:
                lb = ArithLineBundle(regular_line(order, n), beta)
                for alpha in alphas:
                    res = fn(lb, OmegaChoice(order, alpha))
                    worst = max(worst, abs(res))
                    cases += 1
    return worst, cases


def test_criterion_4_duality_residuals(criterion_report):
    start = time.perf_counter()
    worst, cases = _residual_sweep(duality_residual)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8
    in_budget = elapsed < 60.0
    criterion_report(4, "duality residuals vanish over certified orders",
                     ok and in_budget,
                     f"{cases} cases, max |residual| {worst:.2g}, {elapsed:.1f}s")
    assert ok
    assert in_budget


def test_criterion_5_riemann_roch_residuals(criterion_report):
    worst, cases = _residual_sweep(rr_residual)
    z = builtin_order("Z")
    w = OmegaChoice(z)
    trivially_zero = all(
        rr_residual(ArithLineBundle(regular_line(z, n)), w) == 0.0
        for n in range(-3, 4))
    ok = worst <= 1e-8 and trivially_zero
    criterion_report(5, "riemann-roch residuals vanish, trivial case exactly", ok,
                     f"{cases} cases, max |residual| {worst:.2g}, "
                     f"exact zero {trivially_zero}")
    assert worst <= 1e-8
    assert trivially_zero


def _random_unimodular(rank, rng):
    rows = [[1 if i == j else 0 for j in range(rank)] for i in range(rank)]
    for _ in range(3 * rank):
        i, j = rng.randrange(rank), rng.randrange(rank)
        if i != j:
            c = rng.randint(-2, 2)
            for k in range(rank):
                rows[i][k] += c * rows[j][k]
    return tuple(tuple(r) for r in rows)


def test_criterion_6_detline_algebra(criterion_report):
    rng = random.Random(55)
    identities = True
    for _ in range(50):
        a = DetLine(Fraction(rng.randint(1, 9), rng.randint(1, 9)),
                    Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 9)))
        b = DetLine(Fraction(rng.randint(1, 9), rng.randint(1, 9)),
                    Fraction(rng.randint(1, 9), rng.randint(1, 9)))
        identities = identities and abs(
            a.tensor(b).adeg() - (a.adeg() + b.adeg())) <= 1e-12
        identities = identities and abs(a.inverse().adeg() + a.adeg()) <= 1e-12
    invariance = True
    for _ in range(50):
        rank = rng.randint(1, 3)
        diag = [rng.choice([0, 0, 2, 3, 6]) for _ in range(rank)]
        relations = [tuple(diag[i] if j == i else 0 for j in range(rank))
                     for i in range(rank) if diag[i]]
        g = FgAbGroup.from_relation_rows(rank, relations)
        phi = tuple(tuple(rng.choice([-3, -2, -1, 1, 2, 3]) if i == j else 0
                          for j in range(rank)) for i in range(rank))
        u = _random_unimodular(rank, rng)
        g2 = FgAbGroup.from_relation_rows(
            rank, [tuple(sum(u[i][k] * rel[k] for k in range(rank))
                         for i in range(rank)) for rel in relations])
        phi2 = num_matmul(num_matmul(u, phi), num_inverse(u))
        one, two = det_line(g, phi), det_line(g2, phi2)
        invariance = invariance and one.q == two.q
        invariance = invariance and abs(abs(one.value() / two.value()) - 1) <= 1e-12
    ok = identities and invariance
    criterion_report(6, "determinant line identities and presentation invariance",
                     ok, "50 + 50 seeded cases")
    assert identities
    assert invariance


def test_criterion_7_torsion_euler_characteristic(criterion_report):
    z = builtin_order("Z")
    z6 = abelian_module(z, 1, [(6,)], name="Z/6")
    chi = euler_characteristic(ArithBundle(TwistSum.single(z6, 0)), OmegaChoice(z))
    gap = abs(chi - math.log(6))
    ok = gap <= 1e-12
    criterion_report(7, "euler characteristic of the length-six point", ok,
                     f"chi = {chi:.12f}, gap {gap:.2g}")
    assert ok


def test_criterion_8_selftest_determinism(criterion_report, tmp_path):
    runner = CliRunner()
    outputs = []
    for tag in ("first", "second"):
        path = tmp_path / f"{tag}.json"
        result = runner.invoke(
            main, ["selftest", "--seed", "11", "--out", str(path)])
        assert result.exit_code == 0, result.output
        outputs.append(path.read_bytes())
    identical = outputs[0] == outputs[1]
    criterion_report(8, "selftest reports byte-identical for equal seeds",
                     identical, f"{len(outputs[0])} bytes")
    assert identical
