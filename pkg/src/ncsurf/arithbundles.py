"""Determinant lines on Spec Z and the arithmetic degree calculus: metrized
bundles on the noncommutative surface, determinants of cohomology with the
dualizing correction, intersection numbers, Euler characteristics, and the
residuals of the two global theorems (duality compatibility, Riemann-Roch).

A determinant line is tracked by the pair (q, t): q is the covolume scale of
the integral lattice (1 over the torsion cardinality of the cohomology
group), t the determinant of the induced real automorphism.  Only the value
q * |t| is an isomorphism invariant; degrees are -log of it.  Whenever the
automorphism data is rational the whole calculus runs in exact rational
arithmetic and residuals that vanish identically come out as exact 0.0.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction

from .exactlin import (
    log_fraction,
    num_identity,
    num_rows,
    real_determinant_of_induced_map,
)
from .p1cohomology import (
    AutData,
    TwistSum,
    _induced_det_from_parts,
    check_right_automorphism,
    dualizing_object,
    hom_ext_qgr,
    postcomposition_det_on_dual_homs,
    regular_line,
    twist_inverse,
)
from .zorder import is_simple_real_algebra


class SimplicityNotCertified(UserWarning):
    """The real algebra behind a theorem check is not certified simple."""


def _is_exact(x):
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _mul(a, b):
    if _is_exact(a) and _is_exact(b):
        return Fraction(a) * Fraction(b)
    return float(a) * float(b)


def _div(a, b):
    if _is_exact(a) and _is_exact(b):
        return Fraction(a) / Fraction(b)
    return float(a) / float(b)


class DetLine:
    """An arithmetic line on Spec Z up to degree data: covolume scale and
    metric scalar.  Isomorphism class = q * |t|."""

    __slots__ = ("q", "t")

    def __init__(self, q, t):
        q = Fraction(q)
        if q <= 0:
            raise ValueError("covolume scale must be positive")
        if _is_exact(t):
            t = Fraction(t)
            if t == 0:
                raise ValueError("metric scalar must be nonzero")
        else:
            t = float(t)
            if t == 0.0 or math.isnan(t) or math.isinf(t):
                raise ValueError("metric scalar must be a nonzero finite real")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "t", t)

    def __setattr__(self, name, value):
        raise AttributeError("DetLine is immutable")

    def is_exact(self):
        return _is_exact(self.t)

    def value(self):
        """q * |t|: the full invariant of the isomorphism class."""
        if self.is_exact():
            return self.q * abs(self.t)
        return float(self.q) * abs(self.t)

    def adeg(self):
        v = self.value()
        if _is_exact(v):
            if v == 1:
                return 0.0
            return -log_fraction(Fraction(v))
        return -math.log(v)

    def tensor(self, other):
        return DetLine(self.q * other.q, _mul(self.t, other.t))

    def inverse(self):
        return DetLine(1 / self.q, _div(1, self.t))

    def __eq__(self, other):
        return (isinstance(other, DetLine) and self.q == other.q
                and self.t == other.t)

    def __repr__(self):
        return f"DetLine(q={self.q}, t={self.t})"


def adeg(line):
    return line.adeg()


def det_line(group, phi=None):
    """Determinant line of a cohomology group with an induced automorphism.

    q is 1 over the torsion cardinality; t the determinant of phi on the
    free part (1 for rank-0 groups or omitted phi).
    """
    q = Fraction(1, group.torsion_order())
    if phi is None or group.rank == 0:
        return DetLine(q, Fraction(1))
    return DetLine(q, real_determinant_of_induced_map(group, phi))


# ---------------------------------------------------------------------------
# metrized bundles


class ArithBundle:
    """A twist sum with an automorphism of its realification."""

    __slots__ = ("e_sum", "gamma")

    def __init__(self, e_sum, gamma=None, tol=1e-9):
        if gamma is None:
            gamma = AutData.identity(e_sum)
        gamma.validate_on(e_sum, tol=tol)
        object.__setattr__(self, "e_sum", e_sum)
        object.__setattr__(self, "gamma", gamma)

    def __setattr__(self, name, value):
        raise AttributeError("ArithBundle is immutable")

    @property
    def order(self):
        return self.e_sum.order

    def __repr__(self):
        return f"ArithBundle({self.e_sum!r}, {self.gamma!r})"


class ArithLineBundle:
    """An invertible object with an automorphism matrix on its realification."""

    __slots__ = ("line", "beta")

    def __init__(self, line, beta=None, tol=1e-9):
        if beta is None:
            beta = num_identity(line.module.ambient_rank())
        else:
            beta = num_rows(beta)
        check_right_automorphism(line.module.underlying, line.module.rho,
                                 beta, tol=tol)
        object.__setattr__(self, "line", line)
        object.__setattr__(self, "beta", beta)

    def __setattr__(self, name, value):
        raise AttributeError("ArithLineBundle is immutable")

    @property
    def order(self):
        return self.line.order

    def as_bundle(self):
        """The same data seen as a rank-one metrized bundle."""
        e = TwistSum.single(self.line.module, self.line.twist)
        return ArithBundle(e, AutData({self.line.twist: self.beta},
                                      describe={"kind": "line beta"}))

    def __repr__(self):
        return f"ArithLineBundle({self.line!r})"


class OmegaChoice:
    """A fixed automorphism of the realified dualizing lattice."""

    __slots__ = ("order", "alpha")

    def __init__(self, order, alpha=None, tol=1e-9):
        dual_mod = dualizing_object(order).right_module()
        if alpha is None:
            alpha = num_identity(dual_mod.ambient_rank())
        else:
            alpha = num_rows(alpha)
        check_right_automorphism(dual_mod.underlying, dual_mod.rho, alpha,
                                 tol=tol)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "alpha", alpha)

    def __setattr__(self, name, value):
        raise AttributeError("OmegaChoice is immutable")

    def __repr__(self):
        return f"OmegaChoice(order={self.order!r})"


def trivial_line(order):
    """The trivial metrized line (R, 0) with the identity metric."""
    return ArithLineBundle(regular_line(order))


def omega_bundle(w):
    """The metrized dualizing bundle: (dual lattice, -2) with alpha."""
    e = dualizing_object(w.order).as_twist_sum()
    return ArithBundle(e, AutData({-2: w.alpha}, describe={"kind": "alpha"}))


# ---------------------------------------------------------------------------
# determinant of cohomology


def det_hom_ext(lb, eb, w, tol=1e-9):
    """The two determinant lines of the cohomology of Hom(L, E).

    The Hom line carries det of F -> gamma o F o beta^{-1} on degree 0; the
    Ext line carries the degree-1 determinant divided by the determinant of
    post-composition with alpha on the maps to the dualizing object, which
    makes the pair compatible with duality.
    """
    if lb.order != eb.order or w.order != lb.order:
        raise ValueError("bundles and omega choice live over different orders")
    hom_part, ext_part = hom_ext_qgr(lb.line, eb.e_sum)
    beta_inv = check_right_automorphism(
        lb.line.module.underlying, lb.line.module.rho, lb.beta, tol=tol)
    eb.gamma.validate_on(eb.e_sum, tol=tol)
    t_hom = _induced_det_from_parts(hom_part, eb.e_sum, beta_inv, eb.gamma, tol)
    t_ext = _induced_det_from_parts(ext_part, eb.e_sum, beta_inv, eb.gamma, tol)
    tinv = twist_inverse(lb.line, eb.e_sum)
    alpha_det = postcomposition_det_on_dual_homs(tinv, w.alpha, tol=tol)
    det_hom = DetLine(Fraction(1, hom_part.group.torsion_order()), t_hom)
    det_ext = DetLine(Fraction(1, ext_part.group.torsion_order()),
                      _div(t_ext, alpha_det))
    return det_hom, det_ext


def lambda_line(lb, eb, w, tol=1e-9):
    """Determinant of cohomology: det Hom tensor (det Ext)^{-1}."""
    det_hom, det_ext = det_hom_ext(lb, eb, w, tol=tol)
    return det_hom.tensor(det_ext.inverse())


def _log_value(v):
    if _is_exact(v):
        if Fraction(v) == 1:
            return 0.0
        return log_fraction(Fraction(v))
    return math.log(float(v))


def intersection(lb, eb, w, tol=1e-9):
    """Intersection bundle and number of a metrized line with a bundle.

    bundle = lambda(L,E) (x) lambda(L,A)^-1 (x) lambda(A,E)^-1 (x) lambda(A,A)
    with A the trivial line; the number is minus its degree, which makes
    intersecting against the trivial bundle give 0.
    """
    triv = trivial_line(lb.order)
    l_e = lambda_line(lb, eb, w, tol=tol)
    l_a = lambda_line(lb, triv.as_bundle(), w, tol=tol)
    a_e = lambda_line(triv, eb, w, tol=tol)
    a_a = lambda_line(triv, triv.as_bundle(), w, tol=tol)
    bundle = l_e.tensor(l_a.inverse()).tensor(a_e.inverse()).tensor(a_a)
    values = [x.value() for x in (l_e, l_a, a_e, a_a)]
    if all(_is_exact(v) for v in values):
        ratio = Fraction(values[0]) * Fraction(values[3]) / (
            Fraction(values[1]) * Fraction(values[2]))
        number = 0.0 if ratio == 1 else log_fraction(ratio)
    else:
        number = (_log_value(values[0]) - _log_value(values[1])
                  - _log_value(values[2]) + _log_value(values[3]))
    return bundle, number


def euler_characteristic(eb, w, tol=1e-9):
    """chi of a metrized bundle: degree of its determinant of cohomology
    against the trivial line."""
    return lambda_line(trivial_line(eb.order), eb, w, tol=tol).adeg()


def _warn_unless_simple(order, assert_simple):
    if not is_simple_real_algebra(order, user_asserted=assert_simple):
        warnings.warn(
            f"real algebra of {order!r} is not certified simple; "
            f"theorem residuals may be nonzero", SimplicityNotCertified,
            stacklevel=3)


def duality_residual(lb, w, tol=1e-9, assert_simple=False):
    """Degree mismatch in the duality comparison; 0 when the theorem applies.

    Compares adeg lambda(L, omega-bar) with adeg lambda(A-bar, L), both with
    the same alpha correction.  Exact rational inputs yield exact 0.0 on
    success.
    """
    _warn_unless_simple(lb.order, assert_simple)
    triv = trivial_line(lb.order)
    v_lw = lambda_line(lb, omega_bundle(w), w, tol=tol).value()
    v_al = lambda_line(triv, lb.as_bundle(), w, tol=tol).value()
    if _is_exact(v_lw) and _is_exact(v_al):
        ratio = Fraction(v_al) / Fraction(v_lw)
        return 0.0 if ratio == 1 else log_fraction(ratio)
    return math.log(float(v_al)) - math.log(float(v_lw))


def rr_residual(lb, w, tol=1e-9, assert_simple=False):
    """Riemann-Roch defect chi(L) - ((L,L) - (L,omega))/2 - chi(A); 0 when
    the theorem applies.

    After formal cancellation the residual only needs five determinant
    values; with rational input it reduces to checking one exact identity
    of fractions, returning exact 0.0 on success.
    """
    _warn_unless_simple(lb.order, assert_simple)
    triv = trivial_line(lb.order)
    w_bundle = omega_bundle(w)
    v_aa = lambda_line(triv, triv.as_bundle(), w, tol=tol).value()
    v_al = lambda_line(triv, lb.as_bundle(), w, tol=tol).value()
    v_ll = lambda_line(lb, lb.as_bundle(), w, tol=tol).value()
    v_lw = lambda_line(lb, w_bundle, w, tol=tol).value()
    v_aw = lambda_line(triv, w_bundle, w, tol=tol).value()
    vals = (v_aa, v_al, v_ll, v_lw, v_aw)
    if all(_is_exact(v) for v in vals):
        q1 = Fraction(v_aa) / Fraction(v_al)
        q2 = (Fraction(v_ll) * Fraction(v_aw)) / (Fraction(v_al) * Fraction(v_lw))
        if q2 == q1 * q1:
            return 0.0
        return log_fraction(q1) - log_fraction(q2) / 2
    lv = [_log_value(v) for v in vals]
    return (lv[0] - lv[1]) - ((lv[2] + lv[4]) - (lv[1] + lv[3])) / 2
