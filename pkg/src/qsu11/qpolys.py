"""Polynomial families and eigenfunction series attached to the operators.

Every family is available through two independent routes: its three-term
recurrence (vectorized over the argument) and an explicit terminating
basic hypergeometric sum.  Overlap coefficients of the four operator kinds
and the Taylor coefficients of their closed product eigenfunctions are
built on top of these.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from .qcore import (
    HyperSpec,
    QBase,
    basic_hyper,
    euler_coeffs,
    inv_euler_coeffs,
    lattice_index,
    q_pochhammer,
    q_pochhammer_inf,
    qvalue,
    series_coeffs,
)

FAMILY_TAGS = (
    "laguerre_classical",
    "cont_q_laguerre",
    "little_q_laguerre",
    "q_laguerre",
    "asc_dual",
    "phi31",
)
OP_KINDS = ("I1", "I1_phi", "I2_psi", "I3", "I3_psi", "I4_psi")
PHASED_KINDS = ("I1_phi", "I2_psi", "I3_psi", "I4_psi")

# Forms of the little q-Laguerre generating function.
GF_FORMS = ("pochhammer_phi20", "ratio_phi21")


@dataclass(frozen=True)
class RepParams:
    """Representation data: q, lowest weight l, phase psi and the scale c."""

    base: QBase
    l: float
    psi: float = 0.0
    c: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.base, QBase):
            object.__setattr__(self, "base", QBase(self.base))
        if not self.l > 0:
            raise ValueError("l must be positive")
        if not 0.0 <= self.psi < 2 * math.pi:
            raise ValueError("psi must lie in [0, 2*pi)")
        if self.c is not None and not self.c > 0:
            raise ValueError("c must be positive")

    @property
    def q(self) -> float:
        return self.base.q


@dataclass(frozen=True)
class PolyFamily:
    """A polynomial family tag with its parameter (alpha, or a for the little/dual families)."""

    tag: str
    alpha_or_a: float

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS:
            raise ValueError(f"unknown family {self.tag!r}")
        p = self.alpha_or_a
        if self.tag in ("little_q_laguerre", "asc_dual"):
            if not p > 0:
                raise ValueError("family parameter a must be positive")
        elif not p > -1:
            raise ValueError("family parameter alpha must exceed -1")

    def check_base(self, base) -> None:
        if self.tag in ("little_q_laguerre", "asc_dual") and not self.alpha_or_a < 1 / qvalue(base):
            raise ValueError("family parameter a must be below 1/q")


@dataclass(frozen=True)
class SpectralPoint:
    """An eigenvalue with its equivalent parametrizations.

    ``nu`` is the natural polynomial argument: cos(theta) for I1, the
    scaled eigenvalue 2(1-q)lambda for I3 and cosh(theta) for I4.  For I2
    the lattice exponent ``y`` with q^y = (1-q^{-1})lambda is used instead.
    """

    op_kind: str
    lam: float
    nu: complex
    theta: complex
    y: float


def _kind_base(kind: str) -> str:
    return {"I1_phi": "I1", "I2_psi": "I2", "I3_psi": "I3", "I4_psi": "I4"}.get(kind, kind)


def spectral_point(op_kind: str, lam: float, params: RepParams) -> SpectralPoint:
    """Build the point for eigenvalue ``lam`` of operator ``op_kind``."""
    if op_kind not in OP_KINDS:
        raise ValueError(f"unknown operator kind {op_kind!r}")
    q = params.q
    base = _kind_base(op_kind)
    nan = float("nan")
    if base == "I1":
        nu = 1 - (q ** -0.5 - q ** 0.5) * lam
        return SpectralPoint(op_kind, lam, nu, cmath.acos(nu), nan)
    if base == "I2":
        v = (1 - 1 / q) * lam
        if not v > 0:
            raise ValueError("I2 points need lambda*(1-1/q) > 0")
        return SpectralPoint(op_kind, lam, v, nan, math.log(v) / math.log(q))
    if base == "I3":
        nu = 2 * (1 - q) * lam
        y = math.log(nu / params.c) / math.log(q) if params.c and nu > 0 else nan
        return SpectralPoint(op_kind, lam, nu, nan, y)
    nu = -lam / 2
    return SpectralPoint(op_kind, lam, nu, cmath.acosh(nu), nan)


def point_from_theta(op_kind: str, theta: complex, params: RepParams) -> SpectralPoint:
    """Build an I1 or I4 point from its angle (cos or cosh parametrization)."""
    q = params.q
    base = _kind_base(op_kind)
    if base == "I1":
        nu = cmath.cos(theta)
        lam = (1 - nu) / (q ** -0.5 - q ** 0.5)
    elif base == "I4":
        nu = cmath.cosh(theta)
        lam = -2 * nu
    else:
        raise ValueError("theta parametrizes only I1 and I4 kinds")
    lam_r = lam.real if abs(lam.imag) < 1e-12 * max(1.0, abs(lam)) else lam
    return SpectralPoint(op_kind, lam_r, nu, complex(theta), float("nan"))


def point_from_y(y: float, params: RepParams, op_kind: str = "I2_psi") -> SpectralPoint:
    """I2 point on the lattice exponent y, lambda = q^y / (1 - 1/q)."""
    q = params.q
    return SpectralPoint(op_kind, q ** y / (1 - 1 / q), q ** y, float("nan"), y)


def check_point(pt: SpectralPoint, params: RepParams, tol: float = 1e-10) -> None:
    """Raise ValueError if the point's fields disagree with its parameter map."""
    if pt.op_kind not in OP_KINDS:
        raise ValueError(f"unknown operator kind {pt.op_kind!r}")
    q = params.q
    base = _kind_base(pt.op_kind)
    if base == "I1":
        want = 1 - (q ** -0.5 - q ** 0.5) * pt.lam
        ok = abs(pt.nu - want) <= tol * max(1, abs(want))
    elif base == "I2":
        want = (1 - 1 / q) * pt.lam
        ok = want > 0 and abs(q ** pt.y - want) <= tol * max(1, abs(want))
    elif base == "I3":
        want = 2 * (1 - q) * pt.lam
        ok = abs(pt.nu - want) <= tol * max(1, abs(want))
    else:
        want = -pt.lam / 2
        ok = abs(pt.nu - want) <= tol * max(1, abs(want))
    if not ok:
        raise ValueError(f"spectral point is inconsistent with kind {pt.op_kind}")


def basis_normalizer(n: int, params: RepParams) -> float:
    """c_n with c_n^2 = q^{(1-2l)n/2} (q^{2l};q)_n / (q;q)_n."""
    q, l = params.q, params.l
    return q ** ((1 - 2 * l) * n / 4) * math.sqrt(
        q_pochhammer(q ** (2 * l), q, n) / q_pochhammer(q, q, n))


# ---------------------------------------------------------------- recurrences

def _recurrence(tag: str, p: float, n: int, x, q: float, one):
    """All values P_0..P_n of the family's three-term recurrence.

    ``x`` may be a scalar, an array or a numpy Polynomial; ``one`` is the
    matching unit element.
    """
    vals = [one]
    prev = 0 * one
    cur = one
    for k in range(n):
        if tag == "laguerre_classical":
            nxt = ((2 * k + p + 1 - x) * cur - (k + p) * prev) / (k + 1)
        elif tag == "cont_q_laguerre":
            a = q ** ((2 * p + 1) / 4)
            b = q ** ((2 * p + 3) / 4)
            nxt = a * ((2 * x - (a + b) * q ** k) * cur - a * (1 - q ** (p + k)) * prev) / (1 - q ** (k + 1))
        elif tag == "little_q_laguerre":
            A = q ** k * (1 - p * q ** (k + 1))
            C = p * q ** k * (1 - q ** k)
            nxt = ((A + C - x) * cur - C * prev) / A
        elif tag == "q_laguerre":
            B = (1 - q ** (k + 1)) + q * (1 - q ** (k + p))
            nxt = ((B - q ** (2 * k + p + 1) * x) * cur - q * (1 - q ** (k + p)) * prev) / (1 - q ** (k + 1))
        elif tag == "asc_dual":
            nxt = (((1 + p) - q ** k * x) * cur - (1 - q ** k) * prev) / p
        elif tag == "phi31":
            u = -2 * q ** ((p + 2) / 2) * x
            nxt = (q ** k * u * cur - q * (1 - q ** (p + k)) * prev) / (1 - q ** (k + 1))
        else:
            raise ValueError(f"unknown family {tag!r}")
        prev, cur = cur, nxt
        vals.append(cur)
    return vals


def _exact_phi(upper, lower, z, q, n_terms: int) -> Fraction:
    r"""Terminating ${}_r\phi_s$ summed exactly in rational arithmetic.

    All inputs are Fractions (exact images of the float arguments) and so
    is the result; callers round once, at the very end.
    """
    e = 1 + len(lower) - len(upper)
    term = Fraction(1)
    total = term
    qk = Fraction(1)
    for _ in range(n_terms):
        num = Fraction(1)
        for a in upper:
            num *= 1 - a * qk
        den = 1 - qk * q
        for b in lower:
            den *= 1 - b * qk
        term = term * num / den * z
        if e:
            term *= (-qk) ** e
        total += term
        qk *= q
    return total


def _poch_exact(a, q, n: int) -> Fraction:
    p = Fraction(1)
    qk = Fraction(1)
    for _ in range(n):
        p *= 1 - a * qk
        qk *= q
    return p


def _explicit_real(tag: str, p: float, n: int, x: float, q: float) -> float:
    """Explicit routes of the real-parameter families, summed exactly."""
    Q, P, X = Fraction(q), Fraction(p), Fraction(x)
    if tag == "laguerre_classical":
        term = Fraction(1)
        total = term
        for k in range(n):
            term *= Fraction(k - n) / ((P + 1 + k) * (k + 1)) * X
            total += term
        pre = Fraction(1)
        for k in range(n):
            pre *= (P + 1 + k) / (k + 1)
        return float(pre * total)
    if tag == "little_q_laguerre":
        m = lattice_index(1 / x, q) if x != 0 else None
        if m is not None:
            # On the lattice x = q^m the dual terminating form is exact in q.
            num = _exact_phi([Q ** -n, Q ** -m], [], Q ** m / P, Q, min(n, m))
            return float(num / _poch_exact(Q ** -n / P, Q, n))
        return float(_exact_phi([Q ** -n, 0], [P * Q], Q * X, Q, n))
    if tag == "q_laguerre":
        qa = Fraction(q ** (p + 1))
        pre = _poch_exact(qa, Q, n) / _poch_exact(Q, Q, n)
        return float(pre * _exact_phi([Q ** -n], [qa], -(Q ** n) * qa * X, Q, n))
    if tag == "asc_dual":
        m = lattice_index(x, q)
        if m is not None:
            return float(_exact_phi([Q ** -n, Q ** -m], [], Q ** n / P, Q, min(n, m)))
        return float(_exact_phi([Q ** -n, X], [], Q ** n / P, Q, n))
    raise ValueError(f"unknown family {tag!r}")


def _explicit(tag: str, p: float, n: int, x, q: float) -> complex:
    """Explicit terminating-sum route of the family at a single argument."""
    base = QBase(q)
    x = complex(x)
    if tag in ("laguerre_classical", "little_q_laguerre", "q_laguerre", "asc_dual") and x.imag == 0:
        return complex(_explicit_real(tag, p, n, x.real, q))
    if tag == "laguerre_classical":
        term = 1 + 0j
        total = term
        for k in range(n):
            term *= (k - n) / ((p + 1 + k) * (k + 1)) * x
            total += term
        pre = 1.0
        for k in range(n):
            pre *= (p + 1 + k) / (k + 1)
        return pre * total
    if tag == "cont_q_laguerre":
        e = x + 1j * cmath.sqrt(1 - x * x)
        pre = (q_pochhammer(q ** ((2 * p + 3) / 4) / e, q, n) / q_pochhammer(q, q, n)
               * q ** ((2 * p + 1) * n / 4) * e ** n)
        spec = HyperSpec([q ** -n, q ** ((2 * p + 1) / 4) * e],
                         [q ** (-n - (2 * p - 1) / 4) * e],
                         q ** (-(2 * p - 1) / 4) / e, base)
        return pre * basic_hyper(spec)
    if tag == "little_q_laguerre":
        return basic_hyper(HyperSpec([q ** -n, 0], [p * q], q * x, base))
    if tag == "q_laguerre":
        pre = q_pochhammer(q ** (p + 1), q, n) / q_pochhammer(q, q, n)
        return pre * basic_hyper(HyperSpec([q ** -n], [q ** (p + 1)], -q ** (n + p + 1) * x, base))
    if tag == "asc_dual":
        return basic_hyper(HyperSpec([q ** -n, x], [], q ** n / p, base))
    if tag == "phi31":
        l = (p + 1) / 2
        et = x + cmath.sqrt(x * x - 1)
        pre = (-1j) ** n * q ** (n / 2) * q_pochhammer(q ** (2 * l), q, n) / q_pochhammer(q, q, n)
        spec = HyperSpec([q ** -n, -1j * q ** l * et, -1j * q ** l / et], [q ** (2 * l)],
                         -q ** n, base)
        return pre * basic_hyper(spec)
    raise ValueError(f"unknown family {tag!r}")


def eval_poly(family: PolyFamily, n: int, arg, base, route: str = "recurrence"):
    """Degree-n member of ``family`` at ``arg`` (scalar or array).

    Natural arguments: x for the Laguerre, little q-Laguerre and dual
    families, y = cos(theta) for continuous q-Laguerre and cosh(theta) for
    the phi31 family.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    q = qvalue(base)
    family.check_base(q)
    p = family.alpha_or_a
    if route == "recurrence":
        x = np.asarray(arg)
        one = np.ones_like(x, dtype=np.result_type(x.dtype, float))
        with np.errstate(over="raise", invalid="raise"):
            try:
                val = _recurrence(family.tag, p, n, x, q, one)[n]
            except FloatingPointError as exc:
                raise OverflowError("recurrence overflowed; reduce n") from exc
        return val[()] if np.ndim(val) == 0 else val
    if route == "explicit":
        if np.ndim(arg) == 0:
            return _explicit(family.tag, p, n, arg, q)
        flat = [_explicit(family.tag, p, n, v, q) for v in np.ravel(arg)]
        return np.asarray(flat).reshape(np.shape(arg))
    raise ValueError("route must be 'recurrence' or 'explicit'")


def eval_poly_all(family: PolyFamily, n_max: int, arg, base) -> np.ndarray:
    """Recurrence values for degrees 0..n_max, shape (n_max+1,) + shape(arg)."""
    q = qvalue(base)
    family.check_base(q)
    x = np.asarray(arg)
    one = np.ones_like(x, dtype=np.result_type(x.dtype, float))
    return np.array(_recurrence(family.tag, family.alpha_or_a, n_max, x, q, one))


def family_polynomial(family: PolyFamily, n: int, base, argument=None) -> Polynomial:
    """Power-basis form of the degree-n member, obtained from its recurrence.

    ``argument`` is an optional affine Polynomial substituted for the
    natural variable.
    """
    x = Polynomial([0.0, 1.0]) if argument is None else argument
    return _recurrence(family.tag, family.alpha_or_a, n, x, qvalue(base), Polynomial([1.0]))[n]


# ---------------------------------------------------------------- overlaps

def _ratio_sqrt(num_a: float, den_a: float, q: float, n: int) -> float:
    return math.sqrt(q_pochhammer(num_a, q, n) / q_pochhammer(den_a, q, n))


def kind_family(kind: str, params: RepParams) -> PolyFamily:
    """The polynomial family behind an operator kind's overlap coefficients."""
    q, l = params.q, params.l
    base = _kind_base(kind)
    if base == "I1":
        return PolyFamily("cont_q_laguerre", 2 * l - 1)
    if base == "I2":
        return PolyFamily("little_q_laguerre", q ** (2 * l - 1))
    if base == "I3":
        return PolyFamily("q_laguerre", 2 * l - 1)
    if base == "I4":
        return PolyFamily("phi31", 2 * l - 1)
    raise ValueError(f"no overlap family for kind {kind!r}")


def overlap_scale(kind: str, n: int, params: RepParams) -> float:
    """Normalization turning the family polynomial into the overlap coefficient (phase excluded)."""
    q, l = params.q, params.l
    base = _kind_base(kind)
    if base == "I1":
        return q ** ((0.25 - l) * n) * _ratio_sqrt(q, q ** (2 * l), q, n)
    if base == "I2":
        return _ratio_sqrt(q ** (2 * l), q, q, n) * q ** (-l * n)
    if base == "I3":
        return q ** (n / 2) * _ratio_sqrt(q, q ** (2 * l), q, n)
    if base == "I4":
        return _ratio_sqrt(q, q ** (2 * l), q, n)
    raise ValueError(f"no overlap for kind {kind!r}")


def natural_argument(kind: str, lam, params: RepParams):
    """Map eigenvalue(s) to the family's natural argument."""
    q = params.q
    base = _kind_base(kind)
    if base == "I1":
        return 1 - (q ** -0.5 - q ** 0.5) * np.asarray(lam)
    if base == "I2":
        return (1 - 1 / q) * np.asarray(lam)
    if base == "I3":
        return 2 * (1 - q) * np.asarray(lam)
    if base == "I4":
        return -np.asarray(lam) / 2
    raise ValueError(f"unknown kind {kind!r}")


def overlap_values(kind: str, n_max: int, lam, params: RepParams, phase: bool = True) -> np.ndarray:
    """Overlap coefficients for degrees 0..n_max at eigenvalue(s) ``lam`` via recurrences."""
    fam = kind_family(kind, params)
    vals = eval_poly_all(fam, n_max, natural_argument(kind, lam, params), params.base)
    scale = np.array([overlap_scale(kind, n, params) for n in range(n_max + 1)])
    out = vals * scale.reshape((-1,) + (1,) * (vals.ndim - 1))
    if phase and kind in PHASED_KINDS and params.psi != 0:
        ph = np.exp(1j * params.psi * np.arange(n_max + 1))
        out = out * ph.reshape((-1,) + (1,) * (vals.ndim - 1))
    return out


def overlap_coeff(pt: SpectralPoint, n: int, params: RepParams) -> complex:
    """Normalized overlap coefficient of degree n at the spectral point ``pt``."""
    check_point(pt, params)
    fam = kind_family(pt.op_kind, params)
    base = _kind_base(pt.op_kind)
    arg = params.q ** pt.y if base == "I2" else pt.nu
    val = eval_poly(fam, n, arg, params.base) * overlap_scale(pt.op_kind, n, params)
    if pt.op_kind in PHASED_KINDS:
        val = val * cmath.exp(1j * n * params.psi)
    return complex(val)


def natural_affine(kind: str, q, one=1.0) -> tuple:
    """Coefficients (c0, c1) of the map lambda -> c0 + c1*lambda to the natural argument.

    ``q`` and ``one`` may be any real number type (float or Decimal).
    """
    base = _kind_base(kind)
    h = one / 2
    if base == "I1":
        return one, -(q ** -h - q ** h)
    if base == "I2":
        return 0 * one, one - one / q
    if base == "I3":
        return 0 * one, 2 * (one - q)
    if base == "I4":
        return 0 * one, -h
    raise ValueError(f"unknown kind {kind!r}")


def natural_argument_poly(kind: str, params: RepParams) -> Polynomial:
    """The affine map from the eigenvalue to the family's natural argument."""
    return Polynomial(list(natural_affine(kind, params.q)))


def overlap_poly(kind: str, n: int, params: RepParams) -> Polynomial:
    """Phase-free overlap coefficient as a polynomial in the eigenvalue."""
    arg = natural_argument_poly(kind, params)
    return family_polynomial(kind_family(kind, params), n, params.q, arg) * overlap_scale(kind, n, params)


# ---------------------------------------------------------------- eigenfunctions

def _conv(*series, n_max: int) -> np.ndarray:
    out = np.zeros(n_max + 1, dtype=complex)
    out[0] = 1
    for s in series:
        out = np.convolve(out, s[: n_max + 1])[: n_max + 1]
    return out


def i4_product_coeffs(theta: complex, params: RepParams, n_max: int,
                      exponents=None) -> np.ndarray:
    """Taylor coefficients of the I4 product eigenfunction.

    The numerator is (e^{i psi} q^{(2l+3)/4} e^{+-theta} x; q)_inf and the
    two denominator factors are (+-i e^{i psi} q^{e} x; q)_inf with the
    exponents ``e`` given in ``exponents`` (default (3-2l)/4 for both).
    """
    q, l = params.q, params.l
    if exponents is None:
        exponents = ((3 - 2 * l) / 4, (3 - 2 * l) / 4)
    ph = cmath.exp(1j * params.psi)
    et = cmath.exp(theta)
    A = ph * q ** ((2 * l + 3) / 4)
    return _conv(
        euler_coeffs(A * et, q, n_max),
        euler_coeffs(A / et, q, n_max),
        inv_euler_coeffs(1j * ph * q ** exponents[0], q, n_max),
        inv_euler_coeffs(-1j * ph * q ** exponents[1], q, n_max),
        n_max=n_max,
    )


def eigenfunction_coeffs(pt: SpectralPoint, n_max: int, params: RepParams) -> np.ndarray:
    """Taylor coefficients b_0..b_{n_max} of the closed-form eigenfunction.

    Products (ax;q)_inf and 1/(ax;q)_inf are expanded exactly by Euler's
    series and multiplied as truncated polynomials.
    """
    if n_max > 200:
        raise ValueError("n_max must not exceed 200")
    check_point(pt, params)
    q, l, psi = params.q, params.l, params.psi
    base = _kind_base(pt.op_kind)
    ph = cmath.exp(1j * psi)
    if base == "I1":
        e = cmath.exp(1j * pt.theta)
        b = _conv(
            euler_coeffs(q ** (l / 2), math.sqrt(q), n_max),
            inv_euler_coeffs(q ** ((1 - 2 * l) / 4) * e, q, n_max),
            inv_euler_coeffs(q ** ((1 - 2 * l) / 4) / e, q, n_max),
            n_max=n_max,
        )
    elif base == "I2":
        b = _conv(
            euler_coeffs(ph * q ** ((2 * l + 1) / 4), q, n_max),
            series_coeffs([q ** -pt.y, 0], [], ph * q ** (pt.y + (1 - 6 * l) / 4), q, n_max),
            n_max=n_max,
        )
        return b
    elif base == "I3":
        b = _conv(
            inv_euler_coeffs(q ** ((3 - 2 * l) / 4), q, n_max),
            series_coeffs([-pt.nu], [0], q ** ((3 + 6 * l) / 4), q, n_max),
            n_max=n_max,
        )
    else:
        return i4_product_coeffs(pt.theta, params, n_max)
    if pt.op_kind in PHASED_KINDS:
        b = b * np.exp(1j * psi * np.arange(n_max + 1))
    return b


# ---------------------------------------------------------------- generating functions

def generating_function_closed_form(family: PolyFamily, t: complex, x: complex, base,
                                    form: Optional[str] = None) -> complex:
    """Closed form of the family's generating function at (t, x).

    laguerre_classical: sum L_n t^n; cont_q_laguerre: sum P_n(x|q) t^n with
    x = cos(theta); q_laguerre: sum L_n(x;q) t^n; little_q_laguerre:
    sum (aq;q)_n/(q;q)_n p_n(x;a|q) t^n in one of ``GF_FORMS``.
    """
    q = qvalue(base)
    qb = QBase(q)
    p = family.alpha_or_a
    t = complex(t)
    x = complex(x)
    if family.tag == "laguerre_classical":
        return (1 - t) ** (-p - 1) * cmath.exp(-x * t / (1 - t))
    if family.tag == "cont_q_laguerre":
        e = x + 1j * cmath.sqrt(1 - x * x)
        a = q ** (p / 2 + 0.25)
        num = q_pochhammer_inf(q ** (p + 0.5) * t, qb) * q_pochhammer_inf(q ** (p + 1) * t, qb)
        den = q_pochhammer_inf(a * e * t, qb) * q_pochhammer_inf(a / e * t, qb)
        return num / den
    if family.tag == "q_laguerre":
        return basic_hyper(HyperSpec([-x], [0], q ** (p + 1) * t, qb)) / q_pochhammer_inf(t, qb)
    if family.tag == "little_q_laguerre":
        form = form or GF_FORMS[0]
        if form == "pochhammer_phi20":
            return q_pochhammer_inf(p * q * t, qb) * basic_hyper(HyperSpec([1 / x, 0], [], x * t, qb))
        if form == "ratio_phi21":
            ratio = q_pochhammer_inf(p * q * t, qb) / q_pochhammer_inf(t, qb)
            return ratio * basic_hyper(HyperSpec([0, 0], [q / t], q * x, qb))
        raise ValueError(f"unknown form {form!r}")
    raise ValueError(f"no generating function for family {family.tag!r}")


def generating_function_series(family: PolyFamily, t: complex, x: complex, base,
                               tol: float = 1e-17, n_cap: int = 4000) -> tuple[complex, int]:
    """Partial sums of the coefficient series until the terms are negligible."""
    q = qvalue(base)
    t = complex(t)
    fam = family
    total = 0j
    # Lattice arguments defeat the recurrence; use the exact sums there.
    exact = (family.tag == "little_q_laguerre" and complex(x) != 0
             and lattice_index(1 / complex(x), q) is not None)
    n_have = 64
    vals = np.zeros(n_have + 1, dtype=complex) if exact else \
        eval_poly_all(fam, n_have, np.asarray(complex(x)), q)
    weight = 1 + 0j
    quiet = 0
    for n in range(n_cap):
        if n > n_have:
            n_have *= 2
            vals = np.resize(vals, n_have + 1) if exact else \
                eval_poly_all(fam, n_have, np.asarray(complex(x)), q)
        if exact:
            vals[n] = eval_poly(fam, n, complex(x), q, route="explicit")
        if family.tag == "little_q_laguerre":
            if n:
                weight *= (1 - fam.alpha_or_a * q ** n) / (1 - q ** n)
            term = weight * vals[n] * t ** n
        else:
            term = vals[n] * t ** n
        total += term
        if abs(term) <= tol * max(abs(total), 1e-300):
            quiet += 1
            if quiet >= 5:
                return complex(total), n + 1
        else:
            quiet = 0
    raise RuntimeError("generating series did not settle")


def generating_function_check(family: PolyFamily, t: complex, x: complex, base,
                              form: Optional[str] = None) -> float:
    """Relative residual between the coefficient series and the closed form."""
    if abs(t) >= 1:
        raise ValueError("generating series requires |t| < 1")
    if t == 0:
        return 0.0
    closed = generating_function_closed_form(family, t, x, base, form)
    series, _ = generating_function_series(family, t, x, base)
    return abs(series - closed) / max(1.0, abs(closed))


# ---------------------------------------------------------------- dual actions

def dual_action_residual(op_kind: str, k: int, params: RepParams,
                         pt: Optional[SpectralPoint] = None, n_max: int = 15) -> float:
    """Residual of the three-term difference identity in the spectral variable.

    I2: q^{-n-l} p_n(q^y) = -q^{l-y-1} p_n(q^{y+1}) + q^{-l}(1-q^{-y}) p_n(q^{y-1})
    + q^{-y}(q^{l-1}+q^{-l}) p_n(q^y) for the little q-Laguerre p_n with
    a = q^{2l-1}.  I3: q^n y L_n(y) = (1+y) L_n(qy) - (q^{1-2l}+1) L_n(y)
    + q^{1-2l} L_n(y/q) for the q-Laguerre L_n with alpha = 2l-1.

    The spectral variable comes from ``pt`` when given, otherwise from the
    dual-basis index k (y = k for I2, y = c q^k for I3).  Returns the
    maximum relative residual over degrees n <= n_max.
    """
    q, l = params.q, params.l
    kind = _kind_base(op_kind)
    if kind == "I2":
        if pt is None and k < 0:
            raise ValueError("I2 dual-basis index must be nonnegative")
        y = pt.y if pt is not None else float(k)
        fam = PolyFamily("little_q_laguerre", q ** (2 * l - 1))
        pts = [q ** y, q ** (y + 1), q ** (y - 1)]
        if float(y).is_integer():
            # Lattice points: the recurrence cancels catastrophically there.
            vals = np.array([[eval_poly(fam, n, x, q, route="explicit").real for x in pts]
                             for n in range(n_max + 1)])
        else:
            vals = eval_poly_all(fam, n_max, np.array(pts), q)
        n = np.arange(n_max + 1)
        lhs = q ** (-n - l) * vals[:, 0]
        terms = np.stack([
            -q ** (l - y - 1) * vals[:, 1],
            q ** -l * (1 - q ** -y) * vals[:, 2],
            q ** -y * (q ** (l - 1) + q ** -l) * vals[:, 0],
        ])
    elif kind == "I3":
        if pt is not None:
            y = float(np.real(pt.nu))
        else:
            if params.c is None:
                raise ValueError("I3 dual index needs the scale c")
            y = params.c * q ** k
        fam = PolyFamily("q_laguerre", 2 * l - 1)
        pts = np.array([y, q * y, y / q])
        vals = eval_poly_all(fam, n_max, pts, q)
        n = np.arange(n_max + 1)
        s = q ** (1 - 2 * l)
        lhs = q ** n * y * vals[:, 0]
        terms = np.stack([(1 + y) * vals[:, 1], -(s + 1) * vals[:, 0], s * vals[:, 2]])
    else:
        raise ValueError("dual actions exist for I2 and I3 only")
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(terms).max(axis=0)))
    return float(np.max(np.abs(lhs - terms.sum(axis=0)) / scale))
