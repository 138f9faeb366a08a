"""Floating-point primitives of q-analysis.

q-brackets, finite and infinite q-Pochhammer symbols, the Jackson
q-exponential and a general basic hypergeometric series evaluator.
Everything here is a pure function of its arguments.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

LATTICE_TOL = 1e-12


class SeriesDivergenceError(ValueError):
    """A non-terminating series with a zero radius of convergence was requested."""


class SeriesConvergenceError(RuntimeError):
    """A series or product did not settle within ``max_terms``."""


class LowerParameterPoleError(ZeroDivisionError):
    """A lower parameter equals q^{-m} before the series terminates."""


@dataclass(frozen=True)
class QBase:
    """Deformation parameter, restricted to the open interval (0, 1)."""

    q: float

    def __post_init__(self):
        q = float(self.q)
        if not (0.0 < q < 1.0) or math.isnan(q):
            raise ValueError("q must lie in (0,1)")
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy shared by every series and product evaluator."""

    max_terms: int = 10000
    abs_tol: float = 1e-16
    rel_tol: float = 1e-14

    def __post_init__(self):
        if int(self.max_terms) < 1:
            raise ValueError("max_terms must be at least 1")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("at least one of abs_tol, rel_tol must be positive")


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class HyperSpec:
    r"""Parameters of ${}_r\phi_s(a_1..a_r; b_1..b_s; q, z)$."""

    upper: Sequence[complex]
    lower: Sequence[complex]
    argument: complex
    base: QBase

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(self.upper))
        object.__setattr__(self, "lower", tuple(self.lower))


def qvalue(base) -> float:
    """Return the numeric q of a :class:`QBase` or a plain float."""
    if isinstance(base, QBase):
        return base.q
    return QBase(base).q


def as_real(z, tol: float = 1e-10) -> float:
    """Drop an imaginary part that is roundoff relative to the value."""
    z = complex(z)
    if abs(z.imag) > tol * max(abs(z), 1e-300) and abs(z.imag) > 1e-300:
        raise ValueError(f"value {z!r} is not real to relative tolerance {tol}")
    return z.real


def q_bracket(a, base) -> float:
    """q-number [a]_q = (q^{a/2} - q^{-a/2}) / (q^{1/2} - q^{-1/2})."""
    q = qvalue(base)
    return (q ** (a / 2) - q ** (-a / 2)) / (q ** 0.5 - q ** -0.5)


def q_pochhammer(a, base, n: int):
    """Finite product (a;q)_n = (1-a)(1-aq)...(1-aq^{n-1})."""
    q = qvalue(base)
    if n < 0:
        raise ValueError("n must be nonnegative")
    p = 1.0
    qk = 1.0
    for _ in range(n):
        p *= 1 - a * qk
        qk *= q
    return p


def q_pochhammer_inf(a, base, ctl: SeriesControl = DEFAULT_CONTROL, nu=None):
    """Infinite product (a;q)_inf, or (a;q)_nu = (a;q)_inf / (aq^nu;q)_inf.

    Factors are multiplied until |a q^r| drops below ``ctl.abs_tol``.
    """
    q = qvalue(base)
    if nu is not None:
        return q_pochhammer_inf(a, base, ctl) / q_pochhammer_inf(a * q ** nu, base, ctl)
    p = 1.0
    term = a
    for _ in range(ctl.max_terms):
        if abs(term) < ctl.abs_tol:
            return p
        p *= 1 - term
        if p == 0:
            return p
        term *= q
    raise SeriesConvergenceError(f"(a;q)_inf did not converge in {ctl.max_terms} factors")


def q_exp_E(z, base, ctl: SeriesControl = DEFAULT_CONTROL):
    """Jackson q-exponential E_q(z) = (-z;q)_inf."""
    return q_pochhammer_inf(-z, base, ctl)


def lattice_index(a, base, tol: float = LATTICE_TOL):
    """Return n >= 0 if a equals q^{-n} within ``tol`` in log-q units, else None."""
    if a == 0:
        return None
    q = qvalue(base)
    m = cmath.log(complex(a)) / math.log(q)
    if abs(m.imag) > tol:
        return None
    n = round(-m.real)
    if n >= 0 and abs(m.real + n) <= tol:
        return int(n)
    return None


def termination_index(upper, base):
    """Smallest n with some upper parameter equal to q^{-n}, or None."""
    found = [n for n in (lattice_index(a, base) for a in upper) if n is not None]
    return min(found) if found else None


def basic_hyper(spec: HyperSpec, ctl: SeriesControl = DEFAULT_CONTROL, info: bool = False):
    r"""Evaluate ${}_r\phi_s$ in complex arithmetic.

    The k-th term carries the factor [(-1)^k q^{k(k-1)/2}]^{1+s-r}.
    A series with an upper parameter q^{-n} is summed exactly over its n+1
    terms.  With ``info=True`` returns ``(value, terms_used, terminated)``.
    """
    q = spec.base.q
    up = [complex(a) for a in spec.upper]
    lo = [complex(b) for b in spec.lower]
    z = complex(spec.argument)
    r, s = len(up), len(lo)
    e = 1 + s - r
    n_term = termination_index(up, spec.base)
    for b in lo:
        m = lattice_index(b, spec.base)
        if m is not None and (n_term is None or m < n_term):
            raise LowerParameterPoleError(f"lower parameter {b!r} equals q^-{m}")
    if z == 0:
        return (1 + 0j, 1, True) if info else 1 + 0j
    if n_term is None:
        if e < 0:
            raise SeriesDivergenceError(
                "non-terminating series with more than s+1 upper parameters diverges")
        if e == 0 and abs(z) >= 1:
            raise SeriesDivergenceError("non-terminating series requires |z| < 1")

    total = 1 + 0j
    term = 1 + 0j
    qk = 1.0
    small_run = 0
    limit = ctl.max_terms if n_term is None else n_term
    k = 0
    while k < limit:
        num = 1 + 0j
        for a in up:
            num *= 1 - a * qk
        den = 1 - qk * q
        for b in lo:
            den *= 1 - b * qk
        ratio = num / den * z
        if e:
            ratio *= (-qk) ** e
        term = term * ratio
        total += term
        k += 1
        qk *= q
        if n_term is None:
            if abs(term) <= max(ctl.abs_tol, ctl.rel_tol * abs(total)) and abs(ratio) < 1:
                small_run += 1
                if small_run >= 2:
                    break
            else:
                small_run = 0
    else:
        if n_term is None:
            raise SeriesConvergenceError(f"series did not converge in {ctl.max_terms} terms")
    if info:
        return total, k + 1, n_term is not None
    return total


def euler_coeffs(a, base, n_max: int) -> np.ndarray:
    """Taylor coefficients of x -> (ax;q)_inf up to degree ``n_max``.

    Uses (ax;q)_inf = sum_n (-1)^n q^{n(n-1)/2} a^n x^n / (q;q)_n.
    """
    q = qvalue(base)
    out = np.empty(n_max + 1, dtype=complex)
    c = 1 + 0j
    for n in range(n_max + 1):
        out[n] = c
        c = c * (-a) * q ** n / (1 - q ** (n + 1))
    return out


def inv_euler_coeffs(a, base, n_max: int) -> np.ndarray:
    """Taylor coefficients of x -> 1/(ax;q)_inf up to degree ``n_max``."""
    q = qvalue(base)
    out = np.empty(n_max + 1, dtype=complex)
    c = 1 + 0j
    for n in range(n_max + 1):
        out[n] = c
        c = c * a / (1 - q ** (n + 1))
    return out


def series_coeffs(spec_upper, spec_lower, scale, base, n_max: int) -> np.ndarray:
    r"""Taylor coefficients in x of ${}_r\phi_s(\ldots; q, scale\cdot x)$.

    Coefficient n is the n-th series term with argument ``scale``; no
    convergence of the series itself is needed, which is what makes this
    usable for formally divergent ${}_2\phi_0$ factors.
    """
    q = qvalue(base)
    up = [complex(a) for a in spec_upper]
    lo = [complex(b) for b in spec_lower]
    e = 1 + len(lo) - len(up)
    out = np.zeros(n_max + 1, dtype=complex)
    t = 1 + 0j
    qk = 1.0
    for k in range(n_max + 1):
        out[k] = t
        num = 1 + 0j
        for a in up:
            num *= 1 - a * qk
        den = 1 - qk * q
        for b in lo:
            den *= 1 - b * qk
        t = t * num / den * scale
        if e:
            t *= (-qk) ** e
        qk *= q
    return out
