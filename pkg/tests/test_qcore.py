import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsu11.qcore import (
    HyperSpec,
    LowerParameterPoleError,
    QBase,
    SeriesControl,
    SeriesConvergenceError,
    SeriesDivergenceError,
    as_real,
    basic_hyper,
    euler_coeffs,
    inv_euler_coeffs,
    lattice_index,
    q_bracket,
    q_exp_E,
    q_pochhammer,
    q_pochhammer_inf,
    series_coeffs,
)


def direct_product(a, q, tol=1e-16):
    p = 1.0
    r = 0
    while abs(a * q ** r) >= tol or r < 200:
        p *= 1 - a * q ** r
        r += 1
    return p


# ---------------------------------------------------------------- QBase / SeriesControl

@pytest.mark.parametrize("q", [0.0, 1.0, -0.5, 1.5, float("nan")])
def test_qbase_rejects_outside_unit_interval(q):
    with pytest.raises(ValueError, match=r"q must lie in \(0,1\)"):
        QBase(q)


def test_series_control_validation():
    with pytest.raises(ValueError):
        SeriesControl(max_terms=0)
    with pytest.raises(ValueError):
        SeriesControl(abs_tol=0, rel_tol=0)
    with pytest.raises(ValueError):
        SeriesControl(abs_tol=-1)
    ctl = SeriesControl()
    assert (ctl.max_terms, ctl.abs_tol, ctl.rel_tol) == (10000, 1e-16, 1e-14)


# ---------------------------------------------------------------- q_bracket

def test_q_bracket_examples():
    assert q_bracket(0, 0.5) == 0
    assert q_bracket(1, 0.5) == pytest.approx(1, abs=1e-15)
    assert q_bracket(2, 0.25) == pytest.approx(2.5, abs=1e-14)


@pytest.mark.parametrize("q", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("a", [-2.5, 0.0, 0.7, 3.0, 10.0])
def test_q_bracket_symmetric_under_inverse_q(q, a):
    qi = 1 / q
    inverse_formula = (qi ** (a / 2) - qi ** (-a / 2)) / (qi ** 0.5 - qi ** -0.5)
    assert q_bracket(a, q) == pytest.approx(inverse_formula, rel=1e-13, abs=1e-13)


def test_q_bracket_tends_to_a_as_q_to_one():
    errs = [abs(q_bracket(3.3, 1 - 2.0 ** -j) - 3.3) for j in range(1, 12)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


# ---------------------------------------------------------------- q_pochhammer

def test_q_pochhammer_examples():
    assert q_pochhammer(0.77, 0.5, 0) == 1
    assert q_pochhammer(0.5, 0.5, 3) == pytest.approx(0.328125, rel=1e-15)
    lhs = q_pochhammer(0.3, 0.5, 5)
    rhs = q_pochhammer(0.3, 0.5, 2) * q_pochhammer(0.3 * 0.5 ** 2, 0.5, 3)
    assert lhs == pytest.approx(rhs, rel=1e-14)


def test_q_pochhammer_rejects_negative_n():
    with pytest.raises(ValueError):
        q_pochhammer(0.3, 0.5, -1)


@pytest.mark.parametrize("a", [0, 0.3, -0.3, 0.9j, -0.9j])
@pytest.mark.parametrize("q", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("m,n", [(0, 4), (3, 5), (7, 2), (10, 10)])
def test_q_pochhammer_splitting(a, q, m, n):
    lhs = q_pochhammer(a, q, m + n)
    rhs = q_pochhammer(a, q, m) * q_pochhammer(a * q ** m, q, n)
    assert abs(lhs - rhs) <= 1e-13 * abs(lhs)


@given(a=st.floats(-3, 3), q=st.floats(0.05, 0.95), m=st.integers(0, 15), n=st.integers(0, 15))
@settings(max_examples=200, deadline=None)
def test_q_pochhammer_splitting_property(a, q, m, n):
    lhs = q_pochhammer(a, q, m + n)
    rhs = q_pochhammer(a, q, m) * q_pochhammer(a * q ** m, q, n)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1e-300) + 1e-300


# ---------------------------------------------------------------- q_pochhammer_inf

def test_q_pochhammer_inf_examples():
    assert q_pochhammer_inf(0, 0.5) == 1
    assert q_pochhammer_inf(1, 0.5) == 0
    ref = direct_product(0.5, 0.5)
    assert q_pochhammer_inf(0.5, 0.5) == pytest.approx(ref, abs=1e-13)
    assert q_pochhammer_inf(0.5, 0.5) == pytest.approx(0.2887880951, abs=1e-10)


@pytest.mark.parametrize("a", [0.2, -0.7, 0.5 + 0.5j, 3.0])
@pytest.mark.parametrize("q", [0.3, 0.5, 0.8])
def test_q_pochhammer_inf_functional_equation(a, q):
    # (a;q)_inf = (1-a) (aq;q)_inf
    assert abs(q_pochhammer_inf(a, q) - (1 - a) * q_pochhammer_inf(a * q, q)) < 1e-13 * max(
        1, abs(q_pochhammer_inf(a, q)))


@pytest.mark.parametrize("n", [0, 1, 4, 9])
def test_generalized_pochhammer_matches_finite_at_integers(n):
    for a in (0.3, -0.4):
        assert q_pochhammer_inf(a, 0.6, nu=n) == pytest.approx(q_pochhammer(a, 0.6, n), rel=1e-13)


def test_generalized_pochhammer_splits_real_exponents():
    q, a = 0.5, 0.25
    lhs = q_pochhammer_inf(a, q, nu=2.7)
    rhs = q_pochhammer_inf(a, q, nu=1.2) * q_pochhammer_inf(a * q ** 1.2, q, nu=1.5)
    assert lhs == pytest.approx(rhs, rel=1e-13)


def test_q_pochhammer_inf_signals_non_convergence():
    with pytest.raises(SeriesConvergenceError):
        q_pochhammer_inf(0.5, 0.999, SeriesControl(max_terms=10))


# ---------------------------------------------------------------- q_exp_E

def test_q_exp_examples():
    assert q_exp_E(0, 0.5) == 1
    assert q_exp_E(-1, 0.5) == 0
    q, z = 0.5, 0.2
    series = sum(q ** (n * (n - 1) / 2) * z ** n / q_pochhammer(q, q, n) for n in range(80))
    assert q_exp_E(z, q) == pytest.approx(series, abs=1e-12)


# ---------------------------------------------------------------- lattice detection

def test_lattice_index():
    assert lattice_index(0.5 ** -7, 0.5) == 7
    assert lattice_index(1.0, 0.5) == 0
    assert lattice_index(0.5 ** 3, 0.5) is None
    assert lattice_index(3.0, 0.5) is None
    assert lattice_index(0, 0.5) is None


# ---------------------------------------------------------------- basic_hyper

def test_basic_hyper_zero_argument():
    spec = HyperSpec([0.3, 0.2], [0.7], 0, QBase(0.5))
    assert basic_hyper(spec) == 1


def test_basic_hyper_q_binomial_example():
    q, a, z = 0.5, 0.25, 0.3
    val = basic_hyper(HyperSpec([a], [], z, QBase(q)))
    ref = q_pochhammer_inf(a * z, q) / q_pochhammer_inf(z, q)
    assert abs(val - ref) < 1e-12


@pytest.mark.parametrize("a", [0.1, -0.6, 0.4 + 0.3j, 2.0])
@pytest.mark.parametrize("z", [0.05, -0.4, 0.7, 0.3j, -0.2 + 0.5j])
def test_basic_hyper_q_binomial_grid(a, z):
    q = 0.6
    val = basic_hyper(HyperSpec([a], [], z, QBase(q)))
    ref = q_pochhammer_inf(a * z, q) / q_pochhammer_inf(z, q)
    assert abs(val - ref) < 1e-11 * max(1, abs(ref))


def test_basic_hyper_two_term_termination():
    q, b, c, z = 0.5, 0.3, 0.7, 0.4
    val, used, terminated = basic_hyper(HyperSpec([1 / q, b], [c], z, QBase(q)), info=True)
    expected = 1 + (1 - 1 / q) * (1 - b) / ((1 - c) * (1 - q)) * z
    assert terminated and used == 2
    assert abs(val - expected) < 1e-15


@pytest.mark.parametrize("n", [0, 1, 5, 20, 50])
def test_terminating_series_exact_and_flagged(n):
    # q-Chu-Vandermonde: 2phi1(q^-n, b; c; q, c q^n / b) = (c/b;q)_n / (c;q)_n
    q, b, c = 0.7, 0.4, 0.9
    spec = HyperSpec([q ** -n, b], [c], c * q ** n / b, QBase(q))
    val, used, terminated = basic_hyper(spec, info=True)
    ref = q_pochhammer(c / b, q, n) / q_pochhammer(c, q, n)
    assert terminated and used == n + 1
    assert abs(val - ref) <= 1e-9 * max(1, abs(ref))


def test_basic_hyper_rejects_divergent_2phi0():
    with pytest.raises(SeriesDivergenceError):
        basic_hyper(HyperSpec([0.3, 0.4], [], 0.1, QBase(0.5)))


def test_basic_hyper_rejects_unit_argument_balanced():
    with pytest.raises(SeriesDivergenceError):
        basic_hyper(HyperSpec([0.3], [], 1.2, QBase(0.5)))


def test_basic_hyper_lower_pole():
    q = 0.5
    with pytest.raises(LowerParameterPoleError):
        basic_hyper(HyperSpec([0.3], [q ** -2], 0.1, QBase(q)))


def test_basic_hyper_max_terms():
    with pytest.raises(SeriesConvergenceError):
        basic_hyper(HyperSpec([0.3], [], 0.99, QBase(0.99)), SeriesControl(max_terms=5))


@given(a=st.floats(-0.9, 0.9), z=st.floats(-0.9, 0.9), q=st.floats(0.1, 0.9))
@settings(max_examples=100, deadline=None)
def test_q_binomial_property(a, z, q):
    val = basic_hyper(HyperSpec([a], [], z, QBase(q)))
    ref = q_pochhammer_inf(a * z, q) / q_pochhammer_inf(z, q)
    assert abs(val - ref) < 1e-11 * max(1, abs(ref))


# ---------------------------------------------------------------- Taylor coefficient helpers

def test_euler_coefficients_match_product():
    q, a, x = 0.5, 0.7, 0.3
    c = euler_coeffs(a, q, 60)
    assert abs(np.polyval(c[::-1], x) - q_pochhammer_inf(a * x, q)) < 1e-14
    ci = inv_euler_coeffs(a, q, 200)
    assert abs(np.polyval(ci[::-1], x) - 1 / q_pochhammer_inf(a * x, q)) < 1e-13


def test_series_coeffs_matches_basic_hyper():
    q = 0.5
    up, lo, scale, x = [0.3, -0.2], [0.6], 0.9, 0.5
    c = series_coeffs(up, lo, scale, q, 80)
    ref = basic_hyper(HyperSpec(up, lo, scale * x, QBase(q)))
    assert abs(np.polyval(c[::-1], x) - ref) < 1e-13 * abs(ref)


def test_as_real():
    assert as_real(2 + 1e-14j) == 2
    with pytest.raises(ValueError):
        as_real(1 + 1e-3j)


def test_complex_parameters_on_unit_circle():
    # |(e^{it};q)_inf|^2 is real and positive and matches the conjugate product
    q = 0.4
    e = cmath.exp(0.8j)
    v = q_pochhammer_inf(e, q) * q_pochhammer_inf(e.conjugate(), q)
    assert abs(v.imag) < 1e-14 and v.real > 0
    assert math.isclose(v.real, abs(q_pochhammer_inf(e, q)) ** 2, rel_tol=1e-14)
