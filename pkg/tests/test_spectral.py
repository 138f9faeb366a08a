import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsu11.operators import JacobiOperator, build_operator
from qsu11.qpolys import RepParams
from qsu11.spectral import (
    VERDICTS,
    deficiency_test,
    eigen_truncated,
    ladder_point,
    ladder_ratio,
    match_ladder,
    spectrum_report,
)


def jacobi(diag, off, kind="classical"):
    diag = np.asarray(diag, dtype=float)
    return JacobiOperator(kind, RepParams(0.5, 1.0), len(diag), diag, np.asarray(off, dtype=float),
                          "canonical")


# ---------------------------------------------------------------- eigen_truncated

def test_single_site():
    assert np.array_equal(eigen_truncated(jacobi([3.5], [])), [3.5])


@pytest.mark.parametrize("d,e", [(0.0, 1.0), (2.5, -0.75), (-1.0, 3.0)])
def test_two_by_two_closed_form(d, e):
    w = eigen_truncated(jacobi([d, d], [e]))
    assert np.allclose(w, [d - abs(e), d + abs(e)], atol=1e-15)


@given(seed=st.integers(0, 2 ** 20))
@settings(max_examples=40, deadline=None)
def test_random_against_dense_solver(seed):
    rng = np.random.default_rng(seed)
    op = jacobi(rng.standard_normal(12), rng.standard_normal(11))
    ref = np.linalg.eigvalsh(op.dense())
    assert np.max(np.abs(eigen_truncated(op) - ref)) < 1e-11


def test_eigenvectors_diagonalize():
    op = build_operator("I1", RepParams(0.5, 1.0), 30)
    w, v = eigen_truncated(op, vectors=True)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(op.dense() @ v - v * w)) < 1e-12 * op.norm()
    assert np.max(np.abs(v.T @ v - np.eye(30))) < 1e-12


def test_eigenvalues_deterministic():
    op = build_operator("I2_psi", RepParams(0.4, 1.2), 150)
    assert np.array_equal(eigen_truncated(op), eigen_truncated(op))


@pytest.mark.parametrize("kind", ["I1", "I2_psi", "I4_psi", "classical"])
def test_accuracy_relative_to_norm(kind):
    op = build_operator(kind, RepParams(0.6, 1.0), 60)
    ref = np.linalg.eigvalsh(op.dense())
    assert np.max(np.abs(eigen_truncated(op) - ref)) < 1e-12 * op.norm() * 10


# ---------------------------------------------------------------- invariants

@pytest.mark.parametrize("q", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("l", [0.6, 1.0, 2.0])
def test_i1_confined_to_interval(q, l):
    b = 2 * math.sqrt(q) / (1 - q)
    for N in (1, 2, 10, 50, 150, 400):
        w = eigen_truncated(build_operator("I1", RepParams(q, l), N))
        assert w[0] >= -1e-10 and w[-1] <= b + 1e-10


@pytest.mark.parametrize("kind", ["I1", "I1_phi", "I2_psi", "I4_psi", "classical"])
@pytest.mark.parametrize("N", [5, 20, 60])
def test_interlacing(kind, N):
    p = RepParams(0.5, 1.0, psi=0.3)
    small = eigen_truncated(build_operator(kind, p, N))
    big_op = build_operator(kind, p, N + 1)
    big = eigen_truncated(big_op)
    tol = 1e-12 * big_op.norm()
    assert np.all(big[:-1] <= small + tol) and np.all(small <= big[1:] + tol)


def i2_errors(dims, p, count=6):
    rows = []
    for N in dims:
        w = eigen_truncated(build_operator("I2_psi", p, N))
        rows.append([abs(w[n] - ladder_point(n, p)) for n in range(count)])
    return np.array(rows)


def test_i2_convergence_monotone_in_dimension():
    # At these sizes the low eigenvalues are already exact to the last bit, so
    # successive errors may only differ by one unit of roundoff.
    p = RepParams(0.5, 1.0)
    errs = i2_errors((50, 100, 200), p)
    ulp = np.array([np.spacing(abs(ladder_point(n, p))) for n in range(6)])
    assert np.all(errs[1:] <= errs[:-1] + ulp)
    assert np.all(errs < 4 * ulp)


def test_i2_convergence_strict_before_roundoff():
    p = RepParams(0.5, 1.0)
    errs = i2_errors((3, 4, 5, 6), p, count=3)
    assert np.all(errs[1:] < errs[:-1])


# ---------------------------------------------------------------- spectrum_report

def test_i1_report():
    rep = spectrum_report("I1", RepParams(0.5, 1.0), 300)
    assert rep.prediction["type"] == "interval"
    assert rep.max_violation < 1e-10
    assert rep.eigenvalues[-1] > 2.828427 - 1e-3
    assert rep.eigenvalues[0] < 1e-3
    assert np.all(np.diff(rep.eigenvalues) >= 0)


def test_i2_report_matches_ladder():
    p = RepParams(0.5, 1.0)
    rep = spectrum_report("I2_psi", p, 200)
    most_negative = rep.eigenvalues[:8]
    expected = [0.5 ** n / (1 - 1 / 0.5) for n in range(8)]
    assert np.max(np.abs(most_negative - expected)) < 1e-9
    assert all(err >= 0 for _, _, err in rep.matched_points)
    assert len(rep.matched_points) == 10


def test_i3_report_ratio():
    rep = spectrum_report("I3", RepParams(0.5, 1.0), 200)
    assert rep.prediction["type"] == "extension_dependent"
    assert abs(rep.ratio_estimate - 0.5) < 1e-3


def test_i3_report_ratio_is_square_of_base():
    # The finite-section ladder of I3 has ratio q^2.
    rep = spectrum_report("I3", RepParams(0.5, 1.0), 200)
    assert abs(rep.ratio_estimate - 0.25) < 5e-3


def test_report_validation():
    p = RepParams(0.5, 1.0)
    with pytest.raises(ValueError):
        spectrum_report("I1", p, 15)
    with pytest.raises(ValueError):
        spectrum_report("classical", p, 50)


def test_oversized_section_raises_overflow():
    with pytest.raises(OverflowError):
        spectrum_report("I3", RepParams(0.5, 1.0), 300)


def test_match_ladder_greedy():
    p = RepParams(0.5, 1.0)
    eigs = np.array([ladder_point(n, p) + 1e-3 * n for n in range(12)])
    out = match_ladder(eigs, p, count=5)
    assert [m[0] for m in out] == [ladder_point(n, p) for n in range(5)]


def test_ladder_ratio_geometric():
    eigs = -(0.3 ** np.arange(20))
    assert ladder_ratio(eigs) == pytest.approx(0.3, rel=1e-12)


# ---------------------------------------------------------------- deficiency_test

def test_i4_indices():
    v = deficiency_test("I4_psi", RepParams(0.5, 1.0), K=200)
    assert v.verdict == "indices_1_1" and v.logconcave_ok
    assert abs(v.ratio_limit - 0.5) < 1e-6


def test_i1_bounded_selfadjoint():
    assert deficiency_test("I1", RepParams(0.5, 1.0)).verdict == "bounded_selfadjoint"


def test_i2_bounded_selfadjoint():
    assert deficiency_test("I2_psi", RepParams(0.5, 1.0)).verdict == "bounded_selfadjoint"


def test_i3_indices():
    v = deficiency_test("I3", RepParams(0.5, 1.0), K=200)
    assert v.verdict == "indices_1_1"
    assert v.ratio_limit < 1


def test_classical_not_limit_circle():
    # sum 1/a_k diverges for a_k ~ k/2
    v = deficiency_test("classical", RepParams(0.5, 1.0))
    assert v.verdict == "inconclusive"


def test_deficiency_small_k_rejected():
    with pytest.raises(ValueError):
        deficiency_test("I4_psi", RepParams(0.5, 1.0), K=49)


@pytest.mark.parametrize("kind", ["I2_psi", "I4_psi", "I3_psi", "I1_phi"])
def test_verdict_independent_of_phase(kind):
    verdicts = {deficiency_test(kind, RepParams(0.5, 1.0, psi=psi)) .verdict
                for psi in (0.0, 1.0, math.pi)}
    assert len(verdicts) == 1 and verdicts <= set(VERDICTS)


@pytest.mark.parametrize("q", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("l", [0.6, 1.0, 2.0])
def test_i4_ratio_tracks_base(q, l):
    v = deficiency_test("I4_psi", RepParams(q, l), K=200)
    assert v.verdict == "indices_1_1"
    assert abs(v.ratio_limit - q) < 1e-6
