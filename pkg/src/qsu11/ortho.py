"""Numerical certification of the orthogonality relations.

Five relations are available as Gram matrices (``gram_matrix``) and two
pairs of dual relations as row/column unitarity residuals of the
connection matrices between orthonormal bases (``unitarity_check``).
Continuous integrals are done in the angle variable with Gauss-Legendre
nodes and node doubling; discrete and bilateral sums are truncated by
magnitude.
"""
from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Optional

import numpy as np

from .qcore import q_pochhammer, q_pochhammer_inf
from .qpolys import PolyFamily, RepParams, eval_poly, eval_poly_all, overlap_values

RELATIONS = ("cont_qL_313", "little_qL_510", "qLaguerre_712", "asc_dual_514", "fk_719")
PAIRINGS = ("little_qL_vs_asc", "qL_vs_fk")
MAX_GRAM_NMAX = 20
DEFAULT_NODES = 64
MAX_DOUBLINGS = 7
QUAD_TOL = 1e-12
TAIL_TOL = 1e-17
MAX_TERMS = 5000
LATTICE_DIGITS = 100


class QuadratureError(RuntimeError):
    """Node doubling did not settle."""


class TailError(RuntimeError):
    """A truncated sum did not decay within the term budget."""


@dataclass(frozen=True)
class MeasureSpec:
    """Which relation to test and how to truncate it."""

    relation: str
    params: RepParams
    quadrature_nodes: int = DEFAULT_NODES
    k_range: Optional[tuple] = None
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        if self.quadrature_nodes < 1:
            raise ValueError("quadrature_nodes must be positive")
        if self.relation in ("qLaguerre_712", "fk_719") and self.params.c is None:
            raise ValueError(f"{self.relation} needs the scale c")


@dataclass(frozen=True)
class GramReport:
    """Gram matrix of a family against its measure, with residuals.

    ``max_offdiag`` is max |G_mn| / sqrt(G_mm G_nn) over m != n.
    ``max_diag_dev`` is max |G_nn / (fitted_constant * predicted_n) - 1|
    with ``fitted_constant = G_00 / predicted_0``.
    """

    relation: str
    n_max: int
    gram: np.ndarray
    predicted_diag: np.ndarray
    max_offdiag: float
    max_diag_dev: float
    fitted_constant: float
    truncation_terms_used: int
    quadrature_change: Optional[float] = None
    index_labels: tuple = ()


# ---------------------------------------------------------------- weights

def _poch_inf_vec(a: np.ndarray, base: float) -> np.ndarray:
    """(a; base)_inf for an array of complex a."""
    a = np.asarray(a, dtype=complex)
    p = np.ones_like(a)
    term = a.copy()
    for _ in range(MAX_TERMS):
        if np.max(np.abs(term)) < 1e-17:
            return p
        p = p * (1 - term)
        term = term * base
    raise TailError("infinite product did not settle")


def weight_w(theta, params: RepParams) -> np.ndarray:
    """w(cos theta) = |(e^{it};r)(-e^{it};r)/(q^{l-1/4} e^{it};r)|^2 with r = q^{1/2}."""
    q, l = params.q, params.l
    e = np.exp(1j * np.asarray(theta, dtype=float))
    r = math.sqrt(q)
    val = _poch_inf_vec(e, r) * _poch_inf_vec(-e, r) / _poch_inf_vec(q ** (l - 0.25) * e, r)
    return np.abs(val) ** 2


def _lam_of_theta(theta, q: float):
    return (1 - np.cos(theta)) / (q ** -0.5 - q ** 0.5)


def weight_continuous(lam, params: RepParams):
    """Density w_hat(lambda) of the continuous-spectrum orthogonality measure.

    w_hat = (q;q)_inf (q^{2l};q)_inf sqrt((1-q)/(lambda q^{1/2}))
    w(y) / (2 pi sqrt(1+y)), y = 1 - q^{-1/2}(1-q) lambda, on the open
    interval 0 < lambda < 2 sqrt(q)/(1-q).
    """
    q, l = params.q, params.l
    lam_arr = np.asarray(lam, dtype=float)
    hi = 2 * math.sqrt(q) / (1 - q)
    if np.any(lam_arr <= 0) or np.any(lam_arr >= hi):
        raise ValueError("lambda must lie strictly inside (0, 2 sqrt(q)/(1-q))")
    y = 1 - q ** -0.5 * (1 - q) * lam_arr
    theta = np.arccos(np.clip(y, -1.0, 1.0))
    const = q_pochhammer_inf(q, q) * q_pochhammer_inf(q ** (2 * l), q) / (2 * math.pi)
    val = const * np.sqrt((1 - q) / (lam_arr * q ** 0.5)) * weight_w(theta, params) / np.sqrt(1 + y)
    return float(val) if np.ndim(lam) == 0 else val


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class QuadratureResult:
    value: np.ndarray
    nodes: int
    change: float


def gauss_legendre(f: Callable, interval, nodes: int) -> np.ndarray:
    """Fixed-node Gauss-Legendre rule; ``f`` maps a node array to values (any trailing shape)."""
    a, b = interval
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (b - a) * x + 0.5 * (b + a)
    vals = np.asarray(f(t))
    return 0.5 * (b - a) * np.tensordot(w, vals, axes=(0, 0))


def quadrature_adaptive(f: Callable, interval, nodes: int = DEFAULT_NODES,
                        tol: float = QUAD_TOL, max_doublings: int = MAX_DOUBLINGS) -> QuadratureResult:
    """Gauss-Legendre with node doubling until successive results agree within ``tol``.

    Agreement is measured as max |I_2n - I_n| / max(1, max |I_2n|).
    """
    prev = gauss_legendre(f, interval, nodes)
    for _ in range(max_doublings):
        nodes *= 2
        cur = gauss_legendre(f, interval, nodes)
        change = float(np.max(np.abs(cur - prev)))
        if change <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return QuadratureResult(cur, nodes, change)
        prev = cur
    raise QuadratureError(f"quadrature did not settle after {max_doublings} doublings")


def quadrature_integrate(f: Callable, interval, nodes: int = DEFAULT_NODES) -> float:
    """Integral of a scalar function over ``interval`` with node doubling."""
    res = quadrature_adaptive(lambda t: np.array([f(v) for v in t]), interval, nodes)
    return float(res.value)


# ---------------------------------------------------------------- helpers

def _summarize(relation, n_max, gram, pred, terms, change=None, labels=()) -> GramReport:
    gram = 0.5 * (gram + gram.T)
    d = np.diag(gram)
    if np.any(d <= 0):
        raise ValueError("Gram diagonal is not positive")
    norm = gram / np.sqrt(np.outer(d, d))
    off = norm - np.diag(np.diag(norm))
    fitted = float(d[0] / pred[0])
    dev = float(np.max(np.abs(d / (fitted * pred) - 1)))
    return GramReport(relation, n_max, gram, np.asarray(pred, dtype=float),
                      float(np.max(np.abs(off))) if len(d) > 1 else 0.0, dev, fitted,
                      int(terms), change, tuple(labels))


def _sum_outward(term: Callable[[int], np.ndarray], start: int, step: int, tail_tol: float):
    """Sum term(k) for k = start, start+step, ... until terms stay below tail_tol * running max."""
    total = None
    running = 0.0
    quiet = 0
    k = start
    for used in range(1, MAX_TERMS + 1):
        t = term(k)
        total = t if total is None else total + t
        mag = float(np.max(np.abs(t)))
        running = max(running, mag)
        if mag <= tail_tol * running:
            quiet += 1
            if quiet >= 3:
                return total, used
        else:
            quiet = 0
        k += step
    raise TailError("sum tail does not decay")


def bc_constant(params: RepParams) -> float:
    """b_c = c^{2l} q^{l(2l-1)} (q;q)_{2l-1}, the last factor taken as (q;q)_inf/(q^{2l};q)_inf."""
    q, l, c = params.q, params.l, params.c
    return c ** (2 * l) * q ** (l * (2 * l - 1)) * q_pochhammer_inf(q, q) / q_pochhammer_inf(q ** (2 * l), q)


def qlaguerre_mass_constant(params: RepParams) -> float:
    """The constant that normalizes the bilateral q-Laguerre measure to unit mass.

    (q^{2l}, -c, -q/c; q)_inf / (q, -c q^{2l}, -q^{1-2l}/c; q)_inf.
    """
    q, l, c = params.q, params.l, params.c
    pinf = lambda a: q_pochhammer_inf(a, q)  # noqa: E731
    return (pinf(q ** (2 * l)) * pinf(-c) * pinf(-q / c)
            / (pinf(q) * pinf(-c * q ** (2 * l)) * pinf(-q ** (1 - 2 * l) / c)))


def _qlaguerre_rows(n_max: int, x: np.ndarray, params: RepParams) -> np.ndarray:
    return eval_poly_all(PolyFamily("q_laguerre", 2 * params.l - 1), n_max, x, params.q)


# ---------------------------------------------------------------- Gram matrices

def _gram_continuous(spec: MeasureSpec, n_max: int) -> GramReport:
    params = spec.params
    q, l = params.q, params.l
    const = q_pochhammer_inf(q, q) * q_pochhammer_inf(q ** (2 * l), q) / (2 * math.pi)
    dlam = 1 / (q ** -0.5 - q ** 0.5)

    def integrand(theta):
        lam = _lam_of_theta(theta, q)
        p = overlap_values("I1", n_max, lam, params, phase=False).real
        wt = weight_continuous(lam, params) * np.sin(theta) * dlam
        return np.einsum("mt,nt,t->tmn", p, p, wt)

    res = quadrature_adaptive(integrand, (0.0, math.pi), spec.quadrature_nodes, tol=1e-13)
    del const
    return _summarize(spec.relation, n_max, res.value, np.ones(n_max + 1), res.nodes, res.change)


def _gram_little(spec: MeasureSpec, n_max: int) -> GramReport:
    params = spec.params
    q, l = params.q, params.l
    fam = PolyFamily("little_q_laguerre", q ** (2 * l - 1))
    pre = q_pochhammer_inf(q ** (2 * l), q)

    def term(k):
        x = q ** k
        p = np.array([eval_poly(fam, n, x, q, route="explicit").real for n in range(n_max + 1)])
        return pre * q ** (2 * l * k) / q_pochhammer(q, q, k) * np.outer(p, p)

    gram, used = _sum_outward(term, 0, 1, spec.tail_tol)
    pred = np.array([q ** (2 * l * n) * q_pochhammer(q, q, n) / q_pochhammer(q ** (2 * l), q, n)
                     for n in range(n_max + 1)])
    return _summarize(spec.relation, n_max, gram, pred, used)


def _gram_qlaguerre(spec: MeasureSpec, n_max: int) -> GramReport:
    params = spec.params
    q, l, c = params.q, params.l, params.c
    bc = bc_constant(params)

    def term(k):
        x = c * q ** k
        p = _qlaguerre_rows(n_max, np.asarray(x), params)
        return bc * q ** (2 * l * k) / q_pochhammer_inf(-x, q) * np.outer(p, p)

    up, n_up = _sum_outward(term, 0, 1, spec.tail_tol)
    down, n_down = _sum_outward(term, -1, -1, spec.tail_tol)
    pred = np.array([q_pochhammer(q ** (2 * l), q, n) / (q_pochhammer(q, q, n) * q ** n)
                     for n in range(n_max + 1)])
    return _summarize(spec.relation, n_max, up + down, pred, n_up + n_down)


def _gram_asc_dual(spec: MeasureSpec, n_max: int) -> GramReport:
    params = spec.params
    q, l = params.q, params.l
    a = q ** (2 * l - 1)
    fam = PolyFamily("asc_dual", a)

    def term(m):
        x = q ** -m
        g = np.array([eval_poly(fam, n, x, q, route="explicit").real for n in range(n_max + 1)])
        w = q ** (m * m) * a ** m / (q_pochhammer(q, q, m) * q_pochhammer(q ** (2 * l), q, m))
        return w * np.outer(g, g)

    gram, used = _sum_outward(term, 0, 1, spec.tail_tol)
    pred = np.array([q_pochhammer(q, q, n) * q ** (-2 * l * n) / q_pochhammer_inf(q ** (2 * l), q)
                     for n in range(n_max + 1)])
    return _summarize(spec.relation, n_max, gram, pred, used)


def fk_k_range(n_max: int) -> tuple:
    """Default index window for the F_k system: n_max+1 consecutive k centered on 0."""
    lo = -(n_max // 2)
    return lo, lo + n_max


def fk_values(ks, n_max: int, params: RepParams) -> np.ndarray:
    """F_k(q^{-n}) = (q;q)_n 2phi1(q^{-n}, -c q^k; 0; q, q^{n+2l}) for n = 0..n_max.

    Uses 2phi1(q^{-n}, -x; 0; q, q^{n+2l}) = (q;q)_n L_n^{(2l-1)}(x; q), so
    F_k(q^{-n}) = (q;q)_n^2 L_n^{(2l-1)}(c q^k; q).  Shape (n_max+1, len(ks)).
    """
    q, c = params.q, params.c
    x = c * q ** np.asarray(ks, dtype=float)
    L = _qlaguerre_rows(n_max, x, params)
    qq = np.array([q_pochhammer(q, q, n) for n in range(n_max + 1)])
    return (qq ** 2)[:, None] * L


def _gram_fk(spec: MeasureSpec, n_max: int) -> GramReport:
    params = spec.params
    q, l, c = params.q, params.l, params.c
    lo, hi = spec.k_range if spec.k_range is not None else fk_k_range(n_max)
    ks = np.arange(lo, hi + 1)
    bc = bc_constant(params)
    block = 64
    total = np.zeros((len(ks), len(ks)))
    running = 0.0
    used = 0
    for start in range(0, MAX_TERMS, block):
        F = fk_values(ks, start + block - 1, params)[start:]
        n = np.arange(start, start + block)
        w = q ** n * np.array([q_pochhammer(q, q, j) / q_pochhammer(q ** (2 * l), q, j) for j in n])
        terms = w[:, None, None] * F[:, :, None] * F[:, None, :]
        mags = np.max(np.abs(terms), axis=(1, 2))
        running = max(running, float(np.max(mags)))
        total += terms.sum(axis=0)
        used = start + block
        if np.all(mags[-3:] <= spec.tail_tol * running):
            break
    else:
        raise TailError("F_k sum tail does not decay")
    pred = np.array([q_pochhammer_inf(-c * q ** k, q) / (q ** (2 * l * k) * bc) for k in ks])
    return _summarize(spec.relation, n_max, total, pred, used, labels=tuple(int(k) for k in ks))


def gram_matrix(spec: MeasureSpec, n_max: int) -> GramReport:
    """Gram matrix of the relation's family against its measure, degrees (or indices) up to n_max."""
    if not 0 <= n_max <= MAX_GRAM_NMAX:
        raise ValueError(f"n_max must lie in 0..{MAX_GRAM_NMAX}")
    fn = {
        "cont_qL_313": _gram_continuous,
        "little_qL_510": _gram_little,
        "qLaguerre_712": _gram_qlaguerre,
        "asc_dual_514": _gram_asc_dual,
        "fk_719": _gram_fk,
    }[spec.relation]
    return fn(spec, n_max)


def quadrature_stability(spec: MeasureSpec, n_max: int) -> float:
    """Largest Gram-entry change when the accepted node count of the continuous relation is doubled."""
    if spec.relation != "cont_qL_313":
        raise ValueError("only the continuous relation uses quadrature")
    rep = gram_matrix(spec, n_max)
    finer = MeasureSpec(spec.relation, spec.params, 2 * rep.truncation_terms_used)
    q = spec.params.q
    dlam = 1 / (q ** -0.5 - q ** 0.5)

    def integrand(theta):
        lam = _lam_of_theta(theta, q)
        p = overlap_values("I1", n_max, lam, spec.params, phase=False).real
        wt = weight_continuous(lam, spec.params) * np.sin(theta) * dlam
        return np.einsum("mt,nt,t->tmn", p, p, wt)

    g2 = gauss_legendre(integrand, (0.0, math.pi), finer.quadrature_nodes)
    return float(np.max(np.abs(g2 - rep.gram)))


# ---------------------------------------------------------------- unitarity

@dataclass(frozen=True)
class UnitarityReport:
    pairing: str
    row_residual: float
    col_residual: float
    rows_used: int
    cols_used: int


def _little_lattice_table(rows: int, cols: int, params: RepParams) -> np.ndarray:
    """T[m, n] = p_m(q^n; q^{2l-1} | q) for m < rows, n < cols via the terminating lattice form.

    p_m(q^n) = 2phi0(q^{-m}, q^{-n}; -; q, q^n/a) / (q^{-m}/a; q)_m, summed in
    ``LATTICE_DIGITS``-digit decimal arithmetic: both pieces overflow doubles
    long before their ratio does, and the sum cancels heavily.
    """
    M = max(rows, cols)
    with decimal.localcontext() as ctx:
        ctx.prec = LATTICE_DIGITS
        q = Decimal(params.q)
        a = q ** (2 * Decimal(params.l) - 1)
        qp = [q ** j for j in range(M + 1)]
        qi = [1 / v for v in qp]
        den = []
        for m in range(rows):
            p = Decimal(1)
            for j in range(m):
                p *= 1 - qi[m] / a * qp[j]
            den.append(p)
        out = np.empty((rows, cols))
        for m in range(rows):
            for n in range(cols):
                t = Decimal(1)
                s = Decimal(1)
                z = qp[n] / a
                for j in range(min(m, n)):
                    t = t * (1 - qi[m] * qp[j]) * (1 - qi[n] * qp[j]) / ((1 - qp[j + 1]) * -qp[j]) * z
                    s += t
                out[m, n] = float(s / den[m])
    return out


# Entries below this amplitude contribute under 1e-17 to the residual sums.
AMPLITUDE_FLOOR = 3e-9


def _size_for(decay: float, floor: float = AMPLITUDE_FLOOR) -> int:
    return int(math.ceil(math.log(floor) / math.log(decay))) + 2


def little_connection_matrix(params: RepParams, rows: int, cols: int) -> np.ndarray:
    """A[m, n] = c_n P_m(lambda_n), c_n = q^{ln} sqrt((q^{2l};q)_inf / (q;q)_n).

    P_m is the normalized I2 overlap polynomial and lambda_n = q^n/(1-1/q).
    """
    q, l = params.q, params.l
    T = _little_lattice_table(rows, cols, params)
    pinf = q_pochhammer_inf(q ** (2 * l), q)
    m = np.arange(rows)
    n = np.arange(cols)
    scale_m = np.sqrt([q_pochhammer(q ** (2 * l), q, j) / q_pochhammer(q, q, j) for j in m]) * q ** (-l * m)
    c_n = q ** (l * n) * np.sqrt([pinf / q_pochhammer(q, q, j) for j in n])
    return scale_m[:, None] * T * c_n[None, :]


def qlaguerre_connection_matrix(params: RepParams, n_rows: int, ks) -> np.ndarray:
    """A[n, j] = d_k q^{n/2} sqrt((q;q)_n/(q^{2l};q)_n) L_n^{(2l-1)}(c q^k; q) for k = ks[j].

    d_k = sqrt(b) q^{lk} / sqrt((-c q^k; q)_inf) with b the unit-mass constant
    of the bilateral measure.
    """
    q, l, c = params.q, params.l, params.c
    ks = np.asarray(ks, dtype=float)
    b = qlaguerre_mass_constant(params)
    d = np.sqrt(b) * q ** (l * ks) / np.sqrt([q_pochhammer_inf(-c * q ** k, q) for k in ks])
    L = _qlaguerre_rows(n_rows - 1, c * q ** ks, params)
    n = np.arange(n_rows)
    s = q ** (n / 2) * np.sqrt([q_pochhammer(q, q, j) / q_pochhammer(q ** (2 * l), q, j) for j in n])
    return s[:, None] * L * d[None, :]


def _check_tail(*edges) -> None:
    for e in edges:
        if np.max(np.abs(e)) > 10 * AMPLITUDE_FLOOR:
            raise TailError("connection matrix truncated before its entries decayed")


def _residual(block: np.ndarray) -> float:
    return float(np.max(np.abs(block - np.eye(len(block)))))


def unitarity_check(pairing: str, params: RepParams, m_max: int, n_max: int) -> UnitarityReport:
    """Row and column orthonormality residuals of a connection matrix.

    Rows are indexed by polynomial degree m and columns by the spectral
    index.  ``row_residual`` is max |sum_n A_mn A_m'n - delta| over
    m, m' <= m_max; ``col_residual`` is max |sum_m A_mn A_mn' - delta| over
    the spectral indices n, n' <= n_max (little_qL_vs_asc) or
    |k|, |k'| <= n_max (qL_vs_fk).  The summed index runs until the
    dropped tail is below 1e-18 of the entries.
    """
    if pairing not in PAIRINGS:
        raise ValueError(f"unknown pairing {pairing!r}")
    if m_max < 0 or n_max < 0:
        raise ValueError("m_max and n_max must be nonnegative")
    q, l = params.q, params.l
    if pairing == "little_qL_vs_asc":
        # Along a row the entries fall like q^{ln}; down a column they fall
        # like q^{m^2/2} once m passes twice the column index.
        cols = max(_size_for(q ** l) + m_max, n_max) + 1
        extra = int(math.ceil(math.sqrt(2 * math.log(1 / AMPLITUDE_FLOOR) / -math.log(q))))
        rows = max(m_max + 1, 2 * (n_max + 1) + extra)
        A = little_connection_matrix(params, rows, cols)
        _check_tail(A[: m_max + 1, -1], A[-1, : n_max + 1])
        r = A[: m_max + 1]
        c = A[:, : n_max + 1]
        return UnitarityReport(pairing, _residual(r @ r.T), _residual(c.T @ c), rows, cols)
    if params.c is None:
        raise ValueError("qL_vs_fk needs the scale c")
    # Columns k > 0 decay like q^{lk}; rows decay like q^{n/2}.  Columns
    # k < 0 decay like q^{k^2/4} against the growth x^m of the low rows, so
    # the window is widened until every edge of the matrix has decayed.
    k_hi = max(_size_for(q ** l), n_max) + 1
    k_lo = -max(n_max, 4 * (m_max + 1))
    n_rows = max(_size_for(q ** 0.5), m_max + 1, n_max + 1)
    for _ in range(8):
        ks = np.arange(k_lo, k_hi + 1)
        with np.errstate(over="ignore"):
            A = qlaguerre_connection_matrix(params, n_rows, ks)
        keep = np.max(np.abs(A), axis=0) > 0
        A, ks = A[:, keep], ks[keep]
        sel = (ks >= -n_max) & (ks <= n_max)
        try:
            _check_tail(A[: m_max + 1, -1], A[: m_max + 1, 0], A[-1, sel])
            break
        except TailError:
            k_lo, n_rows = 2 * k_lo, 2 * n_rows
    else:
        raise TailError("connection matrix truncated before its entries decayed")
    rows = A[: m_max + 1]
    cols = A[:, sel]
    return UnitarityReport(pairing, _residual(rows @ rows.T), _residual(cols.T @ cols), n_rows, len(ks))
