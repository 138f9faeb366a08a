"""Truncated matrix realizations of the representation operators.

Every operator kind acts tridiagonally on the orthonormal basis f_k of the
lowest-weight representation with weight l.  ``build_operator`` returns the
finite section as a real symmetric tridiagonal :class:`JacobiOperator`;
phased kinds are realized in the basis e^{ik psi} f_k so that their entries
are real.  ``definition_matrix`` assembles the same operators in the
canonical basis from the ladder matrices and is used as a cross-check.
"""
from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional

import numpy as np

from .qcore import q_bracket
from .qpolys import (
    OP_KINDS,
    PHASED_KINDS,
    RepParams,
    _recurrence,
    kind_family,
    natural_affine,
    overlap_scale,
)

OPERATOR_KINDS = OP_KINDS + ("classical",)
BASIS_TAGS = ("canonical", "tilde_psi")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LadderMatrices:
    """Diagonal of J0 and the off-diagonal entries of J+ (below) and J- (above)."""

    J0_diag: np.ndarray
    Jplus_sub: np.ndarray
    Jminus_super: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.J0_diag)

    def j0(self) -> np.ndarray:
        return np.diag(self.J0_diag)

    def jplus(self) -> np.ndarray:
        return np.diag(self.Jplus_sub, -1)

    def jminus(self) -> np.ndarray:
        return np.diag(self.Jminus_super, 1)


@dataclass(frozen=True)
class JacobiOperator:
    """Finite section of a symmetric tridiagonal operator."""

    kind: str
    params: RepParams
    dim: int
    diag: np.ndarray
    offdiag: np.ndarray
    basis_tag: str

    def __post_init__(self):
        object.__setattr__(self, "diag", _frozen(self.diag))
        object.__setattr__(self, "offdiag", _frozen(self.offdiag))
        if self.diag.shape != (self.dim,) or self.offdiag.shape != (max(self.dim - 1, 0),):
            raise ValueError("diag must have dim entries and offdiag dim-1 entries")
        if self.basis_tag not in BASIS_TAGS:
            raise ValueError(f"unknown basis tag {self.basis_tag!r}")

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def norm(self) -> float:
        """Infinity-norm bound max_k (|d_k| + |a_{k-1}| + |a_k|)."""
        pad = np.concatenate(([0.0], np.abs(self.offdiag), [0.0]))
        return float(np.max(np.abs(self.diag) + pad[:-1] + pad[1:]))


def build_ladder(params: RepParams, N: int) -> LadderMatrices:
    """J0 = diag(l+n); J+ and J- carry sqrt([2l+n]_q [n+1]_q) off the diagonal."""
    if N < 1:
        raise ValueError("N must be at least 1")
    q, l = params.q, params.l
    n = np.arange(N - 1, dtype=float)
    off = np.sqrt(q_bracket(2 * l + n, q) * q_bracket(n + 1, q))
    return LadderMatrices(_frozen(l + np.arange(N, dtype=float)), _frozen(off), _frozen(off))


def _entries(kind: str, q, l, k, sqrt, one):
    """Diagonal and off-diagonal entries at index k in any real number type.

    ``q``, ``l`` and ``k`` are floats or arrays with ``sqrt = np.sqrt`` and
    ``one = 1.0``, or Decimals with a Decimal square root.
    """
    h, t = one / 2, one / 4

    def br(a):
        return (q ** (a * h) - q ** (-a * h)) / (q ** h - q ** -h)

    def alpha(k):
        return sqrt((1 - q ** (k + 1)) * (1 - q ** (2 * l + k)))

    if kind in ("I1", "I1_phi"):
        d = ((q ** t + q ** -t) * q ** (l + k) - 2) / (2 * (q ** h - q ** -h))
        a = -h * sqrt(q ** (l + k + h) * br(2 * l + k) * br(k + 1))
    elif kind == "I2_psi":
        d = -(q ** (2 * l + k) * (1 - q ** k) + q ** (k + 1) * (1 - q ** (2 * l + k))) / (1 - q)
        a = q ** (l + k + 1) * alpha(k) / (1 - q)
    elif kind in ("I3", "I3_psi"):
        s = q ** (-2 * (k + l)) / (2 * (1 - q))
        d = s * (1 - q ** (k + 1) + q * (1 - q ** (2 * l + k - 1)))
        a = -s * q ** -h * alpha(k)
    elif kind == "I4_psi":
        d = 0 * k
        a = q ** (-l - k - h) * alpha(k)
    else:
        d = k + l
        a = -h * sqrt((2 * l + k) * (k + 1))
    return d, a


def coefficients(kind: str, params: RepParams, k) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal entry d_k and off-diagonal entry a_k = <f_{k+1}, Op f_k> at indices ``k``.

    Raises OverflowError where an entry is not representable.
    """
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    k = np.asarray(k, dtype=float)
    with np.errstate(over="raise", invalid="raise"):
        try:
            d, a = _entries(kind, params.q, params.l, k, np.sqrt, 1.0)
        except FloatingPointError as exc:
            raise OverflowError(f"{kind} entries overflow at this size and q") from exc
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(a))):
        raise OverflowError(f"{kind} entries overflow at this size and q")
    return np.asarray(d, dtype=float), np.asarray(a, dtype=float)


@dataclass(frozen=True)
class OffdiagLogModel:
    """log|a_k| = c0 + c1*k + nonlinear(k), evaluated without overflow.

    For the q-kinds the nonlinear part is
    (log(1-q^{k+1}) + log(1-q^{2l+k}))/2; for the classical kind it is
    log((2l+k)(k+1))/2.  Second differences of log|a_k| equal those of the
    nonlinear part exactly, which keeps log-concavity tests free of the
    cancellation a direct evaluation would suffer.
    """

    kind: str
    c0: float
    c1: float
    q: float
    l: float

    def nonlinear(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.kind == "classical":
            return 0.5 * np.log((2 * self.l + k) * (k + 1))
        return 0.5 * (np.log1p(-self.q ** (k + 1)) + np.log1p(-self.q ** (2 * self.l + k)))

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return self.c0 + self.c1 * k + self.nonlinear(k)


def offdiag_log_model(kind: str, params: RepParams) -> OffdiagLogModel:
    """Closed-form model of log|a_k| for operator ``kind``."""
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    q, l = params.q, params.l
    lq, l1q = math.log(q), math.log1p(-q)
    if kind in ("I1", "I1_phi"):
        # (1/2) sqrt(q^{l+k+1/2} [2l+k][k+1]) with [a] = q^{(1-a)/2}(1-q^a)/(1-q)
        c0, c1 = -math.log(2) + 0.5 * ((l + 0.5) * lq + (1 - 2 * l) / 2 * lq - 2 * l1q), 0.0
    elif kind == "I2_psi":
        c0, c1 = (l + 1) * lq - l1q, lq
    elif kind in ("I3", "I3_psi"):
        c0, c1 = -(2 * l + 0.5) * lq - math.log(2) - l1q, -2 * lq
    elif kind == "I4_psi":
        c0, c1 = -(l + 0.5) * lq, -lq
    else:
        c0, c1 = -math.log(2), 0.0
    return OffdiagLogModel(kind, c0, c1, q, l)


def build_operator(kind: str, params: RepParams, N: int) -> JacobiOperator:
    """Finite N x N section of operator ``kind``.

    Phased kinds are realized in the basis e^{ik psi} f_k, where the matrix
    is real and independent of psi.
    """
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    if N < 1:
        raise ValueError("N must be at least 1")
    d, _ = coefficients(kind, params, np.arange(N))
    _, a = coefficients(kind, params, np.arange(N - 1))
    tag = "tilde_psi" if kind in PHASED_KINDS else "canonical"
    return JacobiOperator(kind, params, N, d, a, tag)


def definition_matrix(kind: str, params: RepParams, N: int) -> np.ndarray:
    """Dense canonical-basis matrix assembled from the ladder matrices.

    The phase of the phased kinds is psi from ``params``.  Three
    normalization choices are built in, each needed to match the stated
    basis action: the I2 diagonal uses q^{+-(l-1)/2}; the I3 hopping term
    is J1 = (J+ + J-)/2; the I4 product is rescaled by (1-q) q^{-1/2}.
    """
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    q, l = params.q, params.l
    lad = build_ladder(params, N)
    jp, jm = lad.jplus(), lad.jminus()
    j0 = lad.J0_diag

    def qj(s):
        return np.diag(q ** (s * j0))

    ph = np.exp(1j * params.psi) if kind in PHASED_KINDS else 1.0
    if kind in ("I1", "I1_phi"):
        b = 1 / (q ** 0.5 - q ** -0.5)
        a = (q ** 0.25 + q ** -0.25) * b
        hop = q ** 0.25 * ph * jp + q ** -0.25 * np.conj(ph) * jm
        return a / 2 * qj(1) - b * np.eye(N) - 0.5 * hop @ qj(0.5)
    if kind == "I2_psi":
        hop = q ** 0.75 * ph * jp + q ** -0.75 * np.conj(ph) * jm
        br = np.diag(q_bracket(j0 - l, q) * q ** ((l - 1) / 2) + q_bracket(j0 + l, q) * q ** (-(l - 1) / 2))
        return (hop - br) @ qj(1.5)
    if kind in ("I3", "I3_psi"):
        j1 = 0.5 * (ph * jp + np.conj(ph) * jm)
        return (-qj(-0.75) @ j1 @ qj(-0.75) + (1 + q) / (2 * (1 - q)) * qj(-2)
                - (q ** l + q ** (1 - l)) / (2 * (1 - q)) * qj(-1))
    if kind == "I4_psi":
        m = qj(-0.25) @ (ph * jp + np.conj(ph) * jm) @ qj(-0.25)
        return (1 - q) * q ** -0.5 * m
    n = np.arange(N - 1)
    cl = np.sqrt((2 * l + n) * (n + 1))
    return np.diag(j0) - 0.5 * (np.diag(cl, -1) + np.diag(cl, 1))


def to_canonical(op: JacobiOperator) -> np.ndarray:
    """Dense matrix of ``op`` in the canonical basis (complex for phased kinds)."""
    m = op.dense().astype(complex)
    if op.basis_tag == "tilde_psi":
        u = np.exp(1j * op.params.psi * np.arange(op.dim))
        m = (u[:, None] * m) * np.conj(u)[None, :]
    return m


def casimir_matrix(params: RepParams, N: int) -> np.ndarray:
    """[J0 - 1/2]_q^2 - J+ J- on the N-dimensional section."""
    lad = build_ladder(params, N)
    c = np.diag(q_bracket(lad.J0_diag - 0.5, params.q) ** 2)
    return c - lad.jplus() @ lad.jminus()


@dataclass(frozen=True)
class CoefficientLimits:
    """Large-index behavior of the diagonal and off-diagonal sequences."""

    kind: str
    diag_limit: float
    offdiag_limit: float
    essential_interval: Optional[tuple]
    unbounded: bool


def coefficient_limits(kind: str, params: RepParams, k: int = 200,
                       k_check: int = 400, tol: float = 1e-8) -> CoefficientLimits:
    """Limits of d_k and a_k read at ``k``, confirmed at ``k_check``.

    A sequence that overflows or changes by more than ``tol`` (relative)
    between the two indices is reported as unbounded with infinite limits.
    """
    vals = []
    for idx in (k, k_check):
        try:
            d, a = coefficients(kind, params, idx)
            vals.append((float(d), float(a)))
        except OverflowError:
            vals.append((math.inf, math.inf))
    (d1, a1), (d2, a2) = vals

    def settled(x, y):
        return math.isfinite(x) and math.isfinite(y) and abs(x - y) <= tol * max(1.0, abs(y))

    if settled(d1, d2) and settled(a1, a2):
        lo, hi = d2 - 2 * abs(a2), d2 + 2 * abs(a2)
        return CoefficientLimits(kind, d2, a2, (lo, hi), False)
    dl = d2 if settled(d1, d2) else math.copysign(math.inf, d2 if math.isfinite(d2) else 1.0)
    al = a2 if settled(a1, a2) else math.copysign(math.inf, a2 if math.isfinite(a2) else 1.0)
    return CoefficientLimits(kind, dl, al, None, True)


def apply(op: JacobiOperator, v) -> np.ndarray:
    """Tridiagonal matrix-vector product."""
    v = np.asarray(v)
    if v.shape != (op.dim,):
        raise ValueError(f"vector length {v.shape} does not match dimension {op.dim}")
    out = op.diag * v
    out[:-1] += op.offdiag * v[1:]
    out[1:] += op.offdiag * v[:-1]
    return out


class _ObjectMatrix:
    """Matrix of Decimals in the ring generated by one operator; scalars act as multiples of I."""

    def __init__(self, m: np.ndarray):
        self.m = m

    def _lift(self, other) -> np.ndarray:
        if isinstance(other, _ObjectMatrix):
            return other.m
        eye = np.full(self.m.shape, 0 * other, dtype=object)
        np.fill_diagonal(eye, other)
        return eye

    def __add__(self, other):
        return _ObjectMatrix(self.m + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return _ObjectMatrix(self.m - self._lift(other))

    def __rsub__(self, other):
        return _ObjectMatrix(self._lift(other) - self.m)

    def __neg__(self):
        return _ObjectMatrix(-self.m)

    def __mul__(self, other):
        if isinstance(other, _ObjectMatrix):
            return _ObjectMatrix(self.m @ other.m)
        return _ObjectMatrix(self.m * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _ObjectMatrix(self.m / other)


RECONSTRUCT_DIGITS = 80


def reconstruct_basis(kind: str, n: int, params: RepParams, N: int) -> float:
    """Norm of p_n(Op) e_0 - e_n, with p_n the kind's overlap polynomial.

    p_n(Op) is produced by running the polynomial family's own three-term
    recurrence with the operator's natural argument in place of the
    variable.  For kinds whose spectra are geometric ladders ||p_n(Op)|| is
    astronomically larger than ||p_n(Op) e_0|| = 1, so both the matrix
    entries and the recurrence are carried in ``RECONSTRUCT_DIGITS``-digit
    decimal arithmetic; only the final vector is rounded to floats.
    """
    if kind not in OP_KINDS:
        raise ValueError(f"no overlap polynomials for kind {kind!r}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if N <= n:
        raise ValueError("N must exceed n")
    fam = kind_family(kind, params)
    with decimal.localcontext() as ctx:
        ctx.prec = RECONSTRUCT_DIGITS
        one = Decimal(1)
        q, l = Decimal(params.q), Decimal(params.l)
        m = np.full((N, N), Decimal(0), dtype=object)
        for k in range(N):
            d, a = _entries(kind, q, l, k, Decimal.sqrt, one)
            m[k, k] = d
            if k + 1 < N:
                m[k, k + 1] = m[k + 1, k] = a
        c0, c1 = natural_affine(kind, q, one)
        x = _ObjectMatrix(m) * c1 + c0
        p = q ** (2 * l - 1) if fam.tag == "little_q_laguerre" else 2 * l - 1
        pn = _recurrence(fam.tag, p, n, x, q, _ObjectMatrix(np.eye(N, dtype=int).astype(object) * one))[n]
        col = np.array([float(c) for c in pn.m[:, 0]])
    v = overlap_scale(kind, n, params) * col
    v[n] -= 1.0
    return float(np.linalg.norm(v))
