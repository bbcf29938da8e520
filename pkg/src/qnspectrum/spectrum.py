"""Eigenvalues of compact quasi-Newton matrices from the thin QR factor.

With ``psi_hat = Q [R1; 0]`` the matrix ``B = gamma I + psi_hat M_hat psi_hat^T``
is orthogonally similar to ``gamma I + diag(R1 M_hat R1^T, 0)``, so its
spectrum is ``gamma`` (multiplicity n - l) plus ``gamma + d_i`` where the
``d_i`` are the eigenvalues of the l x l matrix ``R1 M_hat R1^T``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import qr_engine
from .compact import basis, build_compact, pair_columns, sr1_accepts
from .errors import (
    ConvergenceError,
    DimensionError,
    NumericalError,
    RankError,
    SingularMatrixError,
)
from .pair_store import Pair, PairBuffer

log = logging.getLogger(__name__)

MAX_SWEEPS = 64
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Spectrum:
    gamma: float
    base_multiplicity: int
    shifted: np.ndarray
    n: int

    @property
    def l(self):
        return self.shifted.size

    def values(self):
        """All n eigenvalues, ascending."""
        full = np.concatenate([np.full(self.base_multiplicity, self.gamma), self.shifted])
        return np.sort(full)

    @property
    def min(self):
        return float(self.values()[0])

    @property
    def max(self):
        return float(self.values()[-1])


@dataclass(frozen=True)
class SmallEig:
    values: np.ndarray
    vectors: np.ndarray | None = None


def symmetric_eig_small(A, want_vectors=False, max_sweeps=MAX_SWEEPS):
    """Cyclic Jacobi eigensolver for small dense symmetric matrices.

    Returns eigenvalues in ascending order (eigenvectors as columns when
    requested).  Raises :class:`ConvergenceError` after ``max_sweeps`` sweeps.
    """
    A = np.array(A, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    A = 0.5 * (A + A.T)
    l = A.shape[0]
    V = np.eye(l)
    scale = np.linalg.norm(A)
    if l <= 1 or scale == 0.0:
        return _sorted_eig(np.diag(A).copy(), V, want_vectors)

    tol = _EPS * scale
    for _ in range(max_sweeps):
        off = _off_norm(A)
        if off <= tol:
            break
        for p in range(l - 1):
            for q in range(p + 1, l):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                app, aqq = A[p, p], A[q, q]
                # entries negligible against both diagonals are dropped outright
                if abs(apq) <= 0.5 * _EPS * min(abs(app), abs(aqq)):
                    A[p, q] = A[q, p] = 0.0
                    continue
                tau = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        off = _off_norm(A)
        if off > tol:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
    return _sorted_eig(np.diag(A).copy(), V, want_vectors)


def _off_norm(A):
    # sum(A*A) - sum(diag^2) cancels badly when the diagonal dominates
    return math.sqrt(2.0) * np.linalg.norm(np.triu(A, 1))


def _sorted_eig(values, V, want_vectors):
    order = np.argsort(values, kind="stable")
    return SmallEig(values[order], V[:, order] if want_vectors else None)


def inner_matrix(compact, qr):
    """``R1 M_hat R1^T`` with M reordered to the QR column order."""
    if compact.l != qr.l:
        raise DimensionError(f"M is {compact.l}x{compact.l} but R1 is {qr.l}x{qr.l}")
    R1 = qr.R1
    return R1 @ compact.shuffled_M() @ R1.T


def eigenvalues(compact, qr, n, want_vectors=False):
    """Full spectrum of ``gamma I + Psi M Psi^T`` given the factor of ``psi_hat``."""
    l = compact.l
    if l > n:
        raise DimensionError(f"l={l} exceeds n={n}")
    gamma = compact.gamma
    if l == 0:
        return Spectrum(gamma, n, np.zeros(0), n)
    eig = symmetric_eig_small(inner_matrix(compact, qr), want_vectors=want_vectors)
    shifted = np.sort(gamma + eig.values)
    return Spectrum(gamma, n - l, shifted, n)


def condition_number(spec):
    """2-norm condition number max|lambda| / min|lambda| of the symmetric matrix."""
    mags = np.abs(spec.shifted)
    if spec.base_multiplicity > 0:
        mags = np.append(mags, abs(spec.gamma))
    top, bottom = mags.max(), mags.min()
    if top == 0.0 or bottom <= _EPS * top:
        raise SingularMatrixError("matrix is singular to working precision")
    return float(top / bottom)


def singular_values(spec):
    """Singular values (|eigenvalues|), descending, length n."""
    return np.sort(np.abs(spec.values()))[::-1]


class IncrementalSpectrum:
    """Limited-memory matrix whose spectrum is kept current as pairs arrive.

    Pairs are pushed through :meth:`add_pair`.  Below capacity the new
    columns are appended to the triangular factor; at capacity the oldest
    pair's columns are first removed with Givens rotations.  Whenever the
    factor is not safely full rank, it is rebuilt from scratch.
    """

    def __init__(self, n, family, gamma, m=5):
        self.family = family
        self.gamma = float(gamma)
        self.buf = PairBuffer(n, m)
        self.qr = qr_engine.ThinQR.empty()
        self.compact = build_compact(self.buf, self.gamma, family)
        self.rebuilds = 0

    @property
    def n(self):
        return self.buf.n

    @classmethod
    def from_buffer(cls, buf, family, gamma):
        obj = cls(buf.n, family, gamma, buf.m)
        obj.buf = buf.copy()
        obj.compact = build_compact(obj.buf, obj.gamma, family)
        obj.qr = qr_engine.qr_from_scratch(obj.compact.psi_hat(obj.buf))
        return obj

    def psi_hat(self):
        return self.compact.psi_hat(self.buf)

    def add_pair(self, s, y=None):
        """Store a new pair and update the factor; returns False if SR1 rejects it."""
        pair = s if isinstance(s, Pair) else Pair(s, y)
        if self.family.is_sr1:
            prior = self.buf.copy()
            if prior.full:
                prior.evict_oldest()
            if not sr1_accepts(prior, self.gamma, pair.s, pair.y):
                log.info("SR1 safeguard rejected a pair")
                return False

        width = self.family.columns_per_pair
        qr = self.qr
        if self.buf.full:
            self.buf.evict_oldest()
            qr = qr_engine.delete_leading_columns(qr, width) if qr.l > width else qr_engine.ThinQR.empty()
        psi_hat = basis(self.buf, self.gamma, self.family)

        self.buf.push(pair)
        try:
            for c in pair_columns(pair, self.gamma, self.family):
                qr = qr_engine.append_column(qr, psi_hat, c)
                psi_hat = np.column_stack([psi_hat, c])
        except (RankError, NumericalError) as exc:
            log.info("rebuilding QR factor from scratch: %s", exc)
            qr = None
        self.compact = build_compact(self.buf, self.gamma, self.family)
        if qr is None:
            qr = qr_engine.qr_from_scratch(self.compact.psi_hat(self.buf))
            self.rebuilds += 1
        self.qr = qr
        return True

    def rebuild(self):
        self.qr = qr_engine.qr_from_scratch(self.psi_hat())
        self.rebuilds += 1

    def spectrum(self, want_vectors=False):
        return eigenvalues(self.compact, self.qr, self.n, want_vectors=want_vectors)


def relative_error(computed, reference):
    """``||computed - reference||_inf / ||reference||_inf`` on sorted spectra."""
    a = np.sort(np.asarray(computed, dtype=float))
    b = np.sort(np.asarray(reference, dtype=float))
    if a.shape != b.shape:
        raise DimensionError(f"spectra of different sizes: {a.size} vs {b.size}")
    denom = np.max(np.abs(b)) if b.size else 0.0
    diff = np.max(np.abs(a - b)) if a.size else 0.0
    if denom == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return float(diff / denom)

