"""Thin triangular factor of the (shuffled) compact-form basis.

Only the l x l factor ``R1`` of ``psi_hat = Q [R1; 0]`` is kept; ``Q`` is
never formed.  The factor can be built from scratch with Householder
reflections, grown by one column through a triangular solve against
``psi_hat^T c``, and shrunk from the left with Givens rotations.
All factors are sign-normalized (nonnegative diagonal) so that incremental
and from-scratch results are directly comparable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionError, NumericalError, RankError

RANK_TOL = 1e-8
APPEND_TOL = 1e-8
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class FullRank:
    pass


@dataclass(frozen=True)
class Deficient:
    index: int


@dataclass(frozen=True)
class IllConditioned:
    ratio: float


@dataclass(frozen=True)
class ThinQR:
    R1: np.ndarray

    @property
    def l(self):
        return self.R1.shape[0]

    @property
    def diag_floor(self):
        if self.l == 0:
            return 1.0
        d = np.abs(np.diag(self.R1))
        top = d.max()
        return float(d.min() / top) if top > 0 else 0.0

    @property
    def normalized(self):
        return bool(np.all(np.diag(self.R1) >= 0))

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 0)))


def _normalize(R):
    """Flip rows so the diagonal is nonnegative and clear the strict lower triangle."""
    R = np.triu(R)
    neg = np.diag(R) < 0
    R[neg, :] *= -1.0
    return R


def qr_from_scratch(psi_hat):
    """Householder QR of an n x l matrix, keeping only the l x l factor."""
    A = np.array(psi_hat, dtype=float, copy=True)
    if A.ndim != 2:
        raise DimensionError("psi_hat must be a 2-D array")
    n, l = A.shape
    if l == 0:
        return ThinQR.empty()
    if n < l:
        raise DimensionError(f"need n >= l, got n={n}, l={l}")
    for j in range(l):
        x = A[j:, j]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            continue
        v = x.copy()
        # reflect onto -sign(x0)*||x|| e1 to avoid cancellation
        v[0] += math.copysign(normx, x[0])
        vnorm2 = v @ v
        A[j:, j:] -= np.outer(v, (2.0 / vnorm2) * (v @ A[j:, j:]))
        A[j + 1:, j] = 0.0
    return ThinQR(_normalize(A[:l, :]))


def rank_status(qr, tol=RANK_TOL):
    """Classify ``R1`` by the ratio of its smallest to largest |diagonal| entry."""
    if qr.l == 0:
        return FullRank()
    d = np.abs(np.diag(qr.R1))
    top = d.max()
    if top == 0.0:
        return Deficient(0)
    floor = _EPS * top * qr.l
    small = np.flatnonzero(d <= floor)
    if small.size:
        return Deficient(int(small[0]))
    ratio = float(d.min() / top)
    if ratio <= tol:
        return IllConditioned(ratio)
    return FullRank()


def append_column(qr, psi_hat_old, c, tol=APPEND_TOL):
    """Factor of ``[psi_hat_old, c]`` from the factor of ``psi_hat_old``.

    Solves ``R1^T u = psi_hat_old^T c`` and sets
    ``eta = sqrt(||c||^2 - ||u||^2)``; O(n l + l^2) work.
    """
    status = rank_status(qr)
    if not isinstance(status, FullRank):
        raise RankError(f"cannot append to a factor with status {status}")
    c = np.asarray(c, dtype=float).ravel()
    l = qr.l
    psi_hat_old = np.asarray(psi_hat_old, dtype=float).reshape(c.size, l)

    rhs = psi_hat_old.T @ c
    u = solve_triangular(qr.R1, rhs, trans="T", lower=False) if l else np.zeros(0)
    cc = float(c @ c)
    eta2 = cc - float(u @ u)
    if eta2 < -tol * cc:
        raise NumericalError(
            f"||c||^2 - ||u||^2 = {eta2:.3e} is negative; the stored factor is stale"
        )
    eta = math.sqrt(max(eta2, 0.0))

    R = np.zeros((l + 1, l + 1))
    R[:l, :l] = qr.R1
    R[:l, l] = u
    R[l, l] = eta
    return ThinQR(R)


def _givens(a, b):
    """(c, s) with [c s; -s c] @ [a; b] = [r; 0]."""
    if b == 0.0:
        return 1.0, 0.0
    r = math.hypot(a, b)
    return a / r, b / r


def delete_leading_columns(qr, count):
    """Factor of ``psi_hat`` with its first ``count`` columns removed.

    The remaining columns of ``R1`` have ``count`` nonzero subdiagonals; they
    are cleared column by column, bottom-up, with rotations of adjacent rows.
    """
    if count not in (1, 2):
        raise DimensionError(f"count must be 1 or 2, got {count}")
    l = qr.l
    if count >= l:
        raise DimensionError(f"cannot delete {count} of {l} columns")
    H = np.array(qr.R1[:, count:], copy=True)
    ncols = l - count
    for j in range(ncols):
        for i in range(j + count, j, -1):
            b = H[i, j]
            if b == 0.0:
                continue
            c, s = _givens(H[i - 1, j], b)
            top = H[i - 1, j:].copy()
            bot = H[i, j:]
            H[i - 1, j:] = c * top + s * bot
            H[i, j:] = -s * top + c * bot
            H[i, j] = 0.0
    return ThinQR(_normalize(H[:ncols, :]))
