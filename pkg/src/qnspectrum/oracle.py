"""Dense reference computations used to verify the compact/QR path.

Everything here is O(n^2) memory or worse and exists only for checking:
explicit quasi-Newton recursions, a LAPACK eigensolver, and the closed-form
spectrum of a single BFGS update of a scaled identity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .compact import SR1_SKIP_TOL, sr1_denominator_ok
from .errors import CurvatureError, DimensionError, SkippedUpdateWarning

MAX_DENSE_N = 5000


def _sym(B):
    return 0.5 * (B + B.T)


def bfgs_step(B, s, y):
    Bs = B @ s
    return _sym(B - np.outer(Bs, Bs) / (s @ Bs) + np.outer(y, y) / (y @ s))


def dfp_step(B, s, y):
    ys = y @ s
    E = np.eye(B.shape[0]) - np.outer(y, s) / ys
    return _sym(E @ B @ E.T + np.outer(y, y) / ys)


def broyden_step(B, s, y, phi):
    """One member of the convex class, written with the ``w`` correction term."""
    Bs = B @ s
    sBs = s @ Bs
    ys = y @ s
    w = y / ys - Bs / sBs
    B1 = B - np.outer(Bs, Bs) / sBs + np.outer(y, y) / ys + phi * sBs * np.outer(w, w)
    return _sym(B1)


def sr1_step(B, s, y, tol=SR1_SKIP_TOL):
    """SR1 update, or ``None`` when the denominator safeguard rejects it."""
    Bs = B @ s
    if not sr1_denominator_ok(Bs, s, y, tol):
        return None
    r = y - Bs
    return _sym(B + np.outer(r, r) / (s @ r))


def dense_build(buf, gamma, family):
    """Apply the family's update to ``gamma I`` once per stored pair, oldest first."""
    n = buf.n
    if n > MAX_DENSE_N:
        raise DimensionError(f"dense oracle limited to n <= {MAX_DENSE_N}, got {n}")
    B = gamma * np.eye(n)
    for i, pair in enumerate(buf):
        s, y = pair.s, pair.y
        if family.is_sr1:
            B1 = sr1_step(B, s, y)
            if B1 is None:
                warnings.warn(f"SR1 update {i} skipped by safeguard", SkippedUpdateWarning)
                continue
            B = B1
            continue
        ys = float(s @ y)
        if not ys > 0:
            raise CurvatureError(i, ys)
        if family.kind == "bfgs":
            B = bfgs_step(B, s, y)
        elif family.kind == "dfp":
            B = dfp_step(B, s, y)
        else:
            B = broyden_step(B, s, y, family.phi)
    return B


def dense_eigenvalues(B):
    """All eigenvalues of a dense symmetric matrix, ascending (LAPACK syevd)."""
    B = np.asarray(B, dtype=float)
    return np.linalg.eigvalsh(_sym(B))


@dataclass(frozen=True)
class CharPoly1:
    """Characteristic polynomial of one BFGS update of ``(1/theta) I``.

    ``p(lambda) = (lambda^2 + b lambda + c) (lambda - base_root)^(n-2)`` with
    ``quad_coeffs = (1, b, c)``.
    """

    theta: float
    quad_coeffs: tuple
    base_root: float
    # ||s||^2 ||y||^2 - (s^T y)^2, kept apart so the discriminant avoids cancellation
    cs_gap: float
    sy: float

    @classmethod
    def from_pair(cls, s, y):
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        sy = float(s @ y)
        if not sy > 0:
            raise CurvatureError(0, sy)
        ss = float(s @ s)
        yy = float(y @ y)
        theta = ss / sy
        b = -(1.0 / theta) * (1.0 + theta * yy / sy)
        r = y - (sy / ss) * s
        return cls(theta, (1.0, b, 1.0 / theta**2), 1.0 / theta, ss * float(r @ r), sy)

    def quadratic_roots(self):
        """Both roots of the quadratic factor, ascending."""
        _, b, c = self.quad_coeffs
        # b^2 - 4c = theta^-2 (t - 1)(t + 3), t - 1 = cs_gap / sy^2
        t_minus_1 = self.cs_gap / self.sy**2
        disc = (t_minus_1 * (t_minus_1 + 4.0)) / self.theta**2
        big = 0.5 * (-b + math.sqrt(max(disc, 0.0)))
        small = c / big
        return np.array(sorted((small, big)))

    def __call__(self, lam, n):
        _, b, c = self.quad_coeffs
        return (lam * lam + b * lam + c) * (lam - self.base_root) ** (n - 2)


def appendix_matrix(s, y):
    """Explicit ``(1/theta) I - (1/theta) s s^T / s^T s + y y^T / s^T y``."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    ss, sy = s @ s, s @ y
    inv_theta = sy / ss
    n = s.size
    return _sym(inv_theta * np.eye(n) - inv_theta * np.outer(s, s) / ss + np.outer(y, y) / sy)


def appendix_spectrum(s, y, n=None):
    """Spectrum of one BFGS update of ``(1/theta) I`` from its characteristic polynomial."""
    s = np.asarray(s, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = s.size if n is None else int(n)
    if n < 2:
        raise DimensionError("need n >= 2")
    if not np.any(s):
        raise ValueError("s must be nonzero")
    poly = CharPoly1.from_pair(s, y)
    values = np.concatenate([poly.quadratic_roots(), np.full(n - 2, poly.base_root)])
    return np.sort(values)
