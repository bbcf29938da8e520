"""Compact representations B = gamma*I + Psi M Psi^T of limited-memory updates.

For the Broyden convex class (BFGS and DFP included) ``Psi = [gamma*S, Y]`` has
``2(k+1)`` columns; for SR1 ``Psi = Y - gamma*S`` has ``k+1`` columns.  Every
builder works from the cached Gram blocks of a :class:`PairBuffer`, so the
only O(n) work is done when the buffer itself is updated.

``M`` is always stored in the unshuffled column order ``[gamma*S, Y]``.  The
QR engine works on the interleaved ("perfect shuffle") ordering
``[gamma*s_0, y_0, gamma*s_1, y_1, ...]``; :func:`shuffle_permutation` maps
between the two.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import CurvatureError, DimensionError, PositivityError, SingularMError
from .pair_store import curvature_check, gram_blocks

SR1_SKIP_TOL = 1e-8
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class UpdateFamily:
    """One of ``bfgs``, ``dfp``, ``sr1`` or ``broyden`` (with ``phi`` in [0, 1])."""

    kind: str
    phi: float | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("bfgs", "dfp", "sr1", "broyden"):
            raise ValueError(f"unknown update family {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "broyden":
            if self.phi is None or not 0.0 <= self.phi <= 1.0:
                raise ValueError(f"Broyden phi must lie in [0, 1], got {self.phi}")
            object.__setattr__(self, "phi", float(self.phi))
        else:
            object.__setattr__(self, "phi", None)

    @classmethod
    def bfgs(cls):
        return cls("bfgs")

    @classmethod
    def dfp(cls):
        return cls("dfp")

    @classmethod
    def sr1(cls):
        return cls("sr1")

    @classmethod
    def broyden(cls, phi):
        return cls("broyden", phi)

    @classmethod
    def parse(cls, name, phi=0.5):
        name = name.lower()
        return cls(name, phi if name == "broyden" else None)

    @property
    def is_sr1(self):
        return self.kind == "sr1"

    @property
    def is_convex(self):
        return not self.is_sr1

    @property
    def convex_phi(self):
        """Position within the convex class: 0 for BFGS, 1 for DFP."""
        return {"bfgs": 0.0, "dfp": 1.0, "broyden": self.phi}.get(self.kind)

    @property
    def columns_per_pair(self):
        return 1 if self.is_sr1 else 2

    def __str__(self):
        if self.kind == "broyden":
            return f"broyden(phi={self.phi:g})"
        return self.kind


def shuffle_permutation(k):
    """Column map for the perfect shuffle of ``[B0 S, Y]`` with ``k+1`` pairs.

    Column ``i`` of the shuffled matrix is column ``perm[i]`` of the unshuffled
    one, so ``psi_hat = psi[:, perm]`` and ``M_hat = M[ix_(perm, perm)]``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    npairs = k + 1
    perm = np.empty(2 * npairs, dtype=int)
    perm[0::2] = np.arange(npairs)
    perm[1::2] = npairs + np.arange(npairs)
    return perm


def inverse_permutation(perm):
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def basis(buf, gamma, family, shuffled=True):
    """``Psi`` for the stored pairs; interleaved (``psi_hat``) unless ``shuffled=False``."""
    if family.is_sr1:
        return buf.Y - gamma * buf.S
    if len(buf) == 0:
        return np.zeros((buf.n, 0))
    if shuffled:
        out = np.empty((buf.n, 2 * len(buf)))
        out[:, 0::2] = gamma * buf.S
        out[:, 1::2] = buf.Y
        return out
    return np.hstack([gamma * buf.S, buf.Y])


def pair_columns(pair, gamma, family):
    """Columns one pair contributes to ``psi_hat``, in append order."""
    if family.is_sr1:
        return [pair.y - gamma * pair.s]
    return [gamma * pair.s, pair.y]


@dataclass(frozen=True)
class CompactForm:
    family: UpdateFamily
    gamma: float
    M: np.ndarray
    npairs: int

    @property
    def l(self):
        return self.M.shape[0]

    @property
    def permutation(self):
        """Map from QR column order to the order of ``M`` (identity for SR1)."""
        if self.family.is_sr1 or self.npairs == 0:
            return np.arange(self.l)
        return shuffle_permutation(self.npairs - 1)

    def shuffled_M(self):
        p = self.permutation
        return self.M[np.ix_(p, p)]

    def psi(self, buf):
        self._check(buf)
        return basis(buf, self.gamma, self.family, shuffled=False)

    def psi_hat(self, buf):
        self._check(buf)
        return basis(buf, self.gamma, self.family)

    def matvec(self, buf, v):
        v = np.asarray(v, dtype=float)
        if self.l == 0:
            return self.gamma * v
        psi = self.psi(buf)
        return self.gamma * v + psi @ (self.M @ (psi.T @ v))

    def dense(self, buf):
        """Explicit n x n matrix; O(n^2) memory, meant for checks only."""
        B = self.gamma * np.eye(buf.n)
        if self.l:
            psi = self.psi(buf)
            B += psi @ self.M @ psi.T
        return B

    def _check(self, buf):
        if len(buf) != self.npairs:
            raise DimensionError(
                f"compact form built for {self.npairs} pairs, buffer holds {len(buf)}"
            )


@dataclass
class BroydenRecursionState:
    M: np.ndarray
    sBs_history: list = field(default_factory=list)
    lam: list = field(default_factory=list)

    @property
    def lambda_diag(self):
        return np.asarray(self.lam, dtype=float)


def _require_convex(buf, gamma, family):
    if not gamma > 0:
        raise ValueError(f"gamma must be positive for {family}, got {gamma}")
    status = curvature_check(buf, family)
    if not status:
        raise CurvatureError(status.index, status.value)


def _sym_inverse(A, what):
    """Inverse of a small symmetric (possibly indefinite) matrix.

    Uses the Bunch-Kaufman LDL^T factorization and rejects the matrix when a
    pivot block is negligible relative to ``||A||``.
    """
    A = 0.5 * (A + A.T)
    size = A.shape[0]
    scale = np.abs(A).sum(axis=1).max()
    _, d, _ = sla.ldl(A)
    pivot = float(np.min(np.abs(np.linalg.eigvalsh(d)))) if size else 0.0
    if scale == 0.0 or pivot <= 10 * size * _EPS * scale:
        raise SingularMError(f"{what} is singular to working precision (pivot {pivot:.3e})", pivot)
    inv = sla.solve(A, np.eye(size), assume_a="sym")
    return 0.5 * (inv + inv.T)


def build_bfgs(buf, gamma):
    """BFGS compact form: ``M = Gamma^{-1}``, Gamma = -[[g S^T S, L], [L^T, -D]]."""
    family = UpdateFamily.bfgs()
    _require_convex(buf, gamma, family)
    g = gram_blocks(buf)
    gamma_mat = -np.block([[gamma * g.StS, g.L], [g.L.T, -g.D]])
    M = _sym_inverse(gamma_mat, "BFGS middle matrix")
    return CompactForm(family, float(gamma), M, len(buf))


def build_dfp(buf, gamma):
    """DFP compact form with ``Lbar = L + D`` handled through triangular solves."""
    family = UpdateFamily.dfp()
    _require_convex(buf, gamma, family)
    g = gram_blocks(buf)
    k1 = len(buf)
    Lbar = g.L + g.D
    Lbar_inv = sla.solve_triangular(Lbar, np.eye(k1), lower=True)
    inner = g.D + gamma * g.StS
    M22 = Lbar_inv @ inner @ Lbar_inv.T
    M = np.block([[np.zeros((k1, k1)), -Lbar_inv.T], [-Lbar_inv, 0.5 * (M22 + M22.T)]])
    return CompactForm(family, float(gamma), M, k1)


def build_sr1(buf, gamma):
    """SR1 compact form: ``Psi = Y - gamma S``, ``M = (D + L + L^T - gamma S^T S)^{-1}``."""
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    g = gram_blocks(buf)
    inner = g.D + g.L + g.L.T - gamma * g.StS
    M = _sym_inverse(inner, "SR1 middle matrix")
    return CompactForm(UpdateFamily.sr1(), float(gamma), M, len(buf))


def build_broyden(buf, gamma, phi):
    """Broyden convex class compact form by the recursive construction of M.

    Each step needs ``Psi_{j-1}^T s_j``, which is read off the cached Gram
    blocks, so no length-n work happens here.  The interleaving permutation
    is applied by index placement instead of matrix products.
    """
    family = UpdateFamily.broyden(phi)
    _require_convex(buf, gamma, family)
    phi = family.phi
    ss = buf.gram_ss
    sy = buf.gram_sy
    k1 = len(buf)

    state = BroydenRecursionState(M=np.zeros((0, 0)))
    M = np.zeros((0, 0))
    for j in range(k1):
        ys = sy[j, j]
        sB0s = gamma * ss[j, j]
        if j == 0:
            p = np.zeros(0)
            sBs = sB0s
        else:
            # Psi_{j-1}^T s_j = [gamma S_{j-1}^T s_j ; Y_{j-1}^T s_j]
            v = np.concatenate([gamma * ss[:j, j], sy[j, :j]])
            p = M @ v
            sBs = sB0s + v @ p
        if not sBs > 0:
            raise PositivityError(f"s^T B s = {sBs:.3e} for pair {j}; numerical breakdown")
        alpha = -(1.0 - phi) / sBs
        beta = -phi / ys
        delta = (1.0 + phi * sBs / ys) / ys

        size = 2 * j + 2
        Mhat = np.empty((size, size))
        Mhat[: 2 * j, : 2 * j] = M + alpha * np.outer(p, p)
        Mhat[: 2 * j, 2 * j] = alpha * p
        Mhat[: 2 * j, 2 * j + 1] = beta * p
        Mhat[2 * j, : 2 * j] = alpha * p
        Mhat[2 * j + 1, : 2 * j] = beta * p
        Mhat[2 * j:, 2 * j:] = [[alpha, beta], [beta, delta]]

        # [Psi_{j-1}, B0 s_j, y_j] -> [B0 S_j, Y_j]: old S block, new s, old Y block, new y
        dest = np.concatenate([np.arange(j), np.arange(j + 1, 2 * j + 1), [j, 2 * j + 1]])
        M = np.empty_like(Mhat)
        M[np.ix_(dest, dest)] = Mhat

        state.sBs_history.append(float(sBs))
        state.lam.append(1.0 / (alpha + beta))

    state.M = M
    return CompactForm(family, float(gamma), M, k1), state


def broyden_m_inverse(buf, gamma, phi, lam):
    """Closed-form ``M^{-1}`` for the Broyden class, assembled from Gram blocks.

    ``lam`` is the diagonal of Lambda (``1 / (alpha_i + beta_i)``), taken from
    :class:`BroydenRecursionState`.  Used to cross-check :func:`build_broyden`.
    """
    g = gram_blocks(buf)
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size != len(buf):
        raise DimensionError(f"Lambda has {lam.size} entries for {len(buf)} pairs")
    pL = phi * np.diag(lam)
    return np.block([[-gamma * g.StS + pL, -g.L + pL], [-g.L.T + pL, g.D + pL]])


def build_compact(buf, gamma, family):
    """Dispatch on ``family``; an empty buffer yields ``B = gamma I`` (l = 0)."""
    if len(buf) == 0:
        return CompactForm(family, float(gamma), np.zeros((0, 0)), 0)
    if family.kind == "bfgs":
        return build_bfgs(buf, gamma)
    if family.kind == "dfp":
        return build_dfp(buf, gamma)
    if family.kind == "sr1":
        return build_sr1(buf, gamma)
    return build_broyden(buf, gamma, family.phi)[0]


def sr1_denominator_ok(Bs, s, y, tol=SR1_SKIP_TOL):
    """SR1 safeguard: accept iff |s^T (y - Bs)| >= tol * ||s|| * ||y - Bs||."""
    r = y - Bs
    denom = abs(float(s @ r))
    return denom > 0.0 and denom >= tol * np.linalg.norm(s) * np.linalg.norm(r)


def sr1_accepts(buf, gamma, s, y, tol=SR1_SKIP_TOL):
    """Whether ``(s, y)`` passes the SR1 safeguard against the matrix built from ``buf``.

    ``buf`` must hold exactly the pairs that will precede the new one (the
    caller evicts first when the history is at capacity).
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    form = build_compact(buf, gamma, UpdateFamily.sr1())
    return sr1_denominator_ok(form.matvec(buf, s), s, y, tol)
