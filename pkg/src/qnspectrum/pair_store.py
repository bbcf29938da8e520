"""Limited-memory storage of quasi-Newton pairs (s_i, y_i).

The buffer keeps at most ``m`` pairs, oldest first, and maintains the Gram
matrices S^T Y and S^T S incrementally so that every compact form can be
assembled without touching length-n data again.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, EmptyHistoryError

DEFAULT_MEMORY = 5


@dataclass(frozen=True)
class Pair:
    s: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if s.shape != y.shape:
            raise DimensionError(f"s has length {s.size} but y has length {y.size}")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(y))):
            raise ValueError("pair vectors must be finite")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.s.size

    @property
    def sy(self):
        return float(self.s @ self.y)


@dataclass(frozen=True)
class GramBlocks:
    """Index split of S^T Y into L (strictly lower), D (diagonal), R (strictly upper)."""

    L: np.ndarray
    D: np.ndarray
    R: np.ndarray
    StS: np.ndarray

    @property
    def d(self):
        return np.diag(self.D).copy()


@dataclass(frozen=True)
class CurvatureStatus:
    ok: bool
    index: int | None = None
    value: float | None = None

    def __bool__(self):
        return self.ok


class PairBuffer:
    """FIFO history of at most ``m`` pairs in R^n with cached Gram blocks.

    ``gram_sy[i, j]`` holds s_i^T y_j and ``gram_ss[i, j]`` holds s_i^T s_j.
    Pushing at capacity evicts the oldest pair; each push costs O(n * l_p).
    """

    def __init__(self, n, m=DEFAULT_MEMORY):
        if n < 1 or m < 1:
            raise ValueError("n and m must be positive")
        self.n = int(n)
        self.m = int(m)
        self.pairs: list[Pair] = []
        self.gram_sy = np.zeros((0, 0))
        self.gram_ss = np.zeros((0, 0))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __repr__(self):
        return f"PairBuffer(n={self.n}, m={self.m}, pairs={len(self)})"

    @property
    def size(self):
        return len(self.pairs)

    @property
    def full(self):
        return len(self.pairs) >= self.m

    @property
    def S(self):
        if not self.pairs:
            return np.zeros((self.n, 0))
        return np.column_stack([p.s for p in self.pairs])

    @property
    def Y(self):
        if not self.pairs:
            return np.zeros((self.n, 0))
        return np.column_stack([p.y for p in self.pairs])

    def evict_oldest(self):
        """Drop the oldest pair together with its Gram row and column."""
        if not self.pairs:
            raise EmptyHistoryError("cannot evict from an empty buffer")
        self.pairs.pop(0)
        self.gram_sy = self.gram_sy[1:, 1:].copy()
        self.gram_ss = self.gram_ss[1:, 1:].copy()
        return self

    def push(self, pair, y=None):
        """Append a pair, evicting the oldest one if the buffer is full.

        Accepts either a :class:`Pair` or the two vectors ``push(s, y)``.
        """
        if y is not None:
            pair = Pair(pair, y)
        elif not isinstance(pair, Pair):
            raise TypeError("push expects a Pair or (s, y)")
        if pair.n != self.n:
            raise DimensionError(f"pair has length {pair.n}, buffer expects {self.n}")
        if self.full:
            self.evict_oldest()

        S, Y = self.S, self.Y
        l = len(self.pairs)
        sy = np.empty((l + 1, l + 1))
        ss = np.empty((l + 1, l + 1))
        sy[:l, :l] = self.gram_sy
        ss[:l, :l] = self.gram_ss
        sy[:l, l] = S.T @ pair.y
        sy[l, :l] = Y.T @ pair.s
        sy[l, l] = pair.s @ pair.y
        ss_col = S.T @ pair.s
        ss[:l, l] = ss_col
        ss[l, :l] = ss_col
        ss[l, l] = pair.s @ pair.s

        self.pairs.append(pair)
        self.gram_sy = sy
        self.gram_ss = ss
        return self

    def copy(self):
        """Independent snapshot; pair vectors are shared since Pair is immutable."""
        other = copy.copy(self)
        other.pairs = list(self.pairs)
        other.gram_sy = self.gram_sy.copy()
        other.gram_ss = self.gram_ss.copy()
        return other

    @classmethod
    def from_matrices(cls, S, Y, m=None):
        S = np.atleast_2d(np.asarray(S, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if S.shape != Y.shape:
            raise DimensionError(f"S is {S.shape} but Y is {Y.shape}")
        n, l = S.shape
        buf = cls(n, m if m is not None else max(l, 1))
        for j in range(l):
            buf.push(Pair(S[:, j], Y[:, j]))
        return buf


def push_pair(buf, p):
    return buf.push(p)


def gram_blocks(buf):
    if len(buf) == 0:
        raise EmptyHistoryError("gram blocks need at least one stored pair")
    sty = buf.gram_sy
    return GramBlocks(
        L=np.tril(sty, -1),
        D=np.diag(np.diag(sty)),
        R=np.triu(sty, 1),
        StS=buf.gram_ss.copy(),
    )


def curvature_check(buf, family):
    """Check s_i^T y_i > 0 for every stored pair.

    SR1 does not need positive curvature, so it always passes here.
    """
    if family.is_sr1:
        return CurvatureStatus(True)
    d = np.diag(buf.gram_sy)
    for i, v in enumerate(d):
        if not v > 0:
            return CurvatureStatus(False, i, float(v))
    return CurvatureStatus(True)


def load_matrix(path):
    """Read a matrix written as a header line ``n l`` followed by ``n`` rows."""
    text = Path(path).read_text().splitlines()
    lines = [ln for ln in text if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"{path}: header must be 'n l', got {lines[0]!r}")
    n, l = int(header[0]), int(header[1])
    rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    if len(rows) != n or any(len(r) != l for r in rows):
        raise DimensionError(f"{path}: expected {n} rows of {l} values")
    return np.array(rows, dtype=float).reshape(n, l)


def save_matrix(path, A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n, l = A.shape
    with open(path, "w") as fh:
        fh.write(f"{n} {l}\n")
        for row in A:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
