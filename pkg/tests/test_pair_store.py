import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qnspectrum import (
    DimensionError,
    EmptyHistoryError,
    Pair,
    PairBuffer,
    UpdateFamily,
    curvature_check,
    gram_blocks,
    push_pair,
)
from qnspectrum.pair_store import load_matrix, save_matrix


def test_single_push():
    buf = PairBuffer(2, 5)
    push_pair(buf, Pair([1.0, 0.0], [2.0, 0.0]))
    assert len(buf) == 1
    np.testing.assert_array_equal(buf.gram_sy, [[2.0]])
    np.testing.assert_array_equal(buf.gram_ss, [[1.0]])


def test_eviction_at_capacity(rng):
    buf = PairBuffer(4, 5)
    pairs = [Pair(rng.standard_normal(4), rng.standard_normal(4)) for _ in range(6)]
    for p in pairs[:5]:
        buf.push(p)
    buf.push(pairs[5])
    assert len(buf) == 5
    assert buf.pairs[0] is pairs[1]
    assert buf.pairs[-1] is pairs[5]


def test_dimension_mismatch():
    buf = PairBuffer(3)
    with pytest.raises(DimensionError):
        buf.push(Pair([1.0, 2.0], [1.0, 2.0]))
    with pytest.raises(DimensionError):
        Pair([1.0, 2.0], [1.0, 2.0, 3.0])


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        Pair([1.0, np.nan], [1.0, 2.0])


def test_gram_blocks_single_pair():
    buf = PairBuffer(2)
    buf.push([1.0, 0.0], [2.0, 0.0])
    g = gram_blocks(buf)
    np.testing.assert_array_equal(g.L, [[0.0]])
    np.testing.assert_array_equal(g.R, [[0.0]])
    np.testing.assert_array_equal(g.D, [[2.0]])


def test_gram_blocks_index_split():
    buf = PairBuffer(3)
    buf.push([1, 0, 0], [1, 1, 0])
    buf.push([0, 1, 0], [0, 2, 0])
    np.testing.assert_array_equal(buf.gram_sy, [[1, 0], [1, 2]])
    g = gram_blocks(buf)
    np.testing.assert_array_equal(g.L, [[0, 0], [1, 0]])
    np.testing.assert_array_equal(g.D, np.diag([1, 2]))
    np.testing.assert_array_equal(g.R, np.zeros((2, 2)))


def test_gram_split_of_given_matrix():
    # S^T Y = [[2, 5], [3, 7]] from s0=e1, s1=e2, y0=(2,3), y1=(5,7)
    buf = PairBuffer.from_matrices(np.eye(2), [[2, 5], [3, 7]])
    g = gram_blocks(buf)
    np.testing.assert_array_equal(g.L, [[0, 0], [3, 0]])
    np.testing.assert_array_equal(g.D, np.diag([2, 7]))
    np.testing.assert_array_equal(g.R, [[0, 5], [0, 0]])


def test_gram_blocks_empty():
    with pytest.raises(EmptyHistoryError):
        gram_blocks(PairBuffer(3))


def test_curvature_check():
    buf = PairBuffer(2)
    buf.push([1.0, 0.0], [2.0, 0.0])
    assert curvature_check(buf, UpdateFamily.bfgs())
    buf.push([1.0, 0.0], [-1.0, 0.0])
    status = curvature_check(buf, UpdateFamily.dfp())
    assert not status and status.index == 1
    assert curvature_check(buf, UpdateFamily.sr1())


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 8),
    m=st.integers(1, 5),
    data=st.data(),
)
def test_incremental_gram_matches_recompute(n, m, data):
    count = data.draw(st.integers(0, 12))
    vec = arrays(np.float64, n, elements=st.floats(-1e3, 1e3, allow_nan=False))
    buf = PairBuffer(n, m)
    history = []
    for _ in range(count):
        p = Pair(data.draw(vec), data.draw(vec))
        history.append(p)
        buf.push(p)
        assert len(buf) <= m
    expected = history[-m:] if history else []
    assert [id(p) for p in buf] == [id(p) for p in expected]
    if not expected:
        return
    S, Y = buf.S, buf.Y
    smax = max(np.linalg.norm(p.s) for p in expected)
    ymax = max(np.linalg.norm(p.y) for p in expected)
    tol = 10 * np.finfo(float).eps * n * max(smax * ymax, smax**2, 1e-300)
    assert np.abs(buf.gram_sy - S.T @ Y).max() <= tol
    assert np.abs(buf.gram_ss - S.T @ S).max() <= tol
    np.testing.assert_array_equal(buf.gram_ss, buf.gram_ss.T)
    g = gram_blocks(buf)
    np.testing.assert_array_equal(g.L + g.D + g.R, buf.gram_sy)


def test_copy_is_independent(rng):
    buf = PairBuffer(3, 2)
    buf.push(rng.standard_normal(3), rng.standard_normal(3))
    snap = buf.copy()
    buf.push(rng.standard_normal(3), rng.standard_normal(3))
    assert len(snap) == 1 and len(buf) == 2
    assert snap.gram_sy.shape == (1, 1)


def test_matrix_text_roundtrip(tmp_path, rng):
    A = rng.standard_normal((6, 3))
    path = tmp_path / "S.txt"
    save_matrix(path, A)
    assert path.read_text().splitlines()[0] == "6 3"
    np.testing.assert_array_equal(load_matrix(path), A)


def test_matrix_text_shape_checked(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 2\n1 2\n3 4\n")
    with pytest.raises(DimensionError):
        load_matrix(path)
