import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from cugan.data import make_graded_mixture, make_ring_gmm, load_csv_dataset
from cugan.difficulty import (
    ScoreSource,
    analytic_difficulty,
    analytic_scores,
    normalize_scores,
    rank_by_difficulty,
    read_score_file,
    write_score_file,
)
from cugan.errors import DatasetError, InvalidScoreError, UnsupportedSourceError

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
raw_lists = st.lists(finite, min_size=1, max_size=50)


def test_normalize_hand_examples():
    np.testing.assert_array_equal(normalize_scores([2, 4, 6]), [-1.0, 0.0, 1.0])
    np.testing.assert_array_equal(normalize_scores([0, 10]), [-1.0, 1.0])


@pytest.mark.parametrize("c", [0.0, -3.5, 7.0, 1e9])
def test_normalize_constant_gives_zero(c):
    np.testing.assert_array_equal(normalize_scores([c, c, c]), [0.0, 0.0, 0.0])


@pytest.mark.parametrize("bad", [[1.0, float("nan")], [float("inf"), 0.0], []])
def test_normalize_rejects_bad_input(bad):
    with pytest.raises(InvalidScoreError):
        normalize_scores(bad)


@given(raw_lists)
def test_normalize_range_and_attainment(raw):
    s = normalize_scores(raw)
    assert np.all(s >= -1.0) and np.all(s <= 1.0)
    if max(raw) > min(raw):
        assert s[int(np.argmin(raw))] == -1.0
        assert s[int(np.argmax(raw))] == 1.0


@given(raw_lists)
def test_normalize_idempotent(raw):
    s = normalize_scores(raw)
    np.testing.assert_allclose(normalize_scores(s), s, atol=1e-12, rtol=0)


@given(raw_lists)
def test_normalize_monotone(raw):
    raw = np.asarray(raw)
    s = normalize_scores(raw)
    i, j = np.meshgrid(np.arange(raw.size), np.arange(raw.size))
    lower = raw[i] < raw[j]
    assert np.all(s[i][lower] <= s[j][lower] + 1e-12)


@given(raw_lists.filter(lambda r: max(r) - min(r) > 1e-3),
       st.floats(min_value=1e-3, max_value=1e3), st.floats(min_value=-1e3, max_value=1e3))
def test_normalize_shift_scale_invariant(raw, a, b):
    raw = np.asarray(raw)
    np.testing.assert_allclose(normalize_scores(a * raw + b), normalize_scores(raw), atol=1e-9, rtol=0)


def test_rank_examples():
    assert rank_by_difficulty([0.5, -1.0, 0.0]).tolist() == [1, 2, 0]
    assert rank_by_difficulty([0.0, 0.0, 0.0]).tolist() == [0, 1, 2]
    assert rank_by_difficulty([-1.0, 1.0]).tolist() == [0, 1]


@given(st.lists(st.sampled_from([-1.0, -0.5, 0.0, 0.5, 1.0]), min_size=1, max_size=40))
def test_rank_is_sorted_with_index_tiebreak(s):
    order = rank_by_difficulty(s)
    keys = [(s[i], i) for i in order]
    assert keys == sorted(keys)


def test_analytic_difficulty_examples():
    assert analytic_difficulty([1.0, 2.0], [1.0, 2.0], 0.3) == 0.0
    assert analytic_difficulty([1.0 + 0.3, 2.0], [1.0, 2.0], 0.3) == pytest.approx(1.0, abs=1e-12)
    assert analytic_difficulty([1.0 + 0.3, 2.0], [1.0, 2.0], 0.3, proxy="euclidean") == pytest.approx(0.3)
    with pytest.raises(UnsupportedSourceError):
        analytic_difficulty([0.0, 0.0], None, None)


def test_analytic_mean_matches_chi2_mean():
    ds = make_ring_gmm(8, 2.0, 0.05, 125, seed=3)  # 1000 samples
    expected = math.sqrt(2.0) * special.gamma(1.5) / special.gamma(1.0)
    mean = analytic_scores(ds, "mahalanobis").mean()
    assert abs(mean - expected) / expected < 0.05


def test_graded_mahalanobis_is_sigma_blind_but_euclidean_is_not():
    ds = make_graded_mixture(2, 0.1, 1.0, radius=5.0, samples_per_mode=5000, seed=1)
    maha = analytic_scores(ds, "mahalanobis")
    eucl = analytic_scores(ds, "euclidean")
    m0, m1 = ds.mode_index == 0, ds.mode_index == 1
    assert maha[m1].mean() == pytest.approx(maha[m0].mean(), rel=0.05)
    assert eucl[m1].mean() > 5 * eucl[m0].mean()


def test_analytic_needs_metadata(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("0,0\n1,1\n")
    ds = load_csv_dataset(path)
    with pytest.raises(UnsupportedSourceError):
        ScoreSource("analytic").scores(ds)


def test_score_file_roundtrip_and_alignment(tmp_path, ring8):
    raw = analytic_scores(ring8, "euclidean")
    path = tmp_path / "scores.txt"
    write_score_file(path, raw)
    text = path.read_bytes()
    assert text.count(b"\n") == ring8.n and b"\r" not in text
    np.testing.assert_array_equal(read_score_file(path), raw)
    src = ScoreSource.parse(str(path))
    assert src.kind == "file"
    np.testing.assert_array_equal(src.scores(ring8), normalize_scores(raw))

    short = tmp_path / "short.txt"
    write_score_file(short, raw[:-1])
    with pytest.raises(DatasetError):
        ScoreSource.parse(str(short)).scores(ring8)


def test_score_file_bad_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1.0\nabc\n")
    with pytest.raises(InvalidScoreError, match=":2:"):
        read_score_file(path)


def test_constant_source_is_all_zero(ring8):
    np.testing.assert_array_equal(ScoreSource.parse("constant").scores(ring8), np.zeros(ring8.n))
