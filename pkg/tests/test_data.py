"""Loading, splitting, windowing, and synthetic dataset tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualcast.errors import ContractError, DataError, ParseError
from dualcast import data as dd
from dualcast.synthetic import SyntheticPeriodicSignal


def _write(tmp_path, text, name="t.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


# -- csv loading -----------------------------------------------------------------


def test_load_csv_with_header_and_date_column(tmp_path):
    path = _write(
        tmp_path,
        "date,a,b\n2016-07-01 00:00,1.5,2\n2016-07-01 01:00,3,-4.25\n",
    )
    ds = dd.load_csv(path)
    assert ds.channel_names == ["a", "b"]
    assert ds.timestamps == ["2016-07-01 00:00", "2016-07-01 01:00"]
    np.testing.assert_array_equal(ds.values, [[1.5, 2.0], [3.0, -4.25]])


def test_load_csv_headerless_numeric(tmp_path):
    ds = dd.load_csv(_write(tmp_path, "1,2\n3,4\n"))
    assert ds.channel_names == ["ch0", "ch1"]
    assert ds.timestamps is None
    np.testing.assert_array_equal(ds.values, [[1, 2], [3, 4]])


def test_load_csv_header_without_dates(tmp_path):
    ds = dd.load_csv(_write(tmp_path, "x,y\n1,2\n"))
    assert ds.channel_names == ["x", "y"]
    assert ds.timestamps is None


def test_load_csv_scientific_notation(tmp_path):
    ds = dd.load_csv(_write(tmp_path, "1e-3,2.5E2\n-1e0,0\n"))
    np.testing.assert_array_equal(ds.values, [[1e-3, 250.0], [-1.0, 0.0]])


def test_load_csv_bad_cell_coordinates(tmp_path):
    path = _write(tmp_path, "date,a,b\nd1,1,2\nd2,oops,4\n")
    with pytest.raises(ParseError) as exc:
        dd.load_csv(path)
    assert "row 3" in str(exc.value)
    assert "column 2" in str(exc.value)


def test_load_csv_rejects_non_finite(tmp_path):
    with pytest.raises(ParseError):
        dd.load_csv(_write(tmp_path, "1,2\n3,nan\n"))
    with pytest.raises(ParseError):
        dd.load_csv(_write(tmp_path, "1,2\n1,inf\n"))


def test_load_csv_rejects_ragged_rows(tmp_path):
    with pytest.raises(ParseError) as exc:
        dd.load_csv(_write(tmp_path, "1,2\n3\n"))
    assert "row 2" in str(exc.value)


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(DataError):
        dd.load_csv(tmp_path / "absent.csv")


def test_load_csv_empty_and_header_only(tmp_path):
    with pytest.raises(DataError):
        dd.load_csv(_write(tmp_path, ""))
    with pytest.raises(DataError):
        dd.load_csv(_write(tmp_path, "a,b\n"))


def test_load_csv_date_column_only(tmp_path):
    with pytest.raises(DataError):
        dd.load_csv(_write(tmp_path, "date\nd1\n"))


# -- dataset / windows --------------------------------------------------------------


def test_dataset_validation():
    with pytest.raises(ContractError):
        dd.Dataset("x", np.zeros(5), ["a"])
    with pytest.raises(ContractError):
        dd.Dataset("x", np.array([[1.0, np.inf]]), ["a", "b"])
    with pytest.raises(ContractError):
        dd.Dataset("x", np.zeros((3, 2)), ["only-one"])


def test_window_spec_span():
    assert dd.WindowSpec(96, 24).span == 120
    with pytest.raises(ContractError):
        dd.WindowSpec(0, 5)


def test_windows_content_and_count():
    seg = np.arange(14, dtype=np.float64).reshape(7, 2)
    spec = dd.WindowSpec(3, 2)
    pairs = list(dd.windows(seg, spec))
    assert len(pairs) == dd.window_count(7, spec) == 3
    x0, y0 = pairs[0]
    np.testing.assert_array_equal(x0, seg[0:3])
    np.testing.assert_array_equal(y0, seg[3:5])
    x2, y2 = pairs[2]
    np.testing.assert_array_equal(x2, seg[2:5])
    np.testing.assert_array_equal(y2, seg[5:7])


def test_windows_short_segment_warns_and_yields_nothing():
    seg = np.zeros((4, 1))
    with pytest.warns(UserWarning):
        pairs = list(dd.windows(seg, dd.WindowSpec(3, 2)))
    assert pairs == []
    assert dd.window_count(4, dd.WindowSpec(3, 2)) == 0


@given(rows=st.integers(0, 300), lookback=st.integers(1, 48), horizon=st.integers(1, 48))
@settings(max_examples=60, deadline=None)
def test_window_count_matches_enumeration(rows, lookback, horizon):
    spec = dd.WindowSpec(lookback, horizon)
    expected = max(0, rows - spec.span + 1)
    assert dd.window_count(rows, spec) == expected


# -- split -----------------------------------------------------------------------


def test_split_decimal_ratio_hazard():
    # 0.7 + 0.1 is 0.7999... in binary; the boundary must still land on 8
    ds = dd.Dataset("x", np.arange(20).reshape(10, 2).astype(float), ["a", "b"])
    res = dd.split(ds, (0.7, 0.1, 0.2))
    assert (len(res.train), len(res.val), len(res.test)) == (7, 1, 2)
    assert res.boundaries == (7, 8)
    np.testing.assert_array_equal(np.vstack([res.train, res.val, res.test]), ds.values)


def test_split_warns_on_short_segments():
    ds = dd.Dataset("x", np.zeros((30, 1)), ["a"])
    res = dd.split(ds, (0.6, 0.2, 0.2), window_spec=dd.WindowSpec(8, 4))
    assert len(res.warnings) == 2  # val and test get 6 rows each, span is 12
    assert all("yields no windows" in w for w in res.warnings)


def test_split_rejects_bad_ratios():
    ds = dd.Dataset("x", np.zeros((10, 1)), ["a"])
    with pytest.raises(ContractError):
        dd.split(ds, (0.5, 0.5))
    with pytest.raises(ContractError):
        dd.split(ds, (0.5, 0.4, 0.2))
    with pytest.raises(ContractError):
        dd.split(ds, (-0.1, 0.6, 0.5))


@given(
    rows=st.integers(3, 500),
    cut=st.tuples(st.integers(1, 8), st.integers(1, 8), st.integers(1, 8)),
)
@settings(max_examples=60, deadline=None)
def test_split_is_a_partition(rows, cut):
    total = sum(cut)
    ratios = tuple(c / total for c in cut)
    ds = dd.Dataset("x", np.arange(rows, dtype=float)[:, None], ["a"])
    res = dd.split(ds, ratios)
    joined = np.vstack([res.train, res.val, res.test])
    np.testing.assert_array_equal(joined, ds.values)
    b1, b2 = res.boundaries
    assert 0 <= b1 <= b2 <= rows


# -- normalization -----------------------------------------------------------------


def test_normalize_round_trip():
    rng = np.random.default_rng(4)
    values = rng.normal(loc=5.0, scale=3.0, size=(50, 3))
    stats = dd.normalize_stats(values)
    normed = dd.apply_stats(values, stats)
    np.testing.assert_allclose(normed.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(normed.std(axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(dd.invert_stats(normed, stats), values, atol=1e-12)


def test_normalize_constant_channel_floor():
    values = np.full((10, 1), 7.0)
    stats = dd.normalize_stats(values)
    assert stats.std[0] == 1e-8
    normed = dd.apply_stats(values, stats)
    assert np.all(np.isfinite(normed))
    np.testing.assert_allclose(normed, 0, atol=1e-12)


# -- synthetic datasets ---------------------------------------------------------------


def test_synth_dataset_channels_differ_but_reseed_reproduces():
    spec = SyntheticPeriodicSignal(
        period=12, repeats=6, harmonic_coeffs=(1.0, 0.3), residual_sigma=0.2, seed=5
    )
    a = dd.synth_dataset(spec, channels=3)
    b = dd.synth_dataset(spec, channels=3)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.channels == 3 and a.rows == 72
    assert not np.array_equal(a.values[:, 0], a.values[:, 1])


def test_hourly_standin_shape_and_determinism():
    ds = dd.hourly_standin(400, channels=7, seed=0)
    assert ds.values.shape == (400, 7)
    assert ds.channel_names[-1] == "target"
    assert ds.channel_names[0] == "sensor_1"
    assert len(ds.timestamps) == 400
    assert ds.timestamps[0] == "2016-07-01 00:00:00"
    assert ds.timestamps[25] == "2016-07-02 01:00:00"
    again = dd.hourly_standin(400, channels=7, seed=0)
    np.testing.assert_array_equal(ds.values, again.values)


def test_hourly_standin_has_daily_structure():
    ds = dd.hourly_standin(24 * 40, channels=2, seed=1)
    col = ds.values[:, -1] - ds.values[:, -1].mean()
    spectrum = np.abs(np.fft.rfft(col)) ** 2
    spectrum[0] = 0.0
    daily_bin = 24 * 40 // 24
    assert spectrum.argmax() == daily_bin
