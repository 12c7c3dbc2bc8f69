"""Dataset construction: splits, normalization, windows, stacking, file io."""

import numpy as np
import pytest

from lobkit.dataset import (
    DatasetBundle,
    NormalizationStats,
    Segment,
    SplitSpec,
    apply_zscore,
    build_fi2010_bundle,
    build_stock_bundle,
    fit_normalization,
    invert_zscore,
    make_622,
    make_observations,
    read_dataset,
    split_by_days,
    stack_stocks,
    write_dataset,
)
from lobkit.errors import (
    BadMagic,
    ChecksumMismatch,
    ConfigError,
    IncompatibleParams,
    InsufficientDays,
    SeriesTooShort,
    TruncatedPayload,
    VersionUnsupported,
    ZeroVariance,
)
from lobkit.ingest import Fi2010Set
from lobkit.labeling import LabelParams, label
from lobkit.synthetic import generate_days

DAYS10 = [f"2021-07-{d:02d}" for d in range(1, 11)]


def test_make_622_ten_days():
    spec = make_622(DAYS10)
    assert spec.train_days == tuple(DAYS10[:6])
    assert spec.val_days == tuple(DAYS10[6:8])
    assert spec.test_days == tuple(DAYS10[8:])


def test_make_622_insufficient():
    with pytest.raises(InsufficientDays):
        make_622(DAYS10[:5])


def test_split_spec_ordering_enforced():
    with pytest.raises(ConfigError):
        SplitSpec(("2021-07-05",), ("2021-07-01",), ("2021-07-09",))
    with pytest.raises(ConfigError):
        SplitSpec(("a", "a"), ("b",), ("c",))


def test_fit_normalization_hand_example():
    # two single-level records: prices {100,102}, volumes {10,30}
    recs = np.array([[100.0, 10.0, 100.0, 10.0], [102.0, 30.0, 102.0, 30.0]])
    stats = fit_normalization([recs])
    assert stats.price_mean == 101.0
    assert stats.volume_mean == 20.0
    assert stats.price_std == 1.0  # population convention
    assert stats.volume_std == 10.0


def test_fit_normalization_zero_variance():
    recs = np.array([[100.0, 10.0, 100.0, 10.0]] * 4)
    with pytest.raises(ZeroVariance):
        fit_normalization([recs])


def test_zscore_identities(rng):
    recs = rng.uniform(1, 100, size=(50, 8))
    stats = fit_normalization([recs])
    z = apply_zscore(recs, stats)
    prices = z[:, [0, 2, 4, 6]]
    vols = z[:, [1, 3, 5, 7]]
    assert abs(prices.mean()) < 1e-9
    assert abs(prices.std() - 1) < 1e-9
    assert abs(vols.mean()) < 1e-9
    assert abs(vols.std() - 1) < 1e-9
    # x = mean -> 0; x = mean + std -> 1
    probe = np.array([[stats.price_mean, stats.volume_mean + stats.volume_std] * 4])[:, :8]
    zp = apply_zscore(probe, stats)
    assert zp[0, 0] == 0.0
    assert zp[0, 1] == pytest.approx(1.0)


def test_zscore_inverse_recovery(rng):
    recs = rng.uniform(1, 100, size=(30, 8))
    stats = fit_normalization([recs])
    back = invert_zscore(apply_zscore(recs, stats), stats)
    assert np.allclose(back, recs, rtol=1e-9)


def test_make_observations_counts(rng):
    feats = rng.normal(size=(20, 8))
    mids = rng.uniform(99, 101, size=20)
    w, labs, first_t = make_observations(feats, mids, h=10, params=LabelParams(5, 0.002))
    assert w.shape == (6, 10, 8)
    assert len(labs) == 6
    assert first_t == 9


def test_make_observations_boundary_single():
    feats = np.zeros((15, 8))
    mids = np.linspace(100, 101, 15)
    w, labs, _ = make_observations(feats, mids, h=10, params=LabelParams(5, 0.002))
    assert len(w) == 1


def test_make_observations_too_short():
    with pytest.raises(SeriesTooShort):
        make_observations(np.zeros((14, 8)), np.ones(14), h=10, params=LabelParams(5, 0.002))


def test_make_observations_labels_match_recompute(rng):
    feats = rng.normal(size=(60, 8))
    mids = 100 * np.exp(np.cumsum(rng.normal(0, 0.003, size=60)))
    params = LabelParams(3, 0.002)
    w, labs, first_t = make_observations(feats, mids, h=5, params=params)
    for j, lab in enumerate(labs):
        assert lab == int(label(mids, first_t + j, params))
    # windows hold the h rows ending at the origin
    assert np.allclose(w[0], feats[0:5])
    assert np.allclose(w[-1], feats[first_t + len(labs) - 1 - 4 : first_t + len(labs)])


@pytest.fixture(scope="module")
def stock_bundle():
    days = generate_days(5, 10, 3000, symbol="AAA")
    spec = make_622([d.date for d in days])
    return build_stock_bundle(days, spec, LabelParams(2, 0.002), h=10)


def test_build_stock_bundle_shapes(stock_bundle):
    b = stock_bundle
    assert b.windows["train"].shape[1:] == (10, 40)
    assert b.n("train") > b.n("val") > 0
    assert b.n("test") > 0
    assert b.meta["stats_per_stock"]["AAA"]["fitted_on"] == "train+val"
    assert b.meta["stats_per_stock"]["AAA"]["std_convention"] == "population"
    # one origin segment per day
    assert len(b.segments["train"]) == 6
    assert len(b.segments["val"]) == 2
    assert len(b.segments["test"]) == 2


def test_split_by_days_whole_day_assignment():
    days = generate_days(5, 10, 500, symbol="AAA")
    spec = make_622([d.date for d in days])
    split = split_by_days(days, spec)
    assert [d.date for d in split["train"]] == list(spec.train_days)
    assert [d.date for d in split["test"]] == list(spec.test_days)


def test_stack_stocks_counts_and_origins(stock_bundle):
    days_b = generate_days(6, 10, 3000, symbol="BBB")
    spec = make_622([d.date for d in days_b])
    bundle_b = build_stock_bundle(days_b, spec, LabelParams(2, 0.002), h=10)
    stacked = stack_stocks([stock_bundle, bundle_b])
    assert stacked.n("train") == stock_bundle.n("train") + bundle_b.n("train")
    assert stacked.meta["stocks"] == ["AAA", "BBB"]
    # per-stock shares recomputed from stacked segments equal pre-stack
    at = 0
    for seg in stacked.segments["train"]:
        chunk = stacked.labels["train"][at : at + seg.count]
        at += seg.count
    assert at == stacked.n("train")
    a_count = sum(s.count for s in stacked.segments["train"] if s.stock == "AAA")
    labs_a = stacked.labels["train"][:a_count]
    assert np.array_equal(labs_a, stock_bundle.labels["train"])


def test_stack_stocks_incompatible_params(stock_bundle):
    days_b = generate_days(6, 10, 3000, symbol="BBB")
    spec = make_622([d.date for d in days_b])
    bundle_b = build_stock_bundle(days_b, spec, LabelParams(2, 0.002), h=12)
    with pytest.raises(IncompatibleParams):
        stack_stocks([stock_bundle, bundle_b])


def test_fi2010_bundle_split_counts(rng):
    n_train, n_test, h = 100, 40, 10
    feats_tr = rng.uniform(1, 10, size=(n_train, 40))
    labs_tr = rng.integers(0, 3, size=(n_train, 5)).astype(np.int8)
    feats_te = rng.uniform(1, 10, size=(n_test, 40))
    labs_te = rng.integers(0, 3, size=(n_test, 5)).astype(np.int8)
    tr = Fi2010Set(feats_tr, labs_tr, "train")
    te = Fi2010Set(feats_te, labs_te, "test")
    bundle = build_fi2010_bundle(tr, te, k=5, h=h, normalize=True)
    windows_total = n_train - h + 1  # 91
    n_val = round(0.2 * windows_total)
    assert bundle.n("train") == windows_total - n_val
    assert bundle.n("val") == n_val
    assert bundle.n("test") == n_test - h + 1
    # shipped labels at the window end
    assert bundle.labels["train"][0] == labs_tr[h - 1, 3]


# ---------------------------------------------------------------------------
# LOBD file io
# ---------------------------------------------------------------------------


def test_lobd_round_trip_bit_exact(tmp_path, stock_bundle):
    path = tmp_path / "d.lobd"
    write_dataset(stock_bundle, path)
    back = read_dataset(path)
    assert back == stock_bundle
    # determinism: identical bytes on rewrite
    path2 = tmp_path / "d2.lobd"
    write_dataset(stock_bundle, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_lobd_checksum_mismatch(tmp_path, stock_bundle):
    path = tmp_path / "d.lobd"
    write_dataset(stock_bundle, path)
    blob = bytearray(path.read_bytes())
    blob[len(blob) // 2] ^= 0x01
    path.write_bytes(bytes(blob))
    with pytest.raises(ChecksumMismatch):
        read_dataset(path)


def test_lobd_bad_magic(tmp_path):
    path = tmp_path / "x.lobd"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(BadMagic):
        read_dataset(path)


def test_lobd_version_unsupported(tmp_path, stock_bundle):
    path = tmp_path / "d.lobd"
    write_dataset(stock_bundle, path)
    blob = bytearray(path.read_bytes())
    blob[4:6] = (99).to_bytes(2, "little")
    path.write_bytes(bytes(blob))
    with pytest.raises(VersionUnsupported):
        read_dataset(path)


def test_lobd_truncated(tmp_path, stock_bundle):
    path = tmp_path / "d.lobd"
    write_dataset(stock_bundle, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(TruncatedPayload):
        read_dataset(path)


def test_segment_round_trip(tmp_path):
    bundle = DatasetBundle(
        windows={"train": np.zeros((3, 2, 8), np.float32)},
        labels={"train": np.array([0, 1, 2], np.int8)},
        segments={"train": [Segment("AAA", "2021-07-01", 9, 3)], "val": [], "test": []},
        meta={"k": 1, "theta": 0.002, "h": 2, "stride": 10, "levels": 2},
    )
    path = tmp_path / "seg.lobd"
    write_dataset(bundle, path)
    back = read_dataset(path)
    assert back.segments["train"] == [Segment("AAA", "2021-07-01", 9, 3)]
