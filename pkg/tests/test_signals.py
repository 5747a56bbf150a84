import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppgdtuq.classifier import FEATURE_NAMES, detect_peaks, extract_features
from ppgdtuq.errors import ConfigError, IntegrityError
from ppgdtuq.metrics import roc_auc
from ppgdtuq.signals import (Dataset, LabeledSignal, Signal, SynthConfig, add_noise, apply_global_range,
                             augment_dataset, fit_global_range, make_dataset, normalize_global, synth_ppg)

from conftest import make_ds


def test_default_synth_has_800_samples():
    rec = synth_ppg(SynthConfig(), 0)
    assert len(rec.signal) == 800
    assert rec.signal.sample_rate_hz == 32


def test_synth_is_deterministic():
    cfg = SynthConfig(seed=99)
    for label in (0, 1):
        a = synth_ppg(cfg, label).signal.samples
        b = synth_ppg(cfg, label).signal.samples
        assert a.tobytes() == b.tobytes()
    assert not np.array_equal(synth_ppg(cfg, 0).signal.samples, synth_ppg(cfg, 1).signal.samples)


def test_synth_output_in_unit_range():
    for s in range(10):
        x = synth_ppg(SynthConfig(seed=s), s % 2).signal.samples
        assert x.min() == 0.0 and x.max() == 1.0


@pytest.mark.parametrize("kw", [{"duration_s": 0}, {"sample_rate_hz": -1}, {"duration_s": 1.01},
                                {"af_interval_jitter": -0.1}])
def test_synth_config_rejects_bad_values(kw):
    with pytest.raises(ConfigError):
        SynthConfig(**kw)


def test_af_interval_cv_tracks_jitter():
    # Monte Carlo over 100 seeds with peak detection on the generated output
    cvs = []
    for s in range(100):
        x = synth_ppg(SynthConfig(af_interval_jitter=0.25, seed=s), 1).signal
        d = np.diff(detect_peaks(x))
        cvs.append(d.std() / d.mean())
    assert 0.25 * 0.7 <= np.mean(cvs) <= 0.25 * 1.3


def test_interval_cv_alone_separates_classes():
    ds = make_dataset(SynthConfig(), 100, "test", seed=7)
    feats = np.array([extract_features(r.signal) for r in ds.records])
    cv = feats[:, FEATURE_NAMES.index("interval_cv")]
    assert roc_auc(cv, ds.labels) > 0.8


def test_make_dataset_ids_and_balance():
    ds = make_dataset(SynthConfig(duration_s=5), 3, "validation", seed=1)
    assert ds.ids == [f"validation-{i:05d}" for i in range(6)]
    assert ds.labels.sum() == 3


def test_add_noise_sigma_zero_is_identity():
    s = Signal(np.linspace(0, 1, 50))
    out = add_noise(s, 0.0, seed=3)
    assert np.array_equal(out.samples, s.samples)


def test_add_noise_respects_clamps():
    s = Signal(np.r_[np.zeros(500), np.ones(500) * 2.0])
    out = add_noise(s, 0.1, 0.0, 2.0, seed=0).samples
    assert out.min() >= 0.0 and out.max() <= 2.0
    assert out.min() == 0.0 and out.max() == 2.0


def test_add_noise_half_normal_mean():
    clean = np.random.default_rng(5).uniform(0.3, 0.7, size=200_000)
    noisy = add_noise(Signal(clean), 0.1, seed=11).samples
    expected = 0.1 * np.sqrt(2 / np.pi)
    assert abs(np.mean(np.abs(noisy - clean)) - expected) < 0.05 * expected


def test_add_noise_negative_sigma():
    with pytest.raises(ValueError):
        add_noise(Signal([0.5]), -0.1)


def test_add_noise_seeded():
    s = Signal(np.full(100, 0.5))
    assert np.array_equal(add_noise(s, seed=4).samples, add_noise(s, seed=4).samples)
    assert not np.array_equal(add_noise(s, seed=4).samples, add_noise(s, seed=5).samples)


def test_augment_dataset_is_paired():
    ds = make_ds([np.full(10, 0.5), np.full(10, 0.4)])
    aug = augment_dataset(ds, seed=2)
    assert aug.paired
    assert np.array_equal(aug.clean["r000"].samples, ds.records[0].signal.samples)
    assert not np.array_equal(aug.records[0].signal.samples, ds.records[0].signal.samples)


def test_normalize_identity_on_unit_range():
    ds = make_ds([np.array([0.0, 0.3, 1.0])])
    out = normalize_global(ds)
    assert np.array_equal(out.records[0].signal.samples, [0.0, 0.3, 1.0])


def test_normalize_single_signal():
    out = normalize_global(make_ds([np.array([2.0, 4.0, 6.0])]))
    np.testing.assert_allclose(out.records[0].signal.samples, [0, 0.5, 1])


def test_normalize_global_range_across_signals():
    out = normalize_global(make_ds([np.array([0.0, 1, 2]), np.array([2.0, 3, 4])]))
    np.testing.assert_allclose(out.records[0].signal.samples, [0, 0.25, 0.5])
    np.testing.assert_allclose(out.records[1].signal.samples, [0.5, 0.75, 1])


def test_normalize_constant_dataset_fails():
    with pytest.raises(ValueError):
        normalize_global(make_ds([np.full(4, 3.0)]))
    with pytest.raises(ValueError):
        fit_global_range(Dataset("test", []))


def test_train_range_applied_to_other_splits_is_clipped():
    lo, hi = fit_global_range(make_ds([np.array([0.0, 2.0])]))
    out = apply_global_range(make_ds([np.array([-1.0, 1.0, 3.0])]), lo, hi)
    np.testing.assert_allclose(out.records[0].signal.samples, [0.0, 0.5, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20), min_size=1, max_size=5))
def test_normalized_dataset_attains_both_ends(arrays):
    flat = np.concatenate([np.asarray(a) for a in arrays])
    if flat.max() - flat.min() < 1e-6:
        return
    out = normalize_global(make_ds([np.asarray(a) for a in arrays]))
    allv = np.concatenate([r.signal.samples for r in out.records])
    assert allv.min() == 0.0 and allv.max() == 1.0


def test_duplicate_ids_rejected():
    s = Signal([0.1])
    with pytest.raises(IntegrityError):
        Dataset("test", [LabeledSignal("a", s, 0), LabeledSignal("a", s, 1)])


def test_signal_validation():
    with pytest.raises(ValueError):
        Signal([])
    with pytest.raises(ValueError):
        Signal([0.0, np.nan])
    with pytest.raises(ValueError):
        Signal([0.0], sample_rate_hz=0)
    with pytest.raises(ValueError):
        LabeledSignal("x", Signal([0.0]), 2)
