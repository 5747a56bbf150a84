import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppgdtuq.classifier import (FEATURE_NAMES, FEATURE_SCHEMA_HASH, ClassifierConfig, ClassifierModel,
                                classifier_from_bytes, classifier_to_bytes, cross_entropy, detect_peaks,
                                extract_features, fit_logistic, predict, predict_many, softmax,
                                train_classifier)
from ppgdtuq.errors import ParseError
from ppgdtuq.metrics import balanced_accuracy, confusion_at_threshold
from ppgdtuq.signals import Signal, SynthConfig, apply_global_range, fit_global_range, make_dataset

from conftest import make_ds
from gradcheck import numeric_grad, rel_error


def _pulse_train(period, n=800, fs=32.0):
    t = np.arange(n)
    x = np.zeros(n)
    for c in np.arange(period / 2, n, period):
        x += np.exp(-0.5 * ((t - c) / 1.5) ** 2)
    return Signal(x, fs)


def test_constant_signal_sentinels():
    f = extract_features(Signal(np.full(100, 0.4)))
    assert f.shape == (len(FEATURE_NAMES),)
    exact = [n for n in FEATURE_NAMES if n != "hf_residual_power"]
    assert all(f[FEATURE_NAMES.index(n)] == 0.0 for n in exact)
    assert f[FEATURE_NAMES.index("hf_residual_power")] < 1e-30


@pytest.mark.parametrize("period", [20, 24.5, 32, 41])
def test_pulse_train_period_recovered(period):
    peaks = detect_peaks(_pulse_train(period))
    assert abs(np.diff(peaks).mean() - period) <= 1
    f = extract_features(_pulse_train(period))
    assert abs(f[FEATURE_NAMES.index("interval_mean_s")] * 32 - period) <= 1


def test_peak_spacing_respects_heart_rate_ceiling(rng):
    x = Signal(rng.normal(size=800))
    assert np.all(np.diff(detect_peaks(x)) >= int(32 / 3.5))


def test_features_deterministic_and_finite():
    s = make_dataset(SynthConfig(), 2, "test", seed=3).records[1].signal
    a, b = extract_features(s), extract_features(s)
    assert np.array_equal(a, b) and np.all(np.isfinite(a))


def test_short_signal():
    with pytest.raises(ValueError):
        extract_features(Signal([1.0]))
    assert np.all(np.isfinite(extract_features(Signal([0.0, 1.0]))))


def test_separable_toy_reaches_full_accuracy():
    x = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    w, b = fit_logistic(x, y, ClassifierConfig(epochs=500, batch_size=2))
    pred = np.argmax(x @ w.T + b, axis=1)
    assert np.array_equal(pred, y)


def test_single_class_rejected():
    with pytest.raises(ValueError):
        fit_logistic(np.zeros((3, 2)), [1, 1, 1])
    with pytest.raises(ValueError):
        train_classifier(make_ds([np.linspace(0, 1, 64)] * 2, labels=[0, 0]))


def test_training_deterministic():
    ds = make_dataset(SynthConfig(duration_s=10), 10, "train", seed=4)
    a = train_classifier(ds, None, ClassifierConfig(epochs=20, seed=5))
    b = train_classifier(ds, None, ClassifierConfig(epochs=20, seed=5))
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.biases, b.biases)


@pytest.mark.parametrize("seed", range(10))
def test_cross_entropy_gradient(seed):
    r = np.random.default_rng(seed)
    k, f, n = int(r.integers(2, 5)), int(r.integers(1, 8)), int(r.integers(1, 12))
    w, b = r.normal(size=(k, f)), r.normal(size=k)
    x, y = r.normal(size=(n, f)), r.integers(0, k, size=n)
    _, dw, db = cross_entropy(w, b, x, y)
    assert rel_error(dw, numeric_grad(lambda v: cross_entropy(v, b, x, y)[0], w)) < 1e-4
    assert rel_error(db, numeric_grad(lambda v: cross_entropy(w, v, x, y)[0], b)) < 1e-4


def test_zero_model_predicts_uniform():
    m = ClassifierModel(np.zeros(7), np.ones(7), np.zeros((2, 7)), np.zeros(2))
    assert predict(m, Signal(np.sin(np.arange(800) / 3))).tolist() == [0.5, 0.5]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=6), st.floats(-100, 100))
def test_softmax_normalized_and_shift_invariant(logits, c):
    p = softmax(logits)
    assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-9
    np.testing.assert_allclose(softmax(np.asarray(logits) + c), p, atol=1e-12)


def test_stored_normalization_used_at_predict():
    ds = make_dataset(SynthConfig(duration_s=10), 10, "train", seed=4)
    m = train_classifier(ds, None, ClassifierConfig(epochs=10))
    feats = np.stack([extract_features(r.signal) for r in ds.records])
    np.testing.assert_array_equal(m.feature_mean, feats.mean(axis=0))
    # a single new signal must not be standardized by its own statistics
    s = ds.records[0].signal
    manual = softmax(((extract_features(s) - m.feature_mean) / np.where(m.feature_std > 0, m.feature_std, 1))
                     @ m.weights.T + m.biases)
    np.testing.assert_allclose(predict(m, s), manual, atol=1e-15)


def test_constant_feature_zeroed():
    m = ClassifierModel(np.array([1.0, 2.0]), np.array([0.0, 2.0]), np.zeros((2, 2)), np.zeros(2))
    assert m.standardize([5.0, 4.0]).tolist() == [[0.0, 1.0]]


@pytest.mark.slow
def test_held_out_balanced_accuracy():
    tr = make_dataset(SynthConfig(), 400, "train", seed=100)
    te = make_dataset(SynthConfig(), 400, "test", seed=200)
    lo, hi = fit_global_range(tr)
    tr, te = apply_global_range(tr, lo, hi), apply_global_range(te, lo, hi)
    m = train_classifier(tr, None, ClassifierConfig(seed=0))
    p = predict_many(m, [r.signal for r in te.records])
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    assert balanced_accuracy(confusion_at_threshold(p[:, 1], te.labels, 0.5)) > 0.85


def test_schema_hash_definition():
    expect = hashlib.sha256(("features-v1:" + ",".join(FEATURE_NAMES)).encode()).digest()
    assert FEATURE_SCHEMA_HASH == expect


def test_serialization_roundtrip_and_stale_schema():
    m = ClassifierModel(np.arange(7.0), np.ones(7), np.arange(14.0).reshape(2, 7), np.array([0.5, -0.5]))
    buf = classifier_to_bytes(m)
    back = classifier_from_bytes(buf)
    for name in ("feature_mean", "feature_std", "weights", "biases"):
        assert np.array_equal(getattr(back, name), getattr(m, name))
    stale = buf[:6] + bytes(32) + buf[38:]
    with pytest.raises(ParseError, match="feature extractor"):
        classifier_from_bytes(stale)
    with pytest.raises(ParseError):
        classifier_from_bytes(buf[:-8])
