"""Feature-based probabilistic AF classifier (multinomial logistic regression)."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ParseError
from .signals import Dataset, Signal

FEATURE_NAMES = (
    "interval_mean_s",
    "interval_std_s",
    "interval_cv",
    "rmssd_s",
    "spectral_entropy",
    "hf_residual_power",
    "peak_rate_hz",
)
FEATURE_VERSION = "features-v1"
FEATURE_SCHEMA_HASH = hashlib.sha256(
    (FEATURE_VERSION + ":" + ",".join(FEATURE_NAMES)).encode()
).digest()

MAX_HEART_RATE_HZ = 3.5
PEAK_HEIGHT_FRACTION = 0.5
CLF_MAGIC = b"CLF1"


def detect_peaks(signal: Signal) -> np.ndarray:
    """Systolic peak indices.

    The signal is detrended by a ~1 s moving average, then local maxima
    above ``min + 0.5 * range`` of the detrended trace are kept if at least
    ``sample_rate / 3.5`` samples apart (3.5 Hz physiological ceiling).
    """
    x = signal.samples
    fs = signal.sample_rate_hz
    w = int(fs) | 1
    if x.size >= w:
        x = x - kernels.reflect_convolve(x, np.full(w, 1.0 / w))
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        return np.empty(0, dtype=np.int64)
    distance = int(fs / MAX_HEART_RATE_HZ)
    return kernels.local_peaks(x, max(distance, 1), lo + PEAK_HEIGHT_FRACTION * (hi - lo))


def _spectral_entropy(x):
    p = np.abs(np.fft.rfft(x - x.mean()))[1:] ** 2
    total = p.sum()
    if p.size < 2 or total <= 0:
        return 0.0
    p = p / total
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum() / np.log(p.size))


def extract_features(signal: Signal) -> np.ndarray:
    """Fixed-order feature vector, see ``FEATURE_NAMES``.

    Interval features need at least two peaks and fall back to 0 otherwise;
    a flat signal has spectral entropy 0.
    """
    x = signal.samples
    if x.size < 2:
        raise ValueError("signal needs at least 2 samples")
    fs = signal.sample_rate_hz
    peaks = detect_peaks(signal)
    iv = np.diff(peaks) / fs
    if iv.size >= 1:
        mean_iv = float(iv.mean())
        std_iv = float(iv.std())
        cv = std_iv / mean_iv
        rmssd = float(np.sqrt(np.mean(np.diff(iv) ** 2))) if iv.size >= 2 else 0.0
    else:
        mean_iv = std_iv = cv = rmssd = 0.0
    smooth_w = min(5, x.size if x.size % 2 else x.size - 1)
    smooth = kernels.reflect_convolve(x, np.full(smooth_w, 1.0 / smooth_w))
    hf = float(np.mean((x - smooth) ** 2))
    rate = peaks.size * fs / x.size
    return np.array([mean_iv, std_iv, cv, rmssd, _spectral_entropy(x), hf, rate])


def feature_matrix(signals) -> np.ndarray:
    return np.stack([extract_features(s) for s in signals]) if signals else np.empty((0, len(FEATURE_NAMES)))


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(weights, biases, features, labels):
    """Mean cross-entropy and its gradients ``(loss, dW, db)``."""
    features = np.atleast_2d(features)
    labels = np.asarray(labels, dtype=np.int64)
    logits = features @ weights.T + biases
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = features.shape[0]
    loss = -float(logp[np.arange(n), labels].mean())
    delta = np.exp(logp)
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    return loss, delta.T @ features, delta.sum(axis=0)


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    feature_mean: np.ndarray
    feature_std: np.ndarray  # 0 marks a constant feature, which is zeroed
    weights: np.ndarray  # (K, F)
    biases: np.ndarray  # (K,)

    @property
    def n_classes(self):
        return self.weights.shape[0]

    def standardize(self, features):
        f = np.atleast_2d(features) - self.feature_mean
        safe = np.where(self.feature_std > 0, self.feature_std, 1.0)
        return np.where(self.feature_std > 0, f / safe, 0.0)

    def predict_features(self, features):
        return softmax(self.standardize(features) @ self.weights.T + self.biases)


@dataclass(frozen=True)
class ClassifierConfig:
    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0


def fit_logistic(features, labels, config: ClassifierConfig = ClassifierConfig(), n_classes: int = 2):
    """Minibatch SGD on mean cross-entropy; returns ``(weights, biases)``."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    if np.unique(labels).size < 2:
        raise ValueError("training set must contain at least two classes")
    rng = np.random.default_rng(int(config.seed) & 0xFFFFFFFFFFFFFFFF)
    w = np.zeros((n_classes, features.shape[1]))
    b = np.zeros(n_classes)
    n = features.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            _, dw, db = cross_entropy(w, b, features[idx], labels[idx])
            w -= config.learning_rate * dw
            b -= config.learning_rate * db
    return w, b


def train_classifier(train: Dataset, validation: Dataset | None = None,
                     config: ClassifierConfig = ClassifierConfig()) -> ClassifierModel:
    """Standardize features on ``train`` and fit the logistic head.

    ``validation`` is accepted for interface symmetry; the fit itself uses a
    fixed epoch budget.
    """
    labels = train.labels
    if np.unique(labels).size < 2:
        raise ValueError("training set must contain both classes")
    feats = feature_matrix([r.signal for r in train.records])
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std = np.where(std > 1e-12, std, 0.0)
    shell = ClassifierModel(mean, std, np.zeros((2, feats.shape[1])), np.zeros(2))
    w, b = fit_logistic(shell.standardize(feats), labels, config)
    return ClassifierModel(mean, std, w, b)


def predict(model: ClassifierModel, signal: Signal) -> np.ndarray:
    return model.predict_features(extract_features(signal))[0]


def predict_many(model: ClassifierModel, signals) -> np.ndarray:
    return model.predict_features(feature_matrix(list(signals)))


def classifier_to_bytes(model: ClassifierModel) -> bytes:
    """``CLF1``, u16 version, 32-byte feature schema hash, u32 K, u32 F, then
    f64 feature mean, std, weights (K x F row-major), biases."""
    k, f = model.weights.shape
    parts = [CLF_MAGIC, struct.pack("<H", 1), FEATURE_SCHEMA_HASH, struct.pack("<II", k, f)]
    for arr in (model.feature_mean, model.feature_std, model.weights, model.biases):
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def classifier_from_bytes(buf: bytes) -> ClassifierModel:
    if buf[:4] != CLF_MAGIC:
        raise ParseError("bad magic, not a CLF1 model")
    (version,) = struct.unpack("<H", buf[4:6])
    if version != 1:
        raise ParseError(f"unsupported classifier version {version}")
    if buf[6:38] != FEATURE_SCHEMA_HASH:
        raise ParseError("classifier was trained with a different feature extractor; retrain it")
    k, f = struct.unpack("<II", buf[38:46])
    need = 46 + 8 * (2 * f + k * f + k)
    if len(buf) != need:
        raise ParseError(f"classifier payload is {len(buf)} bytes, expected {need}")
    vals = np.frombuffer(buf[46:], dtype="<f8").astype(np.float64)
    mean, std = vals[:f], vals[f:2 * f]
    w = vals[2 * f:2 * f + k * f].reshape(k, f)
    b = vals[2 * f + k * f:]
    return ClassifierModel(mean, std, w, b)
