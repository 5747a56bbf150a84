"""Synthetic PPG generation, noise augmentation and global normalization."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, IntegrityError

DEFAULT_SAMPLE_RATE_HZ = 32.0
DEFAULT_DURATION_S = 25.0
NOISE_SIGMA = 0.1
CLAMP_LO = 0.0
CLAMP_HI = 2.0
SPLITS = ("train", "validation", "test")


@dataclass(frozen=True, eq=False)
class Signal:
    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("signal must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("signal samples must be finite")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    def with_samples(self, samples) -> Signal:
        return Signal(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class LabeledSignal:
    id: str
    signal: Signal
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 (non-AF) or 1 (AF), got {self.label!r}")


@dataclass
class Dataset:
    """Records of one split, optionally paired with clean counterparts by id.

    When ``clean`` is set the records hold the degraded (noisy) signals and
    ``clean[id]`` the unaugmented target for the same id.
    """

    split: str
    records: list[LabeledSignal] = field(default_factory=list)
    clean: dict[str, Signal] | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise IntegrityError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
        if self.clean is not None:
            missing = seen.symmetric_difference(self.clean)
            if missing:
                raise IntegrityError(f"unpaired ids: {sorted(missing)[:10]}")
            for rec in self.records:
                c = self.clean[rec.id]
                if len(c) != len(rec.signal) or c.sample_rate_hz != rec.signal.sample_rate_hz:
                    raise IntegrityError(f"paired variants of {rec.id!r} differ in length or rate")

    def __len__(self):
        return len(self.records)

    @property
    def ids(self):
        return [r.id for r in self.records]

    @property
    def labels(self):
        return np.array([r.label for r in self.records], dtype=np.int64)

    @property
    def paired(self):
        return self.clean is not None

    def clean_dataset(self) -> Dataset:
        if self.clean is None:
            raise IntegrityError("dataset has no clean counterparts")
        recs = [LabeledSignal(r.id, self.clean[r.id], r.label) for r in self.records]
        return Dataset(self.split, recs)

    def map_signals(self, fn, keep_clean=True) -> Dataset:
        recs = [LabeledSignal(r.id, fn(r.signal), r.label) for r in self.records]
        return Dataset(self.split, recs, self.clean if keep_clean else None)


@dataclass(frozen=True)
class SynthConfig:
    duration_s: float = DEFAULT_DURATION_S
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    beat_rate_hz: tuple[float, float] = (0.9, 1.6)
    af_interval_jitter: float = 0.15
    regular_interval_jitter: float = 0.03
    ectopic_probability: float = 0.02
    ectopic_prematurity: float = 0.35
    min_interval_s: float = 0.3
    systolic_width_s: float = 0.08
    diastolic_delay_s: float = 0.28
    diastolic_width_s: float = 0.12
    diastolic_amplitude: float = 0.45
    amplitude_jitter: float = 0.05
    wander_amplitude: tuple[float, float] = (0.05, 0.6)
    seed: int = 0

    def __post_init__(self):
        if not (self.duration_s > 0 and self.sample_rate_hz > 0):
            raise ConfigError("duration_s and sample_rate_hz must be positive")
        n = self.duration_s * self.sample_rate_hz
        if abs(n - round(n)) > 1e-9:
            raise ConfigError(f"duration x rate = {n} is not an integer sample count")
        lo, hi = self.beat_rate_hz
        if not 0 < lo <= hi:
            raise ConfigError(f"invalid beat rate range {self.beat_rate_hz}")
        if self.af_interval_jitter < 0 or self.regular_interval_jitter < 0:
            raise ConfigError("interval jitter must be nonnegative")
        if not 0 <= self.wander_amplitude[0] <= self.wander_amplitude[1]:
            raise ConfigError(f"invalid wander amplitude range {self.wander_amplitude}")
        if not 0 <= self.ectopic_probability <= 1 or not 0 <= self.ectopic_prematurity < 1:
            raise ConfigError("ectopic probability must be in [0, 1] and prematurity in [0, 1)")

    @property
    def num_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


def _intervals(rng, mean, cv, count, floor):
    if cv == 0:
        out = np.full(count, mean)
    else:
        shape = 1.0 / cv**2
        out = rng.gamma(shape, mean / shape, size=count)
    return np.maximum(out, floor)


def synth_ppg(config: SynthConfig, label: int, id: str | None = None) -> LabeledSignal:
    """Generate one synthetic PPG record.

    Each beat is a systolic Gaussian bump followed by a smaller diastolic one.
    The AF class differs only in its inter-beat interval variability, drawn
    from a gamma law whose coefficient of variation is ``af_interval_jitter``.
    Non-AF rhythms are near-regular but carry occasional premature beats
    (each followed by a compensatory pause), which gives the two classes a
    realistic overlap. The output is min-max scaled to [0, 1].
    """
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    rng = np.random.default_rng([int(config.seed) & 0xFFFFFFFFFFFFFFFF, int(label)])
    fs = config.sample_rate_hz
    n = config.num_samples
    t = np.arange(n) / fs

    rate = rng.uniform(*config.beat_rate_hz)
    mean_iv = 1.0 / rate
    cv = config.af_interval_jitter if label == 1 else config.regular_interval_jitter
    max_beats = int(np.ceil(config.duration_s / config.min_interval_s)) + 2
    iv = _intervals(rng, mean_iv, cv, max_beats, config.min_interval_s)
    ectopic = rng.random(max_beats) < config.ectopic_probability
    if label == 0 and ectopic[:-1].any():
        for i in np.flatnonzero(ectopic[:-1]):
            iv[i] *= 1.0 - config.ectopic_prematurity
            iv[i + 1] *= 1.0 + config.ectopic_prematurity
        iv = np.maximum(iv, config.min_interval_s)
    start = rng.uniform(-mean_iv, 0.0)
    beats = start + np.concatenate([[0.0], np.cumsum(iv)])
    beats = beats[beats < config.duration_s + mean_iv]
    amps = 1.0 + config.amplitude_jitter * rng.standard_normal(beats.size)

    dt = t[None, :] - beats[:, None]
    sys = np.exp(-0.5 * (dt / config.systolic_width_s) ** 2)
    dia = np.exp(-0.5 * ((dt - config.diastolic_delay_s) / config.diastolic_width_s) ** 2)
    x = (amps[:, None] * (sys + config.diastolic_amplitude * dia)).sum(axis=0)

    resp = rng.uniform(0.15, 0.35)
    phase = rng.uniform(0, 2 * np.pi)
    wander = rng.uniform(*config.wander_amplitude)
    x = x + wander * np.sin(2 * np.pi * resp * t + phase)

    x = (x - x.min()) / (x.max() - x.min())
    rid = id if id is not None else f"s{config.seed}-{label}"
    return LabeledSignal(rid, Signal(x, fs), label)


def make_dataset(config: SynthConfig, n_per_class: int, split: str, seed: int) -> Dataset:
    """Balanced split with per-record seeds ``seed XOR index``; labels alternate 0, 1."""
    recs = []
    for i in range(2 * n_per_class):
        cfg = dataclasses.replace(config, seed=int(seed) ^ i)
        recs.append(synth_ppg(cfg, i % 2, id=f"{split}-{i:05d}"))
    return Dataset(split, recs)


def add_noise(signal: Signal, sigma: float = NOISE_SIGMA, clamp_lo: float = CLAMP_LO,
              clamp_hi: float = CLAMP_HI, seed: int = 0) -> Signal:
    """Add zero-mean Gaussian noise of std ``sigma`` and clamp to [clamp_lo, clamp_hi]."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if not clamp_lo < clamp_hi:
        raise ValueError(f"clamp_lo must be below clamp_hi, got ({clamp_lo}, {clamp_hi})")
    x = signal.samples
    if sigma == 0:
        noisy = x.copy()
    else:
        rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
        noisy = x + rng.normal(0.0, sigma, size=x.shape)
    return signal.with_samples(np.clip(noisy, clamp_lo, clamp_hi))


def augment_dataset(dataset: Dataset, sigma: float = NOISE_SIGMA, clamp_lo: float = CLAMP_LO,
                    clamp_hi: float = CLAMP_HI, seed: int = 0) -> Dataset:
    """Noisy copy of ``dataset`` paired with its clean records (noise seed ``seed XOR index``)."""
    base = dataset.clean_dataset() if dataset.paired else dataset
    recs, clean = [], {}
    for i, r in enumerate(base.records):
        noisy = add_noise(r.signal, sigma, clamp_lo, clamp_hi, seed=int(seed) ^ i)
        recs.append(LabeledSignal(r.id, noisy, r.label))
        clean[r.id] = r.signal
    return Dataset(base.split, recs, clean)


def fit_global_range(dataset: Dataset) -> tuple[float, float]:
    if len(dataset) == 0:
        raise ValueError("cannot normalize an empty dataset")
    lo = min(float(r.signal.samples.min()) for r in dataset.records)
    hi = max(float(r.signal.samples.max()) for r in dataset.records)
    if not lo < hi:
        raise ValueError(f"degenerate global range: min = max = {lo}")
    return lo, hi


def apply_global_range(dataset: Dataset, lo: float, hi: float) -> Dataset:
    """Affine map [lo, hi] -> [0, 1]; samples outside the fitted range are clipped.

    Clipping only matters when the range was fitted on another split.
    """
    scale = hi - lo

    def f(s):
        return s.with_samples(np.clip((s.samples - lo) / scale, 0.0, 1.0))

    out = dataset.map_signals(f, keep_clean=False)
    if dataset.clean is not None:
        out.clean = {k: f(v) for k, v in dataset.clean.items()}
    return out


def normalize_global(dataset: Dataset) -> Dataset:
    lo, hi = fit_global_range(dataset)
    return apply_global_range(dataset, lo, hi)
