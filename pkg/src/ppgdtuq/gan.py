"""Conditional least-squares GAN denoiser on fixed-length windows.

The discriminator sees a condition/candidate pair (noisy window
concatenated with either the clean or the generated window) and emits a
vector of patch logits. Losses reduce every squared or absolute norm to a
mean over elements, which keeps magnitudes independent of window length and
batch size.

Signals live in [0, 2] after augmentation; the network boundary shifts them
to [-1, 1] to match the tanh output of the generator.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import IntegrityError, NumericError, ParseError, TrainingError
from .neural import Gradients, Net, backward, forward, init_net, net_from_bytes, net_to_bytes, sgd_step
from .signals import Dataset, Signal

GAN_MAGIC = b"GAN1"


def to_gan_range(x):
    return np.asarray(x, dtype=np.float64) - 1.0


def from_gan_range(y):
    return np.asarray(y, dtype=np.float64) + 1.0


def d_loss(d_real, d_fake) -> float:
    d_real = np.asarray(d_real, dtype=np.float64)
    d_fake = np.asarray(d_fake, dtype=np.float64)
    if d_real.size == 0 or d_fake.size == 0:
        raise ValueError("discriminator outputs must be non-empty")
    if d_real.shape != d_fake.shape:
        raise ValueError(f"shape mismatch {d_real.shape} vs {d_fake.shape}")
    return 0.5 * (float(np.mean((d_real - 1.0) ** 2)) + float(np.mean(d_fake**2)))


def d_loss_grad(d_real, d_fake):
    """Gradients of :func:`d_loss` with respect to ``d_real`` and ``d_fake``."""
    d_real = np.asarray(d_real, dtype=np.float64)
    d_fake = np.asarray(d_fake, dtype=np.float64)
    return (d_real - 1.0) / d_real.size, d_fake / d_fake.size


def g_loss(d_fake, generated, target, lambda_l1: float = 100.0):
    """Returns ``(total, gan_term, l1_term)``."""
    d_fake = np.asarray(d_fake, dtype=np.float64)
    generated = np.asarray(generated, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if generated.shape != target.shape:
        raise ValueError(f"generated {generated.shape} and target {target.shape} differ")
    if d_fake.size == 0 or generated.size == 0:
        raise ValueError("inputs must be non-empty")
    gan_term = float(np.mean((d_fake - 1.0) ** 2))
    l1_term = lambda_l1 * float(np.mean(np.abs(target - generated)))
    return gan_term + l1_term, gan_term, l1_term


def g_loss_grad(d_fake, generated, target, lambda_l1: float = 100.0):
    """Gradients of the total generator loss w.r.t. ``d_fake`` and ``generated``.

    The L1 subgradient at ``generated == target`` is taken as zero.
    """
    d_fake = np.asarray(d_fake, dtype=np.float64)
    generated = np.asarray(generated, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    g_d = 2.0 * (d_fake - 1.0) / d_fake.size
    g_gen = lambda_l1 * np.sign(generated - target) / generated.size
    return g_d, g_gen


@dataclass(frozen=True, eq=False)
class GanModel:
    generator: Net
    discriminator: Net
    window_length: int
    stride: int
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        w = self.window_length
        if self.generator.in_dim != w or self.generator.out_dim != w:
            raise ValueError(f"generator must map {w} -> {w}")
        if self.discriminator.in_dim != 2 * w:
            raise ValueError(f"discriminator input must be {2 * w}")
        if not 1 <= self.stride <= w:
            raise ValueError(f"stride must be in [1, {w}], got {self.stride}")


@dataclass(frozen=True)
class GanTrainConfig:
    lr_discriminator: float = 1e-5
    lr_generator: float = 2e-4
    lambda_l1: float = 100.0
    patience: int = 3
    max_epochs: int = 30
    batch_size: int = 16
    seed: int = 0
    window_length: int = 64
    stride: int = 16
    generator_hidden: tuple[int, ...] = (128, 128)
    discriminator_hidden: tuple[int, ...] = (64,)
    n_patches: int = 8

    def __post_init__(self):
        if not (self.lr_discriminator > 0 and self.lr_generator > 0):
            raise ValueError("learning rates must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 0 or self.batch_size < 1:
            raise ValueError("max_epochs must be >= 0 and batch_size >= 1")


def init_gan(config: GanTrainConfig) -> GanModel:
    w = config.window_length
    gh = list(config.generator_hidden)
    # leaky encoder side, relu decoder side, tanh output
    g_acts = ["leaky_relu"] + ["relu"] * (len(gh) - 1) + ["tanh"]
    gen = init_net([w, *gh, w], g_acts, seed=config.seed * 2 + 1)
    dh = list(config.discriminator_hidden)
    disc = init_net([2 * w, *dh, config.n_patches], ["leaky_relu"] * len(dh) + ["identity"],
                    seed=config.seed * 2 + 2)
    return GanModel(gen, disc, w, config.stride)


def window_starts(n: int, window: int, stride: int) -> np.ndarray:
    """Window starts every ``stride`` samples plus a final window flush with the end."""
    if n < window:
        raise ValueError(f"signal of length {n} shorter than window {window}")
    starts = list(range(0, n - window + 1, stride))
    if starts[-1] != n - window:
        starts.append(n - window)
    return np.asarray(starts, dtype=np.int64)


def _windows(x, starts, window):
    return np.stack([x[s:s + window] for s in starts])


def paired_windows(dataset: Dataset, window: int, stride: int):
    """Stack (noisy, clean) windows from a paired dataset, in record order."""
    if dataset.clean is None:
        raise IntegrityError("GAN training requires a paired noisy/clean dataset")
    noisy, clean = [], []
    for rec in dataset.records:
        a = rec.signal.samples
        b = dataset.clean[rec.id].samples
        starts = window_starts(a.size, window, stride)
        noisy.append(_windows(a, starts, window))
        clean.append(_windows(b, starts, window))
    if not noisy:
        return np.empty((0, window)), np.empty((0, window))
    return to_gan_range(np.concatenate(noisy)), to_gan_range(np.concatenate(clean))


def generate(model: GanModel, a):
    out, _ = forward(model.generator, a)
    return out


def validation_l1(model: GanModel, a, b) -> float:
    """Mean absolute error of the generator on stacked windows (no lambda)."""
    if a.shape[0] == 0:
        return float("nan")
    return float(np.mean(np.abs(b - generate(model, a))))


def train_step(model: GanModel, a, b, config: GanTrainConfig):
    """One discriminator update followed by one generator update on a batch.

    Returns the updated model and ``(d_loss, g_total, g_gan, g_l1)``.
    """
    gen, disc = model.generator, model.discriminator
    w = model.window_length

    fake, g_cache = forward(gen, a)
    real_pair = np.concatenate([a, b], axis=1)
    fake_pair = np.concatenate([a, fake], axis=1)
    d_real, c_real = forward(disc, real_pair)
    d_fake, c_fake = forward(disc, fake_pair)
    ld = d_loss(d_real, d_fake)
    gr, gf = d_loss_grad(d_real, d_fake)
    grads_r, _ = backward(disc, c_real, gr)
    grads_f, _ = backward(disc, c_fake, gf)
    summed = [x + y for x, y in zip(grads_r.params(), grads_f.params())]
    disc = sgd_step(disc, Gradients(tuple(summed[0::2]), tuple(summed[1::2])), config.lr_discriminator)

    d_fake2, c_fake2 = forward(disc, fake_pair)
    total, gan_term, l1_term = g_loss(d_fake2, fake, b, config.lambda_l1)
    g_d, g_gen = g_loss_grad(d_fake2, fake, b, config.lambda_l1)
    _, d_input = backward(disc, c_fake2, g_d)
    g_gen = g_gen + d_input[:, w:]
    grads_g, _ = backward(gen, g_cache, g_gen)
    gen = sgd_step(gen, grads_g, config.lr_generator)
    return GanModel(gen, disc, w, model.stride), (ld, total, gan_term, l1_term)


def train_gan(train: Dataset, validation: Dataset, config: GanTrainConfig | None = None,
              model: GanModel | None = None) -> GanModel:
    """Alternating discriminator-then-generator SGD with early stopping.

    After every epoch the generator's mean L1 on validation windows is
    recorded; training stops once it has not improved for ``patience``
    consecutive epochs and the best checkpoint (the initial model counts as
    epoch 0) is returned. The per-epoch record is kept in ``history``.
    """
    config = config or GanTrainConfig()
    model = model or init_gan(config)
    w = model.window_length
    a_tr, b_tr = paired_windows(train, w, config.stride)
    a_va, b_va = paired_windows(validation, w, config.stride)
    rng = np.random.default_rng(int(config.seed) & 0xFFFFFFFFFFFFFFFF)

    best_l1 = validation_l1(model, a_va, b_va)
    best = model
    history = [{"epoch": 0, "val_l1": best_l1}]
    wait = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(a_tr.shape[0])
        sums = np.zeros(4)
        nb = 0
        for bi, lo in enumerate(range(0, order.size, config.batch_size)):
            idx = order[lo:lo + config.batch_size]
            try:
                model, losses = train_step(model, a_tr[idx], b_tr[idx], config)
            except NumericError as exc:
                raise TrainingError(f"diverged at epoch {epoch}, batch {bi}: {exc}") from None
            if not np.all(np.isfinite(losses)):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {bi}: {losses}")
            sums += losses
            nb += 1
        val = validation_l1(model, a_va, b_va)
        if not np.isfinite(val):
            raise TrainingError(f"non-finite validation L1 at epoch {epoch}")
        means = sums / max(nb, 1)
        history.append({"epoch": epoch, "d_loss": means[0], "g_loss": means[1], "g_gan": means[2],
                        "g_l1": means[3], "val_l1": val})
        if val < best_l1:
            best_l1, best, wait = val, model, 0
        else:
            wait += 1
            if wait >= config.patience:
                break
    return GanModel(best.generator, best.discriminator, w, model.stride, tuple(history))


def gan_denoise(model: GanModel, signal: Signal) -> Signal:
    """Denoise a whole signal by overlap-averaging generator windows.

    The result may dip below zero; callers clamp before classification.
    """
    x = signal.samples
    w = model.window_length
    if x.size < w:
        raise ValueError(f"signal of length {x.size} shorter than window {w}")
    starts = window_starts(x.size, w, model.stride)
    out = from_gan_range(generate(model, to_gan_range(_windows(x, starts, w))))
    acc, cover = kernels.overlap_add(out, starts, x.size)
    return signal.with_samples(acc / cover)


def gan_to_bytes(model: GanModel) -> bytes:
    """``GAN1``, u32 window length, u32 stride, generator NET1, discriminator NET1."""
    head = GAN_MAGIC + struct.pack("<II", model.window_length, model.stride)
    return head + net_to_bytes(model.generator) + net_to_bytes(model.discriminator)


def gan_from_bytes(buf: bytes) -> GanModel:
    if buf[:4] != GAN_MAGIC or len(buf) < 12:
        raise ParseError("bad magic, not a GAN1 model")
    w, stride = struct.unpack("<II", buf[4:12])
    gen, pos = net_from_bytes(buf, 12)
    disc, pos = net_from_bytes(buf, pos)
    if pos != len(buf):
        raise ParseError(f"{len(buf) - pos} trailing bytes in GAN1 model")
    return GanModel(gen, disc, w, stride)
