"""In-memory end-to-end experiment: synthesize, corrupt, denoise, classify, audit."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .calibration import ReliabilityReport, reliability_report
from .classifier import ClassifierModel, predict_many, train_classifier
from .config import PipelineConfig, derive_seed
from .denoise import apply_fir, clamp_nonnegative, design_lowpass, moving_average
from .dtuq import ScoredGeneration, filter_by_uncertainty, normalized_entropy_many
from .gan import GanModel, gan_denoise, train_gan
from .metrics import ConditionReport, condition_report, pearson, spearman
from .signals import Dataset, apply_global_range, augment_dataset, fit_global_range, make_dataset


def build_splits(cfg: PipelineConfig) -> dict[str, Dataset]:
    """Clean train/validation/test splits, globally normalized with the train range."""
    splits = {}
    for name in ("train", "validation", "test"):
        n = getattr(cfg.sizes, name)
        splits[name] = make_dataset(cfg.synth, n, name, derive_seed(cfg.seed, "synth", name))
    lo, hi = fit_global_range(splits["train"])
    return {k: apply_global_range(v, lo, hi) for k, v in splits.items()}


def augment_split(cfg: PipelineConfig, dataset: Dataset) -> Dataset:
    n = cfg.noise
    return augment_dataset(dataset, n.sigma, n.clamp_lo, n.clamp_hi,
                           seed=derive_seed(cfg.seed, "noise", dataset.split))


def denoise_dataset(dataset: Dataset, method: str, cfg: PipelineConfig, model: GanModel | None = None) -> Dataset:
    if method == "fir":
        fir = design_lowpass(cfg.baseline.cutoff_hz, dataset.records[0].signal.sample_rate_hz,
                             cfg.baseline.num_taps)
        return dataset.map_signals(lambda s: apply_fir(fir, s))
    if method == "movavg":
        return dataset.map_signals(lambda s: moving_average(s, cfg.baseline.movavg_window))
    if method == "gan":
        if model is None:
            raise ValueError("GAN denoising needs a trained model")
        return dataset.map_signals(lambda s: gan_denoise(model, s))
    raise ValueError(f"unknown denoising method {method!r}")


def score_dataset(model: ClassifierModel, dataset: Dataset) -> list[ScoredGeneration]:
    """Score every record: predict on the clamped signal, uncertainty = normalized entropy."""
    probs = predict_many(model, [clamp_nonnegative(r.signal) for r in dataset.records])
    u = normalized_entropy_many(probs)
    return [ScoredGeneration(r.id, float(ui), p, r.label) for r, ui, p in zip(dataset.records, u, probs)]


def reliability_set(items, n_bins: int) -> dict[str, ReliabilityReport]:
    probs = np.stack([it.probs for it in items])
    labels = np.array([it.label for it in items])
    out = {"all": reliability_report(probs, labels, n_bins)}
    for k in range(probs.shape[1]):
        if np.any(labels == k):
            out[f"class{k}"] = reliability_report(probs, labels, n_bins, class_filter=k)
    return out


def entropy_correlation(noisy, denoised) -> dict:
    """Pearson and Spearman between the noisy and denoised uncertainty of each id."""
    d = {it.id: it.uncertainty for it in denoised}
    ids = [it.id for it in noisy if it.id in d]
    x = [it.uncertainty for it in noisy if it.id in d]
    y = [d[i] for i in ids]
    return {"n": len(ids), "pearson": pearson(x, y), "spearman": spearman(x, y)}


@dataclass
class ExperimentResult:
    report: ConditionReport
    scored: dict
    filtered_ids: list
    reliability: dict
    correlation: dict
    gan: GanModel | None
    classifier: ClassifierModel


def run_experiment(cfg: PipelineConfig) -> ExperimentResult:
    splits = build_splits(cfg)
    clf = train_classifier(splits["train"], splits["validation"],
                           dataclasses.replace(cfg.classifier, seed=cfg.seed))

    test_noisy = augment_split(cfg, splits["test"])
    gan = None
    if cfg.denoiser == "gan":
        gan = train_gan(augment_split(cfg, splits["train"]), augment_split(cfg, splits["validation"]),
                        dataclasses.replace(cfg.gan, seed=cfg.seed))
    test_denoised = denoise_dataset(test_noisy, cfg.denoiser, cfg, gan)

    scored = {
        "unaugmented": score_dataset(clf, splits["test"]),
        "noisy": score_dataset(clf, test_noisy),
        "denoised": score_dataset(clf, test_denoised),
    }
    kept = filter_by_uncertainty(scored["denoised"], cfg.evaluation.keep_fraction)
    filtered_ids = [it.id for it in kept]
    report = condition_report(scored["unaugmented"], scored["noisy"], scored["denoised"], filtered_ids,
                              cfg.evaluation.keep_fraction, cfg.evaluation.level)
    reliability = {k: reliability_set(v, cfg.evaluation.bins) for k, v in scored.items()}
    corr = entropy_correlation(scored["noisy"], scored["denoised"])
    return ExperimentResult(report, scored, filtered_ids, reliability, corr, gan, clf)
