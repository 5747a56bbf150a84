"""Decision-theoretic uncertainty quantification for denoised PPG signals.

Synthetic PPG records are corrupted with clamped Gaussian noise, denoised
(FIR, moving average, or a small least-squares conditional GAN), classified
by a probabilistic AF classifier, and audited: normalized predictive
entropy scores each generated signal, the Uncertainty Calibration Error and
reliability diagrams check it, and entropy filtering is grounded by the
downstream classification metrics.
"""

__version__ = "0.1.0"

from .calibration import bin_equal_width, reliability_report, uce
from .dtuq import (LossMatrix, ScoredGeneration, bayes_action, conditional_risk, filter_by_uncertainty,
                   normalized_entropy, score_generation)
from .kernels import BACKEND
from .metrics import condition_report, pearson, roc_auc, spearman
from .signals import Dataset, LabeledSignal, Signal, SynthConfig, add_noise, normalize_global, synth_ppg

__all__ = [
    "BACKEND",
    "Dataset",
    "LabeledSignal",
    "LossMatrix",
    "ScoredGeneration",
    "Signal",
    "SynthConfig",
    "add_noise",
    "bayes_action",
    "bin_equal_width",
    "conditional_risk",
    "condition_report",
    "filter_by_uncertainty",
    "normalize_global",
    "normalized_entropy",
    "pearson",
    "reliability_report",
    "roc_auc",
    "score_generation",
    "spearman",
    "synth_ppg",
    "uce",
]
