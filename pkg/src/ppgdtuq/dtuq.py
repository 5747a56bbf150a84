"""Decision-theoretic scoring of generated signals.

A classifier's predictive distribution is treated as the belief over
outcomes. Given a loss matrix ``L[action, outcome]``, the conditional risk of
an action is its expected loss under that belief and the Bayes action
minimizes it. Under 0-1 (misclassification) loss the risk of action ``a`` is
``1 - p[a]``, so the Bayes action is the argmax and its risk ``1 - max(p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierModel, predict
from .denoise import clamp_nonnegative
from .signals import Signal

PROB_TOL = 1e-9


def check_distribution(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise ValueError(f"distribution must be a vector with K >= 2 entries, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("probabilities must be finite and nonnegative")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def check_distributions(probs) -> np.ndarray:
    """Row-wise :func:`check_distribution` for an ``(N, K)`` array."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] < 2:
        raise ValueError(f"expected an (N, K >= 2) array, got shape {probs.shape}")
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise ValueError("probabilities must be finite and nonnegative")
    bad = np.flatnonzero(np.abs(probs.sum(axis=1) - 1.0) > PROB_TOL)
    if bad.size:
        raise ValueError(f"rows {bad[:10].tolist()} do not sum to 1")
    return probs


@dataclass(frozen=True, eq=False)
class LossMatrix:
    entries: np.ndarray  # (n_actions, n_outcomes)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.size == 0:
            raise ValueError("loss matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(e)) or np.any(e < 0):
            raise ValueError("loss entries must be finite and nonnegative")
        object.__setattr__(self, "entries", e)

    @classmethod
    def misclassification(cls, k: int) -> LossMatrix:
        return cls(1.0 - np.eye(k))

    @property
    def n_actions(self):
        return self.entries.shape[0]

    @property
    def n_outcomes(self):
        return self.entries.shape[1]


def normalized_entropy(p) -> float:
    """Shannon entropy divided by ``log K``; ``0 log 0`` counts as 0."""
    p = check_distribution(p)
    nz = p[p > 0]
    h = -float(np.sum(nz * np.log(nz))) / math.log(p.size)
    return min(max(h, 0.0), 1.0)


def normalized_entropy_many(probs) -> np.ndarray:
    probs = check_distributions(np.atleast_2d(probs))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log(probs), 0.0)
    return np.clip(-terms.sum(axis=1) / math.log(probs.shape[1]), 0.0, 1.0)


def conditional_risk(loss: LossMatrix, p, action: int) -> float:
    p = check_distribution(p)
    if loss.n_outcomes != p.size:
        raise ValueError(f"loss has {loss.n_outcomes} outcomes, distribution has {p.size}")
    if not 0 <= action < loss.n_actions:
        raise ValueError(f"action {action} out of range [0, {loss.n_actions})")
    return float(loss.entries[action] @ p)


def bayes_action(loss: LossMatrix, p) -> int:
    """Risk-minimizing action; ties go to the lowest index."""
    p = check_distribution(p)
    if loss.n_outcomes != p.size:
        raise ValueError(f"loss has {loss.n_outcomes} outcomes, distribution has {p.size}")
    return int(np.argmin(loss.entries @ p))


def conditional_risks(loss: LossMatrix, probs) -> np.ndarray:
    """Risk of every action for every row of ``probs``, shape ``(N, n_actions)``."""
    probs = check_distributions(np.atleast_2d(probs))
    if loss.n_outcomes != probs.shape[1]:
        raise ValueError(f"loss has {loss.n_outcomes} outcomes, distributions have {probs.shape[1]}")
    return probs @ loss.entries.T


def bayes_actions(loss: LossMatrix, probs) -> np.ndarray:
    return np.argmin(conditional_risks(loss, probs), axis=1)


@dataclass(frozen=True, eq=False)
class ScoredGeneration:
    id: str
    uncertainty: float
    probs: np.ndarray
    label: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.uncertainty <= 1.0:
            raise ValueError(f"uncertainty {self.uncertainty} outside [0, 1]")


def score_generation(model: ClassifierModel, denoised: Signal, id: str = "",
                     label: int | None = None) -> ScoredGeneration:
    """Entropy of the classifier's prediction on the clamped generated signal."""
    p = predict(model, clamp_nonnegative(denoised))
    return ScoredGeneration(id, normalized_entropy(p), p, label)


def filter_by_uncertainty(items, keep_fraction: float = 0.75):
    """Keep the ``ceil(keep_fraction * N)`` least uncertain items.

    Ranking is by (uncertainty, id); survivors keep their input order.
    """
    items = list(items)
    if not items:
        raise ValueError("cannot filter an empty collection")
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    n_keep = keep_count(len(items), keep_fraction)
    ranked = sorted(range(len(items)), key=lambda i: (items[i].uncertainty, items[i].id))
    chosen = set(ranked[:n_keep])
    return [it for i, it in enumerate(items) if i in chosen]


def keep_count(n: int, keep_fraction: float) -> int:
    # guard against 0.7 * 10 = 7.000000000000001 rounding up to 8
    return max(1, min(n, math.ceil(keep_fraction * n - 1e-9)))
