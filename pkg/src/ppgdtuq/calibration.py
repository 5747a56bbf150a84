"""Uncertainty Calibration Error and reliability diagrams.

Normalized entropies are grouped into ``M`` equal-width bins on [0, 1]
(the last bin is closed at 1). For each occupied bin the error rate is
compared with half the mean entropy, the perfect-calibration heuristic for
a binary classifier, and the absolute gaps are averaged with weights
``|B_m| / N``. The factor 1/2 is kept for K != 2 but such reports are
flagged as heuristic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dtuq import LossMatrix, bayes_actions, check_distributions, normalized_entropy_many

REFERENCE_SLOPE = 0.5


@dataclass(frozen=True)
class BinStats:
    index: int
    lo: float
    hi: float
    count: int
    mean_uncert: float  # nan when empty
    mean_err: float  # nan when empty


@dataclass(frozen=True)
class ReliabilityReport:
    bins: tuple[BinStats, ...]
    uce: float
    n: int
    class_filter: int | None = None
    n_classes: int = 2
    reference_slope: float = REFERENCE_SLOPE
    heuristic: bool = field(default=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin", "lo", "hi", "count", "mean_uncert", "mean_err"])
        for b in self.bins:
            w.writerow([b.index, repr(float(b.lo)), repr(float(b.hi)), b.count,
                        "" if b.count == 0 else repr(float(b.mean_uncert)),
                        "" if b.count == 0 else repr(float(b.mean_err))])
        return buf.getvalue()

    def to_svg(self, size: int = 320) -> str:
        return reliability_svg(self, size)


def bin_equal_width(uncertainty, correct, n_bins: int = 10) -> list[BinStats]:
    u = np.asarray(uncertainty, dtype=np.float64)
    c = np.asarray(correct, dtype=bool)
    if n_bins < 1:
        raise ValueError(f"need at least one bin, got {n_bins}")
    if u.shape != c.shape:
        raise ValueError("uncertainty and correctness must have equal length")
    if u.size and (not np.all(np.isfinite(u)) or u.min() < 0.0 or u.max() > 1.0):
        raise ValueError("uncertainties must lie in [0, 1]")
    counts, su, se = kernels.bin_accumulate(u, (~c).astype(np.float64), n_bins)
    out = []
    for m in range(n_bins):
        k = int(counts[m])
        out.append(BinStats(m, m / n_bins, (m + 1) / n_bins, k,
                            float(su[m] / k) if k else float("nan"),
                            float(se[m] / k) if k else float("nan")))
    return out


def uce(bins, n: int | None = None) -> float:
    total = sum(b.count for b in bins)
    n = total if n is None else n
    if n <= 0:
        raise ValueError("UCE needs at least one item")
    if n != total:
        raise ValueError(f"N = {n} but bins hold {total} items")
    return float(sum((b.count / n) * abs(b.mean_err - 0.5 * b.mean_uncert) for b in bins if b.count))


def uce_from_items(uncertainty, correct, n_bins: int = 10) -> float:
    bins = bin_equal_width(uncertainty, correct, n_bins)
    return uce(bins, len(np.atleast_1d(uncertainty)))


def reliability_report(probs, labels, n_bins: int = 10, class_filter: int | None = None) -> ReliabilityReport:
    """Bin predictions by normalized entropy; correctness follows the Bayes action under 0-1 loss."""
    probs = check_distributions(np.atleast_2d(probs))
    labels = np.asarray(labels, dtype=np.int64)
    if probs.shape[0] != labels.shape[0]:
        raise ValueError("probs and labels differ in length")
    k = probs.shape[1]
    if class_filter is not None:
        mask = labels == class_filter
        probs, labels = probs[mask], labels[mask]
    if labels.size == 0:
        what = f"class {class_filter}" if class_filter is not None else "input"
        raise ValueError(f"no predictions for {what}")
    pred = bayes_actions(LossMatrix.misclassification(k), probs)
    u = normalized_entropy_many(probs)
    bins = bin_equal_width(u, pred == labels, n_bins)
    return ReliabilityReport(tuple(bins), uce(bins, labels.size), int(labels.size), class_filter, k,
                             heuristic=k != 2)


def reliability_svg(report: ReliabilityReport, size: int = 320) -> str:
    """Reliability diagram: per-bin error rate against mean entropy on [0, 1]^2,
    with the slope-0.5 reference line."""
    pad = 40
    span = size - 2 * pad

    def px(x):
        return pad + x * span

    def py(y):
        return size - pad - y * span

    title = "all classes" if report.class_filter is None else f"class {report.class_filter}"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="black"/>',
        f'<line x1="{px(0)}" y1="{py(0)}" x2="{px(1)}" y2="{py(report.reference_slope)}" '
        'stroke="gray" stroke-dasharray="4 3"/>',
    ]
    for b in report.bins:
        if b.count == 0:
            continue
        w = span * (b.hi - b.lo)
        h = span * b.mean_err
        parts.append(f'<rect x="{px(b.lo):.3f}" y="{py(b.mean_err):.3f}" width="{w:.3f}" height="{h:.3f}" '
                     'fill="steelblue" fill-opacity="0.6" stroke="navy"/>')
        parts.append(f'<circle cx="{px(b.mean_uncert):.3f}" cy="{py(b.mean_err):.3f}" r="2.5" fill="crimson"/>')
    parts += [
        f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle" font-size="12">normalized entropy</text>',
        f'<text x="12" y="{size / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 12 {size / 2})">error rate</text>',
        f'<text x="{size / 2}" y="{pad - 12}" text-anchor="middle" font-size="12">'
        f'{title}: UCE = {report.uce:.4f} (N = {report.n})</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"
