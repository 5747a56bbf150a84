"""Binary classification metrics, operating points and correlation.

Scores are the predicted probability of the positive (AF) class and a
sample is called positive when ``score >= threshold``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import InfeasibleError, IntegrityError

OPERATING_LEVEL = 0.8
DECISION_THRESHOLD = 0.5
CONDITIONS = ("unaugmented", "noisy", "denoised", "denoised_low_uncertainty")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def sensitivity(self):
        pos = self.tp + self.fn
        return self.tp / pos if pos else 0.0

    @property
    def specificity(self):
        neg = self.tn + self.fp
        return self.tn / neg if neg else 0.0


def _check_binary(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and of equal length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return s, y.astype(np.int64)


def roc_auc(scores, labels) -> float:
    """Mann-Whitney estimate: P(positive outranks negative), ties count 1/2."""
    s, y = _check_binary(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    ranks = rankdata(s)
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def confusion_at_threshold(scores, labels, threshold: float) -> Confusion:
    s, y = _check_binary(scores, labels)
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    return Confusion(tp, fp, int(np.sum(y == 0)) - fp, int(np.sum(y == 1)) - tp)


def mcc(c: Confusion) -> float:
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def f1(c: Confusion) -> float:
    denom = 2 * c.tp + c.fp + c.fn
    return 2 * c.tp / denom if denom else 0.0


def balanced_accuracy(c: Confusion) -> float:
    return 0.5 * (c.sensitivity + c.specificity)


METRICS = {
    "sensitivity": lambda c: c.sensitivity,
    "specificity": lambda c: c.specificity,
    "mcc": mcc,
    "f1": f1,
    "balanced_accuracy": balanced_accuracy,
}


def threshold_sweep(scores, labels):
    """Confusions at every distinct score used as threshold, ascending.

    Returns ``(thresholds, tp, fp, tn, fn)`` computed from cumulative counts.
    """
    s, y = _check_binary(scores, labels)
    order = np.argsort(s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    thresholds, first = np.unique(s_sorted, return_index=True)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    # items before index `first` are predicted negative
    pos_below = np.concatenate([[0], np.cumsum(y_sorted)])[first]
    neg_below = first - pos_below
    tp = n_pos - pos_below
    fp = n_neg - neg_below
    return thresholds, tp, fp, n_neg - fp, n_pos - tp


def metric_at_operating_point(scores, labels, constraint: str, level: float, metric: str):
    """Metric at the threshold whose constrained rate just meets ``level``.

    ``constraint`` is ``"sensitivity"`` or ``"specificity"``. Among distinct
    score thresholds with ``rate >= level`` the one with minimal slack
    ``rate - level`` is chosen; ties go to the higher metric value, then to
    the lower threshold. Returns ``(value, threshold, achieved_rate)``.
    """
    if constraint not in ("sensitivity", "specificity"):
        raise ValueError(f"constraint must be sensitivity or specificity, got {constraint!r}")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    s, y = _check_binary(scores, labels)
    if y.sum() == 0 or y.sum() == y.size:
        raise ValueError("operating points need both classes")
    thr, tp, fp, tn, fn = threshold_sweep(s, y)
    best = None
    for i in range(thr.size):
        c = Confusion(int(tp[i]), int(fp[i]), int(tn[i]), int(fn[i]))
        rate = c.sensitivity if constraint == "sensitivity" else c.specificity
        if rate < level:
            continue
        key = (rate - level, -METRICS[metric](c), thr[i])
        if best is None or key < best[0]:
            best = (key, METRICS[metric](c), float(thr[i]), rate)
    if best is None:
        raise InfeasibleError(f"no threshold reaches {constraint} >= {level}")
    return best[1], best[2], best[3]


@dataclass(frozen=True)
class OperatingPointMetrics:
    auc: float
    f1_at_half: float
    balanced_accuracy_at_half: float
    mcc_at_sens80: float
    mcc_at_spec80: float
    sensitivity_at_spec80: float
    specificity_at_sens80: float
    threshold_sens80: float
    threshold_spec80: float
    achieved_sensitivity: float
    achieved_specificity: float
    n: int


def operating_point_metrics(scores, labels, level: float = OPERATING_LEVEL,
                            decision_threshold: float = DECISION_THRESHOLD) -> OperatingPointMetrics:
    c_half = confusion_at_threshold(scores, labels, decision_threshold)
    mcc_sens, thr_sens, ach_sens = metric_at_operating_point(scores, labels, "sensitivity", level, "mcc")
    spec_sens, _, _ = metric_at_operating_point(scores, labels, "sensitivity", level, "specificity")
    mcc_spec, thr_spec, ach_spec = metric_at_operating_point(scores, labels, "specificity", level, "mcc")
    sens_spec, _, _ = metric_at_operating_point(scores, labels, "specificity", level, "sensitivity")
    return OperatingPointMetrics(
        auc=roc_auc(scores, labels),
        f1_at_half=f1(c_half),
        balanced_accuracy_at_half=balanced_accuracy(c_half),
        mcc_at_sens80=mcc_sens,
        mcc_at_spec80=mcc_spec,
        sensitivity_at_spec80=sens_spec,
        specificity_at_sens80=spec_sens,
        threshold_sens80=thr_sens,
        threshold_spec80=thr_spec,
        achieved_sensitivity=ach_sens,
        achieved_specificity=ach_spec,
        n=int(np.size(labels)),
    )


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("need two equal-length sequences of at least 2 values")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("correlation undefined for a constant sequence")
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    return pearson(rankdata(x), rankdata(y))


@dataclass(frozen=True)
class ConditionReport:
    rows: dict  # condition name -> OperatingPointMetrics
    keep_fraction: float
    level: float = OPERATING_LEVEL
    decision_threshold: float = DECISION_THRESHOLD

    _COLUMNS = (
        ("AUC", "auc"),
        ("F1", "f1_at_half"),
        ("MCC(sens80)", "mcc_at_sens80"),
        ("MCC(spec80)", "mcc_at_spec80"),
        ("Sens(spec80)", "sensitivity_at_spec80"),
        ("Spec(sens80)", "specificity_at_sens80"),
        ("BalAcc(0.5)", "balanced_accuracy_at_half"),
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = list(asdict(next(iter(self.rows.values()))))
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["condition", *fields])
        for name, row in self.rows.items():
            d = asdict(row)
            w.writerow([name, *(repr(float(d[f])) if isinstance(d[f], float) else d[f] for f in fields)])
        return buf.getvalue()

    def to_text(self) -> str:
        head = ["Condition", *(c for c, _ in self._COLUMNS), "N"]
        lines = []
        table = [head]
        for name, row in self.rows.items():
            table.append([name, *(f"{getattr(row, a):.2f}" for _, a in self._COLUMNS), str(row.n)])
        widths = [max(len(r[i]) for r in table) for i in range(len(head))]
        for r in table:
            lines.append("  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(r, widths))))
        lines.insert(1, "-" * len(lines[0]))
        lines.append("")
        lines.append(f"low-uncertainty subset: lowest {self.keep_fraction:.0%} of normalized entropy; "
                     f"operating points at {self.level:.0%} by minimal slack over distinct-score thresholds")
        return "\n".join(lines) + "\n"


def condition_report(clean, noisy, denoised, filtered_ids, keep_fraction: float = 0.75,
                     level: float = OPERATING_LEVEL) -> ConditionReport:
    """Table of metrics for the four conditions.

    ``clean``, ``noisy`` and ``denoised`` are sequences of scored items with
    ``id``, ``probs`` and ``label``; they must cover the same ids with the
    same labels. The low-uncertainty row uses only ``filtered_ids``.
    """
    sets = {"unaugmented": clean, "noisy": noisy, "denoised": denoised}
    maps = {}
    for name, items in sets.items():
        m = {}
        for it in items:
            if it.label is None:
                raise IntegrityError(f"{name}: item {it.id!r} has no label")
            m[it.id] = it
        maps[name] = m
    ref = maps["denoised"]
    for name, m in maps.items():
        diff = sorted(set(m).symmetric_difference(ref))
        if diff:
            raise IntegrityError(f"{name} ids differ from denoised ids: {diff[:10]}")
        bad = sorted(i for i in m if m[i].label != ref[i].label)
        if bad:
            raise IntegrityError(f"{name} labels disagree for ids {bad[:10]}")
    missing = sorted(set(filtered_ids) - set(ref))
    if missing:
        raise IntegrityError(f"filtered ids not in denoised set: {missing[:10]}")

    ids = sorted(ref)
    keep = set(filtered_ids)
    rows = {}
    for name in ("unaugmented", "noisy", "denoised"):
        m = maps[name]
        rows[name] = operating_point_metrics([m[i].probs[1] for i in ids], [m[i].label for i in ids], level)
    sub = [i for i in ids if i in keep]
    rows["denoised_low_uncertainty"] = operating_point_metrics(
        [ref[i].probs[1] for i in sub], [ref[i].label for i in sub], level)
    return ConditionReport(rows, keep_fraction, level)
