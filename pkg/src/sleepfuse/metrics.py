"""Epoch-level classification metrics and clinical sleep-architecture measures.

Stage codes: 0 Wake, 1 Light, 2 Deep, 3 REM. Epochs are 30 s, so
minutes = epochs * 0.5. Degenerate cases (empty stages, zero total sleep
time) report 0 with an explicit flag instead of propagating NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .container import Hypnogram, N_STAGES, STAGE_NAMES

EPOCH_MINUTES = 0.5


class MetricError(ValueError):
    pass


def confusion(pred: Hypnogram | np.ndarray, truth: Hypnogram | np.ndarray) -> np.ndarray:
    """4x4 counts; rows are true stages, columns predicted."""
    p = pred.stages if isinstance(pred, Hypnogram) else np.asarray(pred, dtype=np.int64)
    t = truth.stages if isinstance(truth, Hypnogram) else np.asarray(truth, dtype=np.int64)
    if p.size == 0 or t.size == 0:
        raise MetricError("empty hypnogram overlap")
    if p.shape != t.shape:
        raise MetricError(f"length mismatch: {p.shape} predictions vs {t.shape} references")
    cm = np.zeros((N_STAGES, N_STAGES), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def kappa(cm: np.ndarray) -> float:
    """Cohen's kappa; chance agreement from the marginals. p_e == 1 happens
    only when both raters are constant: kappa is 1 if they agree, else 0."""
    cm = np.asarray(cm, dtype=np.float64)
    total = cm.sum()
    if total <= 0:
        raise MetricError("empty confusion matrix")
    p_o = np.trace(cm) / total
    p_e = float((cm.sum(axis=1) * cm.sum(axis=0)).sum()) / total**2
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


@dataclass
class ClassMetrics:
    accuracy: float
    recall: np.ndarray
    precision: np.ndarray
    f1: np.ndarray
    degenerate: np.ndarray  # stage absent from both truth and predictions

    def as_dict(self) -> dict:
        out = {"accuracy": self.accuracy}
        for i, name in enumerate(STAGE_NAMES):
            out[name] = {
                "recall": float(self.recall[i]),
                "precision": float(self.precision[i]),
                "f1": float(self.f1[i]),
                "degenerate": bool(self.degenerate[i]),
            }
        return out


def class_metrics(cm: np.ndarray) -> ClassMetrics:
    cm = np.asarray(cm, dtype=np.float64)
    total = cm.sum()
    if total <= 0:
        raise MetricError("empty confusion matrix")
    diag = np.diag(cm)
    row = cm.sum(axis=1)
    col = cm.sum(axis=0)
    recall = np.divide(diag, row, out=np.zeros(N_STAGES), where=row > 0)
    precision = np.divide(diag, col, out=np.zeros(N_STAGES), where=col > 0)
    denom = recall + precision
    f1 = np.divide(2 * recall * precision, denom, out=np.zeros(N_STAGES), where=denom > 0)
    degenerate = (row == 0) & (col == 0)
    return ClassMetrics(float(np.trace(cm) / total), recall, precision, f1, degenerate)


@dataclass
class SleepMeasures:
    tst_min: float
    se_pct: float
    fr_light_pct: float
    fr_deep_pct: float
    fr_rem_pct: float
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "tst_min": self.tst_min,
            "se_pct": self.se_pct,
            "fr_light_pct": self.fr_light_pct,
            "fr_deep_pct": self.fr_deep_pct,
            "fr_rem_pct": self.fr_rem_pct,
            "degenerate": self.degenerate,
        }

    def vector(self) -> np.ndarray:
        return np.array([self.tst_min, self.se_pct, self.fr_light_pct, self.fr_deep_pct, self.fr_rem_pct])


MEASURE_NAMES = ("tst_min", "se_pct", "fr_light_pct", "fr_deep_pct", "fr_rem_pct")


def sleep_measures(hyp: Hypnogram) -> SleepMeasures:
    """Total sleep time, sleep efficiency, and per-stage fractions of TST."""
    stages = hyp.stages
    counts = np.bincount(stages, minlength=N_STAGES)
    sleep_epochs = int(counts[1] + counts[2] + counts[3])
    tst = sleep_epochs * EPOCH_MINUTES
    if sleep_epochs == 0:
        return SleepMeasures(0.0, 0.0, 0.0, 0.0, 0.0, degenerate=True)
    wake_min = counts[0] * EPOCH_MINUTES
    se = tst / (tst + wake_min) * 100.0
    fr = counts[1:] * EPOCH_MINUTES / tst * 100.0
    return SleepMeasures(tst, float(se), float(fr[0]), float(fr[1]), float(fr[2]))


def measures_mae(pred_hyps: list[Hypnogram], ref_hyps: list[Hypnogram]) -> dict[str, float]:
    """Per-measure mean absolute error over aligned subjects."""
    if len(pred_hyps) != len(ref_hyps):
        raise MetricError(f"{len(pred_hyps)} predicted vs {len(ref_hyps)} reference subjects")
    if not pred_hyps:
        raise MetricError("no subjects")
    for p, r in zip(pred_hyps, ref_hyps):
        if p.subject_id != r.subject_id:
            raise MetricError(f"subject mismatch: {p.subject_id} vs {r.subject_id}")
    diffs = np.stack(
        [np.abs(sleep_measures(p).vector() - sleep_measures(r).vector()) for p, r in zip(pred_hyps, ref_hyps)]
    )
    mae = diffs.mean(axis=0)
    return dict(zip(MEASURE_NAMES, (float(v) for v in mae)))


def evaluate_hypnograms(pred: np.ndarray, truth: np.ndarray) -> dict:
    """Bundle of kappa/accuracy/per-stage metrics for one aligned label set."""
    cm = confusion(pred, truth)
    cls = class_metrics(cm)
    return {
        "kappa": kappa(cm),
        "accuracy": cls.accuracy,
        "confusion": cm.tolist(),
        "per_stage": cls.as_dict(),
    }
