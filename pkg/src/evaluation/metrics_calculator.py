import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import matplotlib
import numpy as np
import torch
import torch.nn as nn

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import seaborn as sns  # noqa: E402

from ..data.labels import CLASS_NAMES, NUM_CLASSES


@dataclass
class ConfusionMatrix:
    """counts[t][p]: rows are true labels, columns predicted labels"""
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (NUM_CLASSES, NUM_CLASSES):
            raise ValueError(f"Confusion matrix must be {NUM_CLASSES}x{NUM_CLASSES}, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("Confusion matrix has negative counts")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: 'ConfusionMatrix') -> 'ConfusionMatrix':
        """Shard merge"""
        return ConfusionMatrix(self.counts + other.counts)


@dataclass
class MetricsReport:
    per_class_precision: List[float]
    per_class_recall: List[float]
    per_class_f1: List[float]
    macro_f1: float
    confusion: ConfusionMatrix
    macro_f1_present: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        report = {
            'macro_f1': self.macro_f1,
            'per_class': {
                name: {'precision': p, 'recall': r, 'f1': f}
                for name, p, r, f in zip(CLASS_NAMES, self.per_class_precision,
                                         self.per_class_recall, self.per_class_f1)
            },
            'per_class_f1': list(self.per_class_f1),
            'confusion': self.confusion.counts.tolist(),
            'num_samples': self.confusion.total,
        }
        if self.macro_f1_present is not None:
            report['macro_f1_present_classes'] = self.macro_f1_present
        return report


def _as_label_array(values, name: str) -> np.ndarray:
    array = np.asarray(values)
    if array.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {array.shape}")
    if array.size and not np.issubdtype(array.dtype, np.integer):
        raise ValueError(f"{name} must be integer labels")
    if array.size and (array.min() < 0 or array.max() >= NUM_CLASSES):
        raise ValueError(f"Invalid label in {name}")
    return array.astype(np.int64)


def confusion(preds: Sequence[int], truths: Sequence[int]) -> ConfusionMatrix:
    preds = _as_label_array(preds, 'preds')
    truths = _as_label_array(truths, 'truths')
    if len(preds) != len(truths):
        raise ValueError(f"Length mismatch: {len(preds)} predictions, {len(truths)} truths")
    if len(preds) == 0:
        raise ValueError("Cannot tabulate an empty prediction set")

    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(counts, (truths, preds), 1)
    return ConfusionMatrix(counts)


def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    # Undefined ratios are 0
    result = np.zeros_like(numerator, dtype=np.float64)
    np.divide(numerator, denominator, out=result, where=denominator != 0)
    return result


def f1_scores(cm: ConfusionMatrix) -> Dict[str, np.ndarray]:
    """Per-class precision, recall and F1 under the zero-denominator rule"""
    counts = cm.counts.astype(np.float64)
    true_positive = np.diag(counts)
    predicted = counts.sum(axis=0)
    actual = counts.sum(axis=1)

    precision = _safe_divide(true_positive, predicted)
    recall = _safe_divide(true_positive, actual)
    f1 = _safe_divide(2.0 * precision * recall, precision + recall)
    return {'precision': precision, 'recall': recall, 'f1': f1}


def macro_f1(per_class_f1: Sequence[float], present: Optional[Sequence[bool]] = None) -> float:
    """Unweighted mean over the six classes, or over present classes only"""
    values = np.asarray(per_class_f1, dtype=np.float64)
    if values.shape != (NUM_CLASSES,):
        raise ValueError(f"Expected {NUM_CLASSES} per-class F1 values, got {values.shape}")
    if present is None:
        return float(values.mean())
    mask = np.asarray(present, dtype=bool)
    return float(values[mask].mean()) if mask.any() else 0.0


def build_report(cm: ConfusionMatrix, skip_absent: bool = False) -> MetricsReport:
    scores = f1_scores(cm)
    report = MetricsReport(
        per_class_precision=scores['precision'].tolist(),
        per_class_recall=scores['recall'].tolist(),
        per_class_f1=scores['f1'].tolist(),
        macro_f1=macro_f1(scores['f1']),
        confusion=cm,
    )
    if skip_absent:
        report.macro_f1_present = macro_f1(scores['f1'], present=cm.counts.sum(axis=1) > 0)
    return report


@torch.no_grad()
def predict(model: nn.Module, images: torch.Tensor, batch_size: int = 256) -> np.ndarray:
    """Argmax predictions; ties go to the lowest class index"""
    model.eval()
    predictions = []
    for start in range(0, len(images), batch_size):
        logits = model(images[start:start + batch_size])
        if logits.ndim != 2 or logits.shape[1] != NUM_CLASSES:
            raise ValueError(f"Model returned logits of shape {tuple(logits.shape)}")
        predictions.append(np.argmax(logits.cpu().numpy(), axis=1))
    return np.concatenate(predictions).astype(np.int64)


def evaluate(model: nn.Module, images: torch.Tensor, labels: torch.Tensor,
             batch_size: int = 256, skip_absent: bool = False) -> MetricsReport:
    if len(images) == 0:
        raise ValueError("Cannot evaluate on an empty dataset")
    predictions = predict(model, images, batch_size)
    truths = torch.as_tensor(labels).cpu().numpy().astype(np.int64)
    return build_report(confusion(predictions, truths), skip_absent)


class LabelOracle(nn.Module):
    """Debug model that reads the labels: one-hot logits for the next len(x) labels"""

    def __init__(self, labels: Sequence[int]):
        super(LabelOracle, self).__init__()
        self.labels = torch.as_tensor(labels, dtype=torch.long)
        self.cursor = 0

    def reset(self):
        self.cursor = 0

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch = self.labels[self.cursor:self.cursor + len(x)]
        if len(batch) != len(x):
            raise ValueError("Oracle ran out of labels")
        self.cursor += len(x)
        return nn.functional.one_hot(batch, NUM_CLASSES).to(torch.float32)


class MetricsCalculator:
    """Evaluation reports: JSON, markdown, prediction lines and confusion heatmap"""

    def __init__(self, skip_absent: bool = False, batch_size: int = 256):
        self.skip_absent = skip_absent
        self.batch_size = batch_size
        self.logger = logging.getLogger(__name__)

    def evaluate_model(self, model: nn.Module, images: torch.Tensor,
                       labels: torch.Tensor) -> Dict[str, Any]:
        predictions = predict(model, images, self.batch_size)
        truths = torch.as_tensor(labels).cpu().numpy().astype(np.int64)
        report = build_report(confusion(predictions, truths), self.skip_absent)
        self.logger.info(f"Macro F1 on {len(truths)} images: {report.macro_f1:.4f}")
        return {'report': report, 'predictions': predictions, 'truths': truths}

    def generate_performance_report(self, report: MetricsReport, title: str = 'Evaluation') -> str:
        """Markdown classification report"""
        lines = [
            f"# {title}",
            "",
            f"Macro F1: **{report.macro_f1:.4f}**",
        ]
        if report.macro_f1_present is not None:
            lines.append(f"Macro F1 (present classes only): {report.macro_f1_present:.4f}")
        lines.extend([
            "",
            "| Class | Precision | Recall | F1 | Support |",
            "|-------|-----------|--------|----|---------|",
        ])
        support = report.confusion.counts.sum(axis=1)
        for i, name in enumerate(CLASS_NAMES):
            lines.append(f"| {name} | {report.per_class_precision[i]:.4f} | "
                         f"{report.per_class_recall[i]:.4f} | {report.per_class_f1[i]:.4f} | {support[i]} |")
        return "\n".join(lines) + "\n"

    def save_report(self, report: MetricsReport, report_dir: Union[str, Path], name: str = 'eval',
                    predictions: Optional[np.ndarray] = None, truths: Optional[np.ndarray] = None,
                    refs: Optional[Sequence[str]] = None) -> Dict[str, Path]:
        report_dir = Path(report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)

        paths = {'json': report_dir / f"{name}.json", 'markdown': report_dir / f"{name}.md"}
        with open(paths['json'], 'w', encoding='utf-8') as f:
            json.dump(report.to_dict(), f, indent=2)
        paths['markdown'].write_text(self.generate_performance_report(report), encoding='utf-8')

        if predictions is not None and truths is not None and refs is not None:
            paths['predictions'] = report_dir / f"{name}_predictions.jsonl"
            with open(paths['predictions'], 'w', encoding='utf-8') as f:
                for ref, true, pred in zip(refs, truths, predictions):
                    f.write(json.dumps({'image': ref, 'true': int(true), 'pred': int(pred)}) + "\n")

        heatmap = self.plot_confusion(report.confusion, report_dir / f"{name}_confusion.png")
        if heatmap is not None:
            paths['confusion'] = heatmap
        return paths

    def plot_confusion(self, cm: ConfusionMatrix, path: Union[str, Path]) -> Optional[Path]:
        try:
            plt.figure(figsize=(8, 6))
            sns.heatmap(cm.counts, annot=True, fmt='d', cmap='Blues',
                        xticklabels=CLASS_NAMES, yticklabels=CLASS_NAMES)
            plt.xlabel('Predicted label')
            plt.ylabel('True label')
            plt.tight_layout()
            plt.savefig(path, dpi=150)
            plt.close()
            return Path(path)
        except Exception as e:
            self.logger.error(f"Error generating confusion heatmap: {e}")
            return None
