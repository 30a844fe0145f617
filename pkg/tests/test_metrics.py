import unittest
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import torch
from sklearn.metrics import confusion_matrix as sk_confusion_matrix
from sklearn.metrics import f1_score, precision_score, recall_score

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.evaluation.metrics_calculator import (ConfusionMatrix, LabelOracle, MetricsCalculator, build_report,
                                               confusion, evaluate, f1_scores, macro_f1, predict)
from src.evaluation.baseline_comparison import ArmComparator, check_ordering

LABELS = list(range(6))


def _brute_force_f1(preds, truths):
    scores = []
    for k in LABELS:
        tp = sum(1 for p, t in zip(preds, truths) if p == k and t == k)
        fp = sum(1 for p, t in zip(preds, truths) if p == k and t != k)
        fn = sum(1 for p, t in zip(preds, truths) if p != k and t == k)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        scores.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return scores


class TestConfusion(unittest.TestCase):

    def test_brute_force_counts(self):
        """Test counts against a double loop"""
        rng = np.random.default_rng(0)
        preds = rng.integers(0, 6, size=200)
        truths = rng.integers(0, 6, size=200)
        cm = confusion(preds, truths)

        expected = np.zeros((6, 6), dtype=np.int64)
        for t in range(6):
            for p in range(6):
                expected[t, p] = int(np.sum((truths == t) & (preds == p)))
        np.testing.assert_array_equal(cm.counts, expected)
        np.testing.assert_array_equal(cm.counts, sk_confusion_matrix(truths, preds, labels=LABELS))
        self.assertEqual(cm.total, 200)

    def test_shard_merge(self):
        preds = np.array([0, 1, 2, 3, 4, 5, 0, 0])
        truths = np.array([0, 1, 1, 3, 5, 5, 2, 0])
        merged = confusion(preds[:3], truths[:3]) + confusion(preds[3:], truths[3:])
        np.testing.assert_array_equal(merged.counts, confusion(preds, truths).counts)

    def test_invalid_input(self):
        with self.assertRaises(ValueError):
            confusion([0, 1], [0])
        with self.assertRaises(ValueError):
            confusion([], [])
        with self.assertRaises(ValueError):
            confusion([0, 6], [0, 1])
        with self.assertRaises(ValueError):
            ConfusionMatrix(np.zeros((5, 5)))


class TestF1(unittest.TestCase):

    def test_matches_sklearn(self):
        """Test per-class and macro scores against scikit-learn"""
        rng = np.random.default_rng(1)
        truths = rng.integers(0, 6, size=300)
        preds = np.where(rng.uniform(size=300) < 0.6, truths, rng.integers(0, 6, size=300))
        report = build_report(confusion(preds, truths))

        np.testing.assert_allclose(report.per_class_precision,
                                   precision_score(truths, preds, labels=LABELS, average=None, zero_division=0))
        np.testing.assert_allclose(report.per_class_recall,
                                   recall_score(truths, preds, labels=LABELS, average=None, zero_division=0))
        np.testing.assert_allclose(report.per_class_f1,
                                   f1_score(truths, preds, labels=LABELS, average=None, zero_division=0))
        self.assertAlmostEqual(report.macro_f1,
                               f1_score(truths, preds, labels=LABELS, average='macro', zero_division=0))

    def test_perfect_and_constant_predictions(self):
        truths = np.array([0, 1, 2, 3, 4, 5, 5])
        self.assertEqual(build_report(confusion(truths, truths)).macro_f1, 1.0)

        report = build_report(confusion(np.zeros(7, dtype=np.int64), truths))
        self.assertAlmostEqual(report.per_class_f1[0], 2 * (1 / 7) / (1 / 7 + 1))
        self.assertEqual(report.per_class_f1[1:], [0.0] * 5)

    def test_absent_classes(self):
        """Test zero rule by default and the present-class mean on request"""
        truths = np.array([0, 0, 1, 1])
        preds = np.array([0, 0, 1, 1])
        report = build_report(confusion(preds, truths), skip_absent=True)
        self.assertAlmostEqual(report.macro_f1, 2.0 / 6.0)
        self.assertAlmostEqual(report.macro_f1_present, 1.0)
        self.assertIsNone(build_report(confusion(preds, truths)).macro_f1_present)

    def test_random_sets_match_brute_force(self):
        """Test 1000 random prediction sets against a pure-Python count"""
        rng = np.random.default_rng(2)
        for _ in range(1000):
            size = int(rng.integers(1, 60))
            truths = rng.integers(0, 6, size=size)
            preds = np.where(rng.uniform(size=size) < rng.uniform(), truths, rng.integers(0, 6, size=size))
            report = build_report(confusion(preds, truths))

            expected = _brute_force_f1(preds.tolist(), truths.tolist())
            np.testing.assert_allclose(report.per_class_f1, expected, rtol=0, atol=1e-9)
            self.assertLessEqual(abs(report.macro_f1 - sum(expected) / 6), 1e-9)

    def test_dataset_order_invariance(self):
        """Test shuffling the (prediction, truth) pairs changes nothing"""
        rng = np.random.default_rng(3)
        truths = rng.integers(0, 6, size=120)
        preds = np.where(rng.uniform(size=120) < 0.5, truths, rng.integers(0, 6, size=120))
        order = rng.permutation(120)

        report = build_report(confusion(preds, truths))
        shuffled = build_report(confusion(preds[order], truths[order]))
        self.assertEqual(shuffled.per_class_f1, report.per_class_f1)
        self.assertEqual(shuffled.macro_f1, report.macro_f1)

    def test_class_relabeling(self):
        """Test renaming classes by a permutation permutes per-class F1 and keeps the macro score"""
        rng = np.random.default_rng(4)
        truths = rng.integers(0, 6, size=150)
        preds = np.where(rng.uniform(size=150) < 0.5, truths, rng.integers(0, 6, size=150))
        relabel = np.array([3, 5, 0, 1, 4, 2])

        report = build_report(confusion(preds, truths))
        renamed = build_report(confusion(relabel[preds], relabel[truths]))
        for k in LABELS:
            self.assertEqual(renamed.per_class_f1[relabel[k]], report.per_class_f1[k])
        self.assertAlmostEqual(renamed.macro_f1, report.macro_f1, places=12)

    def test_zero_denominators(self):
        scores = f1_scores(ConfusionMatrix(np.diag([1, 0, 0, 0, 0, 0])))
        self.assertEqual(scores['f1'].tolist(), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        with self.assertRaises(ValueError):
            macro_f1([1.0, 0.5])


class TestPrediction(unittest.TestCase):

    def test_argmax_ties_go_low(self):
        class Constant(torch.nn.Module):
            def forward(self, x):
                return torch.tensor([[0.0, 2.0, 2.0, 1.0, 0.0, 2.0]]).repeat(len(x), 1)

        self.assertEqual(predict(Constant(), torch.zeros(3, 1)).tolist(), [1, 1, 1])

    def test_oracle_scores_one(self):
        """Test the label oracle reaches macro F1 1.0 across batches"""
        labels = torch.tensor([0, 1, 2, 3, 4, 5, 0, 3])
        report = evaluate(LabelOracle(labels), torch.zeros(8, 1, 4, 4), labels, batch_size=3)
        self.assertEqual(report.macro_f1, 1.0)


class TestMetricsCalculator(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_save_report(self):
        """Test JSON, markdown, prediction lines and heatmap outputs"""
        labels = torch.tensor([0, 1, 2, 3, 4, 5])
        calculator = MetricsCalculator(batch_size=4)
        outcome = calculator.evaluate_model(LabelOracle(labels), torch.zeros(6, 1, 4, 4), labels)
        refs = [f"img_{i}.png" for i in range(6)]
        paths = calculator.save_report(outcome['report'], self.root, 'eval',
                                       outcome['predictions'], outcome['truths'], refs)

        with open(paths['json'], 'r', encoding='utf-8') as f:
            data = json.load(f)
        self.assertEqual(data['macro_f1'], 1.0)
        self.assertEqual(data['num_samples'], 6)
        self.assertIn('Macro F1', paths['markdown'].read_text(encoding='utf-8'))

        lines = paths['predictions'].read_text(encoding='utf-8').splitlines()
        self.assertEqual(json.loads(lines[2]), {'image': 'img_2.png', 'true': 2, 'pred': 2})
        self.assertTrue((self.root / 'eval_confusion.png').is_file())


class TestArmComparator(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.comparator = ArmComparator(['supervised', 'byol', 'byel'], tolerance=0.01)
        scores = {'supervised': [0.50, 0.52, 0.48], 'byol': [0.60, 0.58, 0.62], 'byel': [0.65, 0.59, 0.70]}
        for arm, values in scores.items():
            for seed, value in zip((1, 2, 3), values):
                self.comparator.add_arm_result(arm, seed, value, transfer_hash=f"hash{seed}", best_epoch=2)
        for seed, values in zip((1, 2, 3), ([0.55, 0.63, 0.65], [0.50, 0.58, 0.59], [0.60, 0.66, 0.70])):
            for fraction, epoch, value in zip((0.45, 0.90, 1.00), (9, 18, 20), values):
                self.comparator.add_ablation_result(fraction, epoch, seed, value)

    def tearDown(self):
        self.tmp.cleanup()

    def test_medians_and_ordering(self):
        medians = self.comparator.arm_medians()
        self.assertAlmostEqual(medians['byel'], 0.65)
        self.assertAlmostEqual(medians['supervised'], 0.50)
        self.assertEqual(self.comparator.ordering_checks(),
                         {'byel_vs_byol': 'ok', 'byel_vs_supervised': 'ok',
                          'ablation_epoch_9_to_18': 'ok', 'ablation_epoch_18_to_20': 'ok'})
        self.assertTrue(self.comparator.shared_transfer_config())

    def test_check_ordering(self):
        self.assertEqual(check_ordering(0.5, 0.5, 0.01), 'ok')
        self.assertEqual(check_ordering(0.495, 0.5, 0.01), 'flag')
        self.assertEqual(check_ordering(0.4, 0.5, 0.01), 'violated')

    def test_mismatched_transfer_config(self):
        self.comparator.add_arm_result('byel', 1, 0.7, transfer_hash='other')
        self.assertFalse(self.comparator.shared_transfer_config())
        with self.assertRaises(ValueError):
            self.comparator.add_arm_result('simclr', 1, 0.7, transfer_hash='x')

    def test_save(self):
        """Test CSV, markdown and JSON report files"""
        paths = self.comparator.save(self.root)
        markdown = paths['markdown'].read_text(encoding='utf-8')
        self.assertIn('BYEL pre-training', markdown)
        self.assertIn('Pre-training epoch ablation', markdown)
        with open(paths['json'], 'r', encoding='utf-8') as f:
            summary = json.load(f)
        self.assertEqual(summary['ordering']['byel_vs_byol'], 'ok')
        self.assertEqual(len(summary['ablation']), 3)


if __name__ == '__main__':
    unittest.main()
