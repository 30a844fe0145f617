import unittest
import itertools
import math
import os
import sys

import torch

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.core.byel_network import ByelNetwork, ModelConfig
from src.training.losses import (ByelLossCalculator, LossConfig, byel_total, byol_loss, classify_loss,
                                 orthogonal_loss)
from src.utils.exceptions import ConfigError, DegenerateInputError


def _orthonormal(dim: int, classes: int, seed: int = 0) -> torch.Tensor:
    generator = torch.Generator().manual_seed(seed)
    q, _ = torch.linalg.qr(torch.randn(dim, classes, generator=generator, dtype=torch.float64))
    return q


def _central_difference(fn, x: torch.Tensor, eps: float = 1e-4) -> torch.Tensor:
    grad = torch.zeros_like(x)
    flat_x, flat_grad = x.view(-1), grad.view(-1)
    for i in range(flat_x.numel()):
        original = flat_x[i].item()
        flat_x[i] = original + eps
        plus = fn(x).item()
        flat_x[i] = original - eps
        minus = fn(x).item()
        flat_x[i] = original
        flat_grad[i] = (plus - minus) / (2 * eps)
    return grad


def _relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    return ((analytic - numeric).norm() / numeric.norm().clamp_min(1e-8)).item()


def _analytic(fn, x: torch.Tensor) -> torch.Tensor:
    leaf = x.clone().requires_grad_(True)
    fn(leaf).backward()
    return leaf.grad


class TestClassifyLoss(unittest.TestCase):

    def test_uniform_logits(self):
        """Test equal logits give log(C)"""
        loss = classify_loss(torch.zeros(4, 6), torch.tensor([0, 1, 2, 5]))
        self.assertAlmostEqual(loss.item(), math.log(6), places=6)

    def test_matches_log_softmax(self):
        logits = torch.randn(5, 6, dtype=torch.float64)
        labels = torch.tensor([3, 0, 0, 4, 1])
        expected = -torch.log_softmax(logits, dim=1)[torch.arange(5), labels].mean()
        self.assertAlmostEqual(classify_loss(logits, labels).item(), expected.item(), places=10)

    def test_invalid_input(self):
        with self.assertRaises(ValueError):
            classify_loss(torch.zeros(2, 5), torch.tensor([0, 1]))
        with self.assertRaises(ValueError):
            classify_loss(torch.tensor([[float('nan')] * 6]), torch.tensor([0]))
        with self.assertRaises(ValueError):
            classify_loss(torch.zeros(2, 6), torch.tensor([0, 6]))

    def test_gradient_matches_finite_difference(self):
        """Test d loss / d logits against central differences at random points"""
        generator = torch.Generator().manual_seed(11)
        for _ in range(10):
            logits = 3.0 * torch.randn(5, 6, generator=generator, dtype=torch.float64)
            labels = torch.randint(0, 6, (5,), generator=generator)

            def loss(x):
                return classify_loss(x, labels)

            error = _relative_error(_analytic(loss, logits), _central_difference(loss, logits.clone()))
            self.assertLess(error, 1e-3)


class TestOrthogonalLoss(unittest.TestCase):

    def test_orthonormal_is_zero(self):
        self.assertAlmostEqual(orthogonal_loss(_orthonormal(8, 6)).item(), 0.0, places=10)

    def test_known_values(self):
        """Test |W^T W - I| summed entrywise"""
        self.assertAlmostEqual(orthogonal_loss(2.0 * _orthonormal(8, 6)).item(), 18.0, places=8)
        self.assertAlmostEqual(orthogonal_loss(torch.zeros(8, 6)).item(), 6.0, places=8)

    def test_gradient_descent_restores_orthogonality(self):
        """Test minimizing the loss alone from a random 8x6 start drives W^T W to I"""
        for seed in range(3):
            generator = torch.Generator().manual_seed(seed)
            weight = torch.randn(8, 6, generator=generator).requires_grad_(True)
            optimizer = torch.optim.SGD([weight], lr=5e-3)
            steps = 5000
            for step in range(steps):
                for group in optimizer.param_groups:
                    group['lr'] = 5e-3 * 0.5 * (1.0 + math.cos(math.pi * step / steps))
                optimizer.zero_grad()
                orthogonal_loss(weight).backward()
                optimizer.step()

            gram = weight.detach().T @ weight.detach()
            self.assertLess((gram - torch.eye(6)).abs().max().item(), 1e-2, f"seed {seed}")

    def test_gradient_matches_finite_difference(self):
        """Test central differences at random points away from the L1 kinks"""
        generator = torch.Generator().manual_seed(12)
        checked = 0
        while checked < 10:
            weight = 0.5 * torch.randn(8, 6, generator=generator, dtype=torch.float64)
            residual = weight.T @ weight - torch.eye(6, dtype=torch.float64)
            if residual.abs().min().item() < 1e-3:
                continue
            error = _relative_error(_analytic(orthogonal_loss, weight),
                                    _central_difference(orthogonal_loss, weight.clone()))
            self.assertLess(error, 1e-3)
            checked += 1


class TestByolLoss(unittest.TestCase):

    def setUp(self):
        generator = torch.Generator().manual_seed(0)
        self.p = torch.randn(4, 8, generator=generator, dtype=torch.float64)
        self.t = torch.randn(4, 8, generator=generator, dtype=torch.float64)

    def test_known_values(self):
        """Test aligned, opposite and orthogonal rows"""
        e1 = torch.tensor([[1.0, 0.0]])
        e2 = torch.tensor([[0.0, 1.0]])
        self.assertAlmostEqual(byol_loss(e1, 3.0 * e1).item(), 0.0, places=6)
        self.assertAlmostEqual(byol_loss(e1, -e1).item(), 4.0, places=6)
        self.assertAlmostEqual(byol_loss(e1, e2).item(), 2.0, places=6)

    def test_scale_invariance_and_symmetry(self):
        base = byol_loss(self.p, self.t).item()
        self.assertAlmostEqual(byol_loss(3.0 * self.p, 0.5 * self.t).item(), base, places=10)
        self.assertAlmostEqual(byol_loss(self.t, self.p).item(), base, places=10)
        self.assertGreaterEqual(base, 0.0)
        self.assertLessEqual(base, 4.0)

    def test_target_is_constant(self):
        """Test no gradient reaches the target argument"""
        p = self.p.clone().requires_grad_(True)
        t = self.t.clone().requires_grad_(True)
        byol_loss(p, t).backward()
        self.assertIsNone(t.grad)
        self.assertIsNotNone(p.grad)

    def test_gradient_matches_finite_difference(self):
        """Test d loss / d prediction at random points with rows well away from zero norm"""
        generator = torch.Generator().manual_seed(13)
        checked = 0
        while checked < 10:
            prediction = torch.randn(4, 8, generator=generator, dtype=torch.float64)
            target = torch.randn(4, 8, generator=generator, dtype=torch.float64)
            if min(prediction.norm(dim=1).min().item(), target.norm(dim=1).min().item()) < 0.1:
                continue

            def loss(x):
                return byol_loss(x, target)

            error = _relative_error(_analytic(loss, prediction), _central_difference(loss, prediction.clone()))
            self.assertLess(error, 1e-3)
            checked += 1

    def test_zero_row_is_degenerate(self):
        t = self.t.clone()
        t[2] = 0.0
        with self.assertRaises(DegenerateInputError):
            byol_loss(self.p, t)
        with self.assertRaises(ValueError):
            byol_loss(self.p, self.t[:, :4])


class TestByelTotal(unittest.TestCase):

    def setUp(self):
        generator = torch.Generator().manual_seed(7)
        self.p1 = torch.randn(5, 8, generator=generator, dtype=torch.float64)
        self.p2 = torch.randn(5, 8, generator=generator, dtype=torch.float64)
        self.t1 = torch.randn(5, 8, generator=generator, dtype=torch.float64)
        self.t2 = torch.randn(5, 8, generator=generator, dtype=torch.float64)
        self.w = torch.randn(8, 6, generator=generator, dtype=torch.float64)
        self.labels = torch.tensor([0, 1, 2, 3, 5])

    def _manual_total(self) -> float:
        def cos_loss(a, b):
            return (2.0 - 2.0 * torch.nn.functional.cosine_similarity(a, b, dim=1)).mean()

        def ce(v):
            return -torch.log_softmax(v @ self.w, dim=1)[torch.arange(5), self.labels].mean()

        shift = self.w[:, self.labels].T
        byol = cos_loss(self.p1 - shift, self.t2 - shift) + cos_loss(self.p2 - shift, self.t1 - shift)
        classify = ce(self.p1) + ce(self.p2)
        ortho = (self.w.T @ self.w - torch.eye(6, dtype=torch.float64)).abs().sum()
        return (byol + classify + ortho).item()

    def test_matches_manual_formula(self):
        """Test the five-term total against a direct computation"""
        breakdown = byel_total(self.p1, self.t2, self.p2, self.t1, self.labels, self.w)
        self.assertAlmostEqual(breakdown.total.item(), self._manual_total(), places=8)
        self.assertEqual(set(breakdown.to_dict()),
                         {'byol', 'byol_swapped', 'classify', 'classify_swapped', 'orthogonal', 'total'})

    def test_view_swap_symmetry(self):
        a = byel_total(self.p1, self.t2, self.p2, self.t1, self.labels, self.w).total.item()
        b = byel_total(self.p2, self.t1, self.p1, self.t2, self.labels, self.w).total.item()
        self.assertAlmostEqual(a, b, places=10)

    def test_byol_configuration(self):
        """Test the BYOL arm reduces to the two bootstrap terms"""
        breakdown = byel_total(self.p1, self.t2, self.p2, self.t1, self.labels, self.w, LossConfig.byol())
        expected = byol_loss(self.p1, self.t2) + byol_loss(self.p2, self.t1)
        self.assertAlmostEqual(breakdown.total.item(), expected.item(), places=10)
        self.assertEqual(breakdown.classify.item(), 0.0)
        self.assertEqual(breakdown.orthogonal.item(), 0.0)

    def test_zero_weights(self):
        config = LossConfig(byol_weight=0.0, classify_weight=0.0, orthogonal_weight=0.0)
        breakdown = byel_total(self.p1, self.t2, self.p2, self.t1, self.labels, self.w, config)
        self.assertEqual(breakdown.total.item(), 0.0)

    def test_classify_emotion_only(self):
        """Test classification gradients stay on W_E when requested"""
        p1 = self.p1.clone().requires_grad_(True)
        p2 = self.p2.clone().requires_grad_(True)
        w = self.w.clone().requires_grad_(True)
        config = LossConfig(byol_weight=0.0, orthogonal_weight=0.0, classify_emotion_only=True)
        byel_total(p1, self.t2, p2, self.t1, self.labels, w, config).total.backward()
        self.assertTrue(torch.allclose(p1.grad, torch.zeros_like(p1)))
        self.assertGreater(w.grad.abs().sum().item(), 0.0)

    def test_gradcheck(self):
        """Test analytic gradients of the total w.r.t. the online outputs with W_E held fixed"""
        config = LossConfig(stop_gradient_emotion=False)

        def total(p1, p2):
            return byel_total(p1, self.t2, p2, self.t1, self.labels, self.w, config).total

        inputs = (self.p1.clone().requires_grad_(True), self.p2.clone().requires_grad_(True))
        self.assertTrue(torch.autograd.gradcheck(total, inputs, eps=1e-6, atol=1e-5))

    def test_gradcheck_emotion_matrix(self):
        """Test analytic gradients w.r.t. W_E through the logits and the orthogonality term"""
        config = LossConfig(subtract_emotion=False)

        def total(p1, p2, w):
            return byel_total(p1, self.t2, p2, self.t1, self.labels, w, config).total

        inputs = (self.p1.clone().requires_grad_(True), self.p2.clone().requires_grad_(True),
                  self.w.clone().requires_grad_(True))
        self.assertTrue(torch.autograd.gradcheck(total, inputs, eps=1e-6, atol=1e-5))

    def test_emotion_gradient_without_stop_gradient(self):
        """Test W_E receives the online-side subtraction gradient only"""
        w = self.w.clone().requires_grad_(True)
        config = LossConfig(classify_weight=0.0, orthogonal_weight=0.0, stop_gradient_emotion=False)
        byel_total(self.p1, self.t2, self.p2, self.t1, self.labels, w, config).total.backward()

        shift = self.w[:, self.labels].T
        p1 = (self.p1 - shift).requires_grad_(True)
        p2 = (self.p2 - shift).requires_grad_(True)
        (byol_loss(p1, self.t2 - shift) + byol_loss(p2, self.t1 - shift)).backward()
        expected = torch.zeros_like(self.w)
        expected.index_add_(1, self.labels, -(p1.grad + p2.grad).T)
        self.assertTrue(torch.allclose(w.grad, expected, atol=1e-10))

    def test_width_mismatch(self):
        with self.assertRaises(ValueError):
            byel_total(self.p1, self.t2, self.p2, self.t1, self.labels, torch.randn(7, 6))

    def test_negative_weight(self):
        with self.assertRaises(ConfigError):
            LossConfig(classify_weight=-1.0).validate()


class TestFullGraphGradient(unittest.TestCase):

    def test_encoder_gradient_matches_finite_difference(self):
        """Test autograd through h, g, q and the loss against central differences at random points"""
        config = ModelConfig(encoder_widths=(4, 8), group_norm_groups=2, hidden_dim=16,
                             projection_dim=8, activation='gelu')
        calculator = ByelLossCalculator(LossConfig())
        labels = torch.tensor([0, 2, 4, 5])
        eps = 1e-4

        for seed in range(10):
            torch.manual_seed(seed)
            network = ByelNetwork(config, image_size=16).double()
            view1 = torch.rand(4, 1, 16, 16, dtype=torch.float64)
            view2 = torch.rand(4, 1, 16, 16, dtype=torch.float64)

            def loss_value():
                outputs = network(view1, view2)
                return calculator.calculate(outputs, labels, network.emotion_matrix).total

            weight = network.online_encoder.blocks[0].weight
            network.zero_grad()
            loss_value().backward()
            analytic = weight.grad.clone()

            numeric = torch.zeros_like(analytic)
            with torch.no_grad():
                for index in itertools.product(*(range(n) for n in weight.shape)):
                    original = weight[index].item()
                    weight[index] = original + eps
                    plus = loss_value().item()
                    weight[index] = original - eps
                    minus = loss_value().item()
                    weight[index] = original
                    numeric[index] = (plus - minus) / (2 * eps)

            error = ((analytic - numeric).norm() / numeric.norm()).item()
            self.assertLess(error, 1e-3, f"seed {seed}")


if __name__ == '__main__':
    unittest.main()
