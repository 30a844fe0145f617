import unittest
import os
import sys
import tempfile
from pathlib import Path

import pandas as pd
import torch

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.core.byel_network import ByelNetwork, ModelConfig, build_encoder
from src.core.checkpoint import module_tensors, save_checkpoint
from src.core.classifier import TransferModel, init_classifier
from src.data.image_set import ImageSet
from src.data.manifest import DatasetManifest
from src.data.toy_benchmark import ToySpec, generate_toy_benchmark
from src.evaluation.metrics_calculator import predict
from src.training.transfer_trainer import (TransferConfig, TransferTrainer, load_pretrained_encoder,
                                           load_transfer_model, resolve_best_checkpoint, run_transfer,
                                           select_best_epoch)
from src.utils.exceptions import ConfigError, MissingArtifactError

MODEL = ModelConfig(encoder_widths=(4, 8), group_norm_groups=2, hidden_dim=16, projection_dim=8)


def _model(seed: int = 0) -> TransferModel:
    torch.manual_seed(seed)
    return TransferModel(build_encoder(MODEL, 16), init_classifier(MODEL.feature_dim, seed))


def _config(**kwargs) -> TransferConfig:
    values = dict(epochs=3, batch_size=8, learning_rate=1e-2, progress=False, log_every=1)
    values.update(kwargs)
    return TransferConfig(**values)


class TestSelectBestEpoch(unittest.TestCase):

    def test_earliest_maximum(self):
        """Test ties go to the earliest epoch"""
        self.assertEqual(select_best_epoch([0.3, 0.5, 0.5, 0.4]), 2)
        self.assertEqual(select_best_epoch([0.7]), 1)
        self.assertEqual(select_best_epoch([0.1, 0.1, 0.2]), 3)
        with self.assertRaises(ValueError):
            select_best_epoch([])


class TestTransferTrainer(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.source, self.target = generate_toy_benchmark(
            ToySpec(image_size=16, per_class_count_source=3, per_class_count_target=2, seed=0))

    def tearDown(self):
        self.tmp.cleanup()

    def test_frozen_encoder(self):
        """Test finetune_encoder=False trains only the classifier"""
        model = _model()
        encoder_before = [p.detach().clone() for p in model.encoder.parameters()]
        classifier_before = model.classifier.weight.detach().clone()

        TransferTrainer(model, _config(finetune_encoder=False), MODEL).train(self.source, self.target)

        for p, before in zip(model.encoder.parameters(), encoder_before):
            self.assertTrue(torch.equal(p, before))
        self.assertFalse(torch.equal(model.classifier.weight, classifier_before))

    def test_finetuned_encoder_changes(self):
        model = _model()
        before = [p.detach().clone() for p in model.encoder.parameters()]
        TransferTrainer(model, _config(epochs=1), MODEL).train(self.source, self.target)
        self.assertTrue(any(not torch.equal(p, b) for p, b in zip(model.encoder.parameters(), before)))

    def test_zero_learning_rate(self):
        model = _model()
        before = {k: v.clone() for k, v in model.state_dict().items()}
        trainer = TransferTrainer(model, _config(), MODEL)
        for group in trainer.optimizer.param_groups:
            group['lr'] = 0.0
        for _ in range(3):
            trainer.transfer_step(self.source.images[:4], self.source.labels[:4])
        for key, value in model.state_dict().items():
            self.assertTrue(torch.equal(value, before[key]), key)

    def test_overfits_single_example(self):
        """Test repeated steps on one image drive its loss towards zero"""
        trainer = TransferTrainer(_model(), _config(learning_rate=1e-2), MODEL)
        images, labels = self.source.images[7:8], self.source.labels[7:8]
        first = trainer.transfer_step(images, labels)
        for _ in range(150):
            last = trainer.transfer_step(images, labels)
        self.assertLess(last, 0.05)
        self.assertLess(last, first)

    def test_train_writes_best_checkpoint(self):
        """Test best.json, metrics CSV and reloading the selected model"""
        trainer = TransferTrainer(_model(), _config(), MODEL, run_dir=self.root, config_hash='h')
        results = trainer.train(self.source, self.target)

        self.assertEqual(results['best_epoch'], select_best_epoch([r['val_macro_f1'] for r in results['history']]))
        self.assertEqual(results['first_macro_f1'], results['history'][0]['val_macro_f1'])

        metrics = pd.read_csv(self.root / 'metrics' / 'transfer.csv')
        self.assertEqual(len(metrics), 3)
        self.assertIn('f1_happiness', metrics.columns)

        best = resolve_best_checkpoint(self.root)
        model, header = load_transfer_model(best)
        self.assertEqual(header['phase'], 'transfer')
        self.assertEqual(header['epoch'], results['best_epoch'])
        self.assertAlmostEqual(header['macro_f1'], results['best_macro_f1'])
        self.assertEqual(header['config_hash'], 'h')
        self.assertEqual(len(predict(model, self.target.images)), len(self.target))

    def test_validation_must_be_target(self):
        trainer = TransferTrainer(_model(), _config(epochs=1), MODEL)
        with self.assertRaises(ValueError):
            trainer.train(self.source, self.source)

    def test_missing_best_pointer(self):
        with self.assertRaises(MissingArtifactError):
            resolve_best_checkpoint(self.root)

    def test_invalid_config(self):
        with self.assertRaises(ConfigError):
            _config(optimizer='sgd').validate()
        with self.assertRaises(ConfigError):
            _config(epochs=0).validate()

    def test_run_transfer_is_deterministic(self):
        scores = []
        for _ in range(2):
            torch.manual_seed(4)
            encoder = build_encoder(MODEL, 16)
            results = run_transfer(_config(epochs=2), encoder, MODEL, self.source, self.target)
            scores.append([row['train_loss'] for row in results['history']])
        self.assertEqual(scores[0], scores[1])

    def test_single_class_subset(self):
        """Test training on a manifest holding one example"""
        manifest = DatasetManifest(entries=self.source.manifest.entries[:1])
        single = ImageSet(manifest=manifest, images=self.source.images[:1], labels=self.source.labels[:1])
        results = TransferTrainer(_model(), _config(epochs=1), MODEL).train(single, self.target)
        self.assertEqual(results['best_epoch'], 1)


class TestPretrainedEncoder(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_only_encoder_survives(self):
        """Test the encoder is loaded from online_encoder.* and nothing else"""
        torch.manual_seed(0)
        network = ByelNetwork(MODEL, image_size=16)
        header = {'phase': 'pretrain', 'epoch': 1, 'step': 3, 'image_size': 16, 'model': MODEL.to_dict()}
        save_checkpoint(self.root / 'ckpt', module_tensors(network), header)

        encoder, loaded_header = load_pretrained_encoder(self.root / 'ckpt')
        self.assertEqual(loaded_header['step'], 3)
        for (name, a), b in zip(network.online_encoder.state_dict().items(), encoder.state_dict().values()):
            self.assertTrue(torch.equal(a, b), name)

        with self.assertRaises(ConfigError):
            load_transfer_model(self.root / 'ckpt')
        with self.assertRaises(MissingArtifactError):
            load_pretrained_encoder(self.root / 'absent')


if __name__ == '__main__':
    unittest.main()
