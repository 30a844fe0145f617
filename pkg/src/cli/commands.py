"""
Command implementations; each returns a process exit code

0 success, 1 config or benchmark-settings error, 2 I/O failure, 3 missing artifact,
4 non-finite loss (training aborted)
"""

import functools
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

from rich.console import Console
from rich.table import Table

from ..data.image_set import write_image_set
from ..data.labels import CLASS_NAMES
from ..data.manifest import class_distribution, load_manifest
from ..data.toy_benchmark import generate_toy_benchmark
from ..evaluation.baseline_comparison import ArmComparator
from ..evaluation.metrics_calculator import LabelOracle, MetricsCalculator
from ..training.losses import LossConfig
from ..training.transfer_trainer import load_transfer_model, resolve_best_checkpoint
from ..utils.config import RunConfig
from ..utils.exceptions import (ConfigError, DegenerateInputError, ManifestError, MissingArtifactError,
                                NonFiniteLossError)
from ..utils.logging_utils import setup_logging
from ..utils.monitoring import PerformanceProfiler, ResourceMonitor
from ..utils.seeding import derive_seeds
from . import pipeline

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_MISSING = 3
EXIT_NON_FINITE = 4

ORACLE_CHECKPOINT = 'oracle'

console = Console()


def exit_code_for(error: Exception) -> Optional[int]:
    """Stable exit code for a known failure, None for anything unexpected"""
    if isinstance(error, MissingArtifactError):
        return EXIT_MISSING
    if isinstance(error, (NonFiniteLossError, DegenerateInputError)):
        return EXIT_NON_FINITE
    if isinstance(error, (ConfigError, ManifestError, ValueError)):
        return EXIT_CONFIG
    if isinstance(error, OSError):
        return EXIT_IO
    return None


def command(name: str) -> Callable:
    """Run dir setup, phase timing and exception-to-exit-code mapping"""
    def decorator(func: Callable[..., int]) -> Callable[..., int]:
        @functools.wraps(func)
        def wrapper(config: RunConfig, *args, **kwargs) -> int:
            run_dir = Path(config.paths.run_dir)
            profiler = PerformanceProfiler()
            monitor = ResourceMonitor()
            try:
                run_dir.mkdir(parents=True, exist_ok=True)
                setup_logging(run_dir / 'logs' / 'byel.log')
                config.save(run_dir / 'config.json')

                monitor.start_monitoring()
                with profiler.phase(name):
                    code = func(config, *args, **kwargs)
                monitor.stop_monitoring()
                _write_run_summary(run_dir, name, profiler.summary(), monitor.get_metrics_summary())
                return code
            except Exception as e:
                monitor.stop_monitoring()
                code = exit_code_for(e)
                if code is None:
                    logger.error(f"Error during {name}: {e}")
                    raise
                if isinstance(e, NonFiniteLossError) and e.last_checkpoint:
                    logger.error(f"Error during {name}: {e} (last good checkpoint: {e.last_checkpoint})")
                else:
                    logger.error(f"Error during {name}: {e}")
                return code
        return wrapper
    return decorator


def _write_run_summary(run_dir: Path, name: str, phases: Dict[str, float], resources: Dict[str, Any]):
    path = run_dir / 'report' / 'run_summary.json'
    path.parent.mkdir(parents=True, exist_ok=True)
    summary = {}
    if path.is_file():
        with open(path, 'r', encoding='utf-8') as f:
            summary = json.load(f)
    summary[name] = {'seconds': phases, 'resources': resources}
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(summary, f, indent=2, sort_keys=True)


def _distribution_table(title: str, distributions: Dict[str, list]) -> Table:
    table = Table(title=title)
    table.add_column('Domain')
    for name in CLASS_NAMES:
        table.add_column(name, justify='right')
    table.add_column('Total', justify='right')
    for domain, counts in distributions.items():
        table.add_row(domain, *[str(c) for c in counts], str(sum(counts)))
    return table


@command('generate-data')
def cmd_generate_data(config: RunConfig) -> int:
    """Materialize the ToyEmotions source/target trees and manifests"""
    config.toy.validate()
    data_root = Path(config.paths.data_root)
    source, target = generate_toy_benchmark(config.toy)

    write_image_set(source, data_root, pipeline.SOURCE_MANIFEST)
    write_image_set(target, data_root, pipeline.TARGET_MANIFEST)

    distributions = {
        'source': class_distribution(load_manifest(data_root / pipeline.SOURCE_MANIFEST)),
        'target': class_distribution(load_manifest(data_root / pipeline.TARGET_MANIFEST)),
    }
    console.print(_distribution_table(f"ToyEmotions class distribution ({data_root})", distributions))
    logger.info(f"Generated {len(source)} source and {len(target)} target images under {data_root}")
    return EXIT_OK


@command('pretrain')
def cmd_pretrain(config: RunConfig, resume: Optional[Union[str, Path]] = None) -> int:
    source, _ = pipeline.load_domains(config)
    results = pipeline.pretrain(config, source, config.paths.run_dir, resume_from=resume)
    logger.info(f"Pre-training finished after {results['steps']} steps, "
                f"final checkpoint {results['last_checkpoint']}")
    return EXIT_OK


@command('transfer')
def cmd_transfer(config: RunConfig, checkpoint: Optional[Union[str, Path]] = None,
                 from_scratch: bool = False) -> int:
    source, target = pipeline.load_domains(config)
    run_dir = config.paths.run_dir
    if from_scratch:
        results = pipeline.transfer(config, pipeline.random_encoder(config), source, target, run_dir)
    else:
        checkpoint = checkpoint or pipeline.pretrain_checkpoint(run_dir)
        results = pipeline.transfer_from_checkpoint(config, checkpoint, source, target, run_dir)

    logger.info(f"Transfer finished: best macro F1 {results['best_macro_f1']:.4f} "
                f"at epoch {results['best_epoch']}")
    return EXIT_OK


@command('eval')
def cmd_eval(config: RunConfig, checkpoint: Optional[Union[str, Path]] = None) -> int:
    """Evaluate a transfer checkpoint (or the label oracle) on the target domain"""
    _, target = pipeline.load_domains(config)
    if checkpoint == ORACLE_CHECKPOINT:
        model = LabelOracle(target.labels)
    else:
        checkpoint = checkpoint or resolve_best_checkpoint(config.paths.run_dir)
        model, header = load_transfer_model(checkpoint)
        if header['image_size'] != target.image_size:
            raise ConfigError(f"Model expects {header['image_size']}px images, data has {target.image_size}px")

    calculator = MetricsCalculator(config.eval.skip_absent_classes, config.eval.batch_size)
    outcome = calculator.evaluate_model(model, target.images, target.labels)
    report = outcome['report']
    refs = target.refs if config.eval.write_predictions else None
    calculator.save_report(report, Path(config.paths.run_dir) / 'report', 'eval',
                           outcome['predictions'], outcome['truths'], refs)

    table = Table(title=f"Target-domain evaluation (macro F1 {report.macro_f1:.4f})")
    for column in ('Class', 'Precision', 'Recall', 'F1'):
        table.add_column(column, justify='right' if column != 'Class' else 'left')
    for i, name in enumerate(CLASS_NAMES):
        table.add_row(name, f"{report.per_class_precision[i]:.4f}",
                      f"{report.per_class_recall[i]:.4f}", f"{report.per_class_f1[i]:.4f}")
    console.print(table)
    return EXIT_OK


@command('compare')
def cmd_compare(config: RunConfig) -> int:
    """Supervised-only, BYOL and BYEL arms on identical seeds plus the epoch ablation"""
    source, target = pipeline.load_domains(config)
    run_dir = Path(config.paths.run_dir)
    comparator = ArmComparator(config.compare.arms, config.compare.ordering_tolerance)

    for seed in derive_seeds(config.seed, config.compare.num_seeds):
        seeded = config.with_seed(seed)
        transfer_hash = pipeline.transfer_hash(seeded)
        seed_dir = run_dir / 'compare' / f"seed_{seed}"
        logger.info(f"Compare seed {seed}")

        for arm in config.compare.arms:
            arm_dir = seed_dir / arm
            if arm == 'supervised':
                results = pipeline.transfer(seeded, pipeline.random_encoder(seeded), source, target, arm_dir)
            else:
                loss_config = LossConfig.byol() if arm == 'byol' else seeded.loss
                pipeline.pretrain(seeded, source, arm_dir, loss_config=loss_config)
                results = pipeline.transfer_from_checkpoint(
                    seeded, pipeline.pretrain_checkpoint(arm_dir), source, target, arm_dir / 'transfer')
            comparator.add_arm_result(arm, seed, results['best_macro_f1'], transfer_hash,
                                      results['best_epoch'])

            if arm == 'byel':
                _run_ablation(seeded, comparator, seed, results, source, target, arm_dir)

    paths = comparator.save(run_dir / 'report')
    _print_compare(comparator)
    logger.info(f"Comparison report written to {paths['markdown']}")
    return EXIT_OK


def _run_ablation(config: RunConfig, comparator: ArmComparator, seed: int, final_results: Dict[str, Any],
                  source, target, arm_dir: Path):
    epochs = config.pretrain.epochs
    for fraction in sorted(config.compare.ablation_fractions):
        epoch = max(1, int(round(fraction * epochs)))
        if epoch == epochs:
            score = final_results['best_macro_f1']
        else:
            results = pipeline.transfer_from_checkpoint(
                config, pipeline.pretrain_checkpoint(arm_dir, epoch), source, target,
                arm_dir / f"ablation_epoch_{epoch:04d}")
            score = results['best_macro_f1']
        comparator.add_ablation_result(fraction, epoch, seed, score)


def _print_compare(comparator: ArmComparator):
    table = Table(title='Median target-domain macro F1')
    table.add_column('Arm')
    table.add_column('Median', justify='right')
    for arm, median in comparator.arm_medians().items():
        table.add_row(arm, f"{median:.4f}")
    for row in comparator.ablation_medians():
        table.add_row(f"byel @ epoch {row['pretrain_epoch']}", f"{row['median_macro_f1']:.4f}")
    console.print(table)
    for name, status in comparator.ordering_checks().items():
        console.print(f"{name}: {status}")
