import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import matplotlib
import pandas as pd

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import seaborn as sns  # noqa: E402

ARM_LABELS = {
    'supervised': 'Supervised only',
    'byol': 'BYOL pre-training',
    'byel': 'BYEL pre-training',
}


def check_ordering(higher: float, lower: float, tolerance: float) -> str:
    """'ok' when higher >= lower, 'flag' for a shortfall within tolerance, else 'violated'"""
    gap = higher - lower
    if gap >= 0:
        return 'ok'
    return 'flag' if -gap <= tolerance else 'violated'


class ArmComparator:
    """Target-domain macro F1 of the compared arms, per seed, with medians"""

    def __init__(self, arms: Sequence[str], tolerance: float = 0.01):
        self.arms = list(arms)
        self.tolerance = tolerance
        self.logger = logging.getLogger(__name__)
        self.arm_rows: List[Dict[str, Any]] = []
        self.ablation_rows: List[Dict[str, Any]] = []

    def add_arm_result(self, arm: str, seed: int, macro_f1: float, transfer_hash: str,
                       best_epoch: Optional[int] = None):
        if arm not in self.arms:
            raise ValueError(f"Unknown arm: {arm}")
        self.arm_rows.append({'arm': arm, 'seed': seed, 'macro_f1': macro_f1,
                              'best_epoch': best_epoch, 'transfer_config_hash': transfer_hash})

    def add_ablation_result(self, fraction: float, epoch: int, seed: int, macro_f1: float):
        self.ablation_rows.append({'fraction': fraction, 'pretrain_epoch': epoch,
                                   'seed': seed, 'macro_f1': macro_f1})

    def arm_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.arm_rows, columns=['arm', 'seed', 'macro_f1', 'best_epoch',
                                                    'transfer_config_hash'])

    def ablation_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.ablation_rows, columns=['fraction', 'pretrain_epoch', 'seed', 'macro_f1'])

    def arm_medians(self) -> Dict[str, float]:
        frame = self.arm_frame()
        medians = frame.groupby('arm')['macro_f1'].median()
        return {arm: float(medians[arm]) for arm in self.arms if arm in medians.index}

    def ablation_medians(self) -> List[Dict[str, Any]]:
        frame = self.ablation_frame()
        if frame.empty:
            return []
        grouped = frame.groupby(['fraction', 'pretrain_epoch'])['macro_f1'].median().reset_index()
        grouped = grouped.sort_values('pretrain_epoch')
        return [{'fraction': float(r.fraction), 'pretrain_epoch': int(r.pretrain_epoch),
                 'median_macro_f1': float(r.macro_f1)} for r in grouped.itertuples()]

    def shared_transfer_config(self) -> bool:
        """Every arm of a seed was transferred with the same config"""
        frame = self.arm_frame()
        if frame.empty:
            return True
        return bool(frame.groupby('seed')['transfer_config_hash'].nunique().max() <= 1)

    def ordering_checks(self) -> Dict[str, str]:
        medians = self.arm_medians()
        checks = {}
        if 'byel' in medians:
            for other in ('byol', 'supervised'):
                if other in medians:
                    checks[f"byel_vs_{other}"] = check_ordering(medians['byel'], medians[other], self.tolerance)

        ablation = self.ablation_medians()
        for earlier, later in zip(ablation, ablation[1:]):
            key = f"ablation_epoch_{earlier['pretrain_epoch']}_to_{later['pretrain_epoch']}"
            checks[key] = check_ordering(later['median_macro_f1'], earlier['median_macro_f1'], self.tolerance)

        for name, status in checks.items():
            if status != 'ok':
                self.logger.warning(f"Ordering check {name}: {status}")
        return checks

    def summary(self) -> Dict[str, Any]:
        return {
            'medians': self.arm_medians(),
            'ablation': self.ablation_medians(),
            'ordering': self.ordering_checks(),
            'shared_transfer_config': self.shared_transfer_config(),
            'transfer_config_hashes': sorted(self.arm_frame()['transfer_config_hash'].unique().tolist()),
        }

    def generate_comparison_report(self) -> str:
        """Markdown tables of per-seed scores, medians and the epoch ablation"""
        frame = self.arm_frame()
        seeds = sorted(frame['seed'].unique().tolist())
        medians = self.arm_medians()

        report = ["# Target-domain macro F1 by method", ""]
        headers = ['Method'] + [f"Seed {s}" for s in seeds] + ['Median']
        table_data = []
        for arm in self.arms:
            arm_scores = frame[frame['arm'] == arm].set_index('seed')['macro_f1']
            if arm_scores.empty:
                continue
            row = [ARM_LABELS.get(arm, arm)]
            row += [f"{arm_scores[s]:.4f}" if s in arm_scores.index else 'N/A' for s in seeds]
            row.append(f"{medians[arm]:.4f}")
            table_data.append(row)
        report.append(self._format_markdown_table(headers, table_data))

        report.append("")
        report.append(self._format_markdown_table(
            ['Seed', 'Transfer config hash'],
            [[str(seed), h[:16]] for seed, h in frame.groupby('seed')['transfer_config_hash'].first().items()]))
        report.append("")
        report.append(f"Arms share the transfer config within each seed: "
                      f"{'yes' if self.shared_transfer_config() else 'NO'}")

        ablation = self.ablation_medians()
        if ablation:
            report.extend(["", "# Pre-training epoch ablation (BYEL)", ""])
            report.append(self._format_markdown_table(
                ['Fraction', 'Pre-training epoch', 'Median macro F1'],
                [[f"{a['fraction']:.2f}", str(a['pretrain_epoch']), f"{a['median_macro_f1']:.4f}"]
                 for a in ablation]))

        report.extend(["", "# Ordering checks", ""])
        for name, status in self.ordering_checks().items():
            report.append(f"- {name}: {status}")

        return "\n".join(report) + "\n"

    def _format_markdown_table(self, headers: List[str], data: List[List[str]]) -> str:
        table = ["| " + " | ".join(headers) + " |"]
        table.append("|" + "|".join(["---"] * len(headers)) + "|")
        for row in data:
            table.append("| " + " | ".join(row) + " |")
        return "\n".join(table)

    def generate_performance_charts(self, output_dir: Union[str, Path]) -> Optional[Path]:
        """Bar chart of arm medians, plus the ablation curve when present"""
        try:
            sns.set_style("whitegrid")
            medians = self.arm_medians()
            ablation = self.ablation_medians()

            fig, axes = plt.subplots(1, 2 if ablation else 1, figsize=(12 if ablation else 6, 5),
                                     squeeze=False)
            axes = axes.ravel()

            labels = [ARM_LABELS.get(arm, arm) for arm in medians]
            bars = axes[0].bar(labels, list(medians.values()),
                               color=sns.color_palette("husl", len(medians)))
            axes[0].set_title('Median target macro F1', fontsize=14, fontweight='bold')
            axes[0].set_ylim(0, 1)
            for bar, value in zip(bars, medians.values()):
                axes[0].text(bar.get_x() + bar.get_width() / 2., bar.get_height() + 0.01,
                             f'{value:.3f}', ha='center', va='bottom')

            if ablation:
                axes[1].plot([a['pretrain_epoch'] for a in ablation],
                             [a['median_macro_f1'] for a in ablation], marker='o')
                axes[1].set_title('Pre-training epoch ablation', fontsize=14, fontweight='bold')
                axes[1].set_xlabel('Pre-training epoch')
                axes[1].set_ylabel('Median macro F1')

            plt.tight_layout()
            path = Path(output_dir) / 'compare.png'
            plt.savefig(path, dpi=300, bbox_inches='tight')
            plt.close()
            self.logger.info(f"Comparison chart saved to: {path}")
            return path
        except Exception as e:
            self.logger.error(f"Error generating charts: {e}")
            return None

    def save(self, report_dir: Union[str, Path]) -> Dict[str, Path]:
        report_dir = Path(report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            'csv': report_dir / 'compare.csv',
            'ablation_csv': report_dir / 'compare_ablation.csv',
            'markdown': report_dir / 'compare.md',
            'json': report_dir / 'compare.json',
        }
        self.arm_frame().to_csv(paths['csv'], index=False)
        self.ablation_frame().to_csv(paths['ablation_csv'], index=False)
        paths['markdown'].write_text(self.generate_comparison_report(), encoding='utf-8')
        with open(paths['json'], 'w', encoding='utf-8') as f:
            json.dump(self.summary(), f, indent=2, sort_keys=True)
        chart = self.generate_performance_charts(report_dir)
        if chart is not None:
            paths['chart'] = chart
        return paths
