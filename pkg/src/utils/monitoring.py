import time
import logging
import threading
from contextlib import contextmanager
from typing import Dict, Any, Iterator

import psutil


class ResourceMonitor:
    """Samples CPU and resident memory of the training process"""

    def __init__(self, interval: float = 1.0):
        self.interval = interval
        self.logger = logging.getLogger(__name__)
        self.process = psutil.Process()
        self.monitoring = False
        self.monitor_thread = None
        self.samples = []

    def start_monitoring(self):
        """Start background sampling"""
        if self.monitoring:
            self.logger.warning("Monitoring is already running")
            return

        self.monitoring = True
        self.process.cpu_percent(interval=None)
        self.monitor_thread = threading.Thread(target=self._monitor_loop, daemon=True)
        self.monitor_thread.start()

    def stop_monitoring(self):
        """Stop background sampling and take a final sample"""
        self.monitoring = False
        if self.monitor_thread:
            self.monitor_thread.join(timeout=5.0)
            self.monitor_thread = None
        self.samples.append(self._collect_sample())

    def _monitor_loop(self):
        while self.monitoring:
            self.samples.append(self._collect_sample())
            time.sleep(self.interval)

    def _collect_sample(self) -> Dict[str, float]:
        return {
            'cpu_percent': self.process.cpu_percent(interval=None),
            'rss_mb': self.process.memory_info().rss / (1024 * 1024),
        }

    def get_metrics_summary(self) -> Dict[str, Any]:
        """Peak and mean usage over the monitored span"""
        if not self.samples:
            return {}

        cpu_values = [s['cpu_percent'] for s in self.samples]
        rss_values = [s['rss_mb'] for s in self.samples]

        return {
            'cpu_avg': sum(cpu_values) / len(cpu_values),
            'cpu_max': max(cpu_values),
            'rss_peak_mb': max(rss_values),
            'samples': len(self.samples),
        }


class PerformanceProfiler:
    """Wall-clock timer for named run phases"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self.durations: Dict[str, float] = {}

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.durations[name] = self.durations.get(name, 0.0) + elapsed
            self.logger.info(f"Phase {name} finished in {elapsed:.2f} s")

    def get_duration(self, name: str) -> float:
        return self.durations.get(name, 0.0)

    def summary(self) -> Dict[str, float]:
        summary = dict(self.durations)
        summary['total'] = sum(self.durations.values())
        return summary
