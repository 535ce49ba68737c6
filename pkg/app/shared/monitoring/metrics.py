import os
import time
from functools import wraps
from typing import Any, Callable, Dict, Optional

from prometheus_client import (
    REGISTRY,
    CollectorRegistry,
    Counter,
    Gauge,
    Histogram,
    Info,
    write_to_textfile,
)

# Training Metrics
training_epochs_total = Counter(
    "training_epochs_total", "Total number of completed training epochs", ["variant"]
)

training_steps_total = Counter(
    "training_steps_total", "Total optimizer steps", ["status"]
)

training_step_duration_seconds = Histogram(
    "training_step_duration_seconds",
    "Forward, backward and optimizer step duration",
    ["variant"],
)

dev_eer = Gauge("dev_eer", "Dev-set EER after the latest epoch", ["variant"])

# Scoring Metrics
utterances_scored_total = Counter(
    "utterances_scored_total", "Total utterances scored", ["status"]
)

# Benchmark Metrics
bench_forward_duration_seconds = Histogram(
    "bench_forward_duration_seconds",
    "Timed forward calls during RTF measurement",
    ["system"],
    buckets=(0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0),
)

# Command Metrics
cli_commands_total = Counter(
    "cli_commands_total", "Total CLI commands run", ["command", "status"]
)

use_case_duration_seconds = Histogram(
    "use_case_duration_seconds", "Use case execution time", ["use_case"]
)

# IO Metrics
io_operations_total = Counter(
    "io_operations_total", "Total file operations", ["operation", "status"]
)

io_operation_duration_seconds = Histogram(
    "io_operation_duration_seconds", "File operation duration", ["operation"]
)

# System Metrics
app_info = Info("app_info", "Application information")

# Error Metrics
errors_total = Counter(
    "errors_total", "Total number of errors", ["error_type", "component"]
)


def track_time(metric: Histogram, labels: Optional[Dict[str, Any]] = None):
    """Decorator to track execution time"""

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            start_time = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                duration = time.perf_counter() - start_time
                if labels:
                    metric.labels(**labels).observe(duration)
                else:
                    metric.observe(duration)

        return wrapper

    return decorator


def count_calls(metric: Counter, labels: Optional[Dict[str, Any]] = None):
    """Decorator to count function calls, labelling failures status=error"""

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            try:
                result = func(*args, **kwargs)
            except Exception:
                if labels:
                    metric.labels(**{**labels, "status": "error"}).inc()
                else:
                    metric.inc()
                raise
            if labels:
                metric.labels(**labels).inc()
            else:
                metric.inc()
            return result

        return wrapper

    return decorator


def record_training_step(status: str, variant: str, duration: Optional[float] = None):
    """Record an optimizer step; status is applied or skipped"""
    training_steps_total.labels(status=status).inc()
    if duration is not None:
        training_step_duration_seconds.labels(variant=variant).observe(duration)


def record_epoch(variant: str, eer: float) -> None:
    """Record a finished epoch and its dev EER"""
    training_epochs_total.labels(variant=variant).inc()
    dev_eer.labels(variant=variant).set(eer)


def record_utterance_scored(status: str) -> None:
    utterances_scored_total.labels(status=status).inc()


def record_io_operation(
    operation: str, status: str, duration: Optional[float] = None
) -> None:
    """Record a file operation"""
    io_operations_total.labels(operation=operation, status=status).inc()
    if duration is not None:
        io_operation_duration_seconds.labels(operation=operation).observe(duration)


def record_error(error_type: str, component: str):
    """Record an error"""
    errors_total.labels(error_type=error_type, component=component).inc()


def set_app_info(version: str, environment: str):
    """Set application information"""
    app_info.info({"version": version, "environment": environment})


def export_metrics(path: str, registry: CollectorRegistry = REGISTRY) -> None:
    """Write the registry in the Prometheus text format"""
    write_to_textfile(path, registry)


class MetricsContext:
    """Context manager timing an operation and recording its outcome"""

    def __init__(self, operation: str, component: str) -> None:
        self.operation = operation
        self.component = component
        self.start_time: Optional[float] = None
        self.duration: float = 0.0

    def __enter__(self) -> "MetricsContext":
        self.start_time = time.perf_counter()
        return self

    def __exit__(
        self,
        exc_type: Optional[type],
        exc_val: Optional[Exception],
        exc_tb: Optional[Any],
    ) -> None:
        if self.start_time is not None:
            self.duration = time.perf_counter() - self.start_time

        if exc_type is None:
            status = "success"
        else:
            status = "error"
            record_error(exc_type.__name__, self.component)

        if self.component == "io":
            record_io_operation(self.operation, status, self.duration)
        elif self.component == "scoring":
            record_utterance_scored(status)


def finish_run(run_dir: str, enabled: bool, registry: CollectorRegistry = REGISTRY) -> None:
    """Write ``<run_dir>/metrics.prom`` when metrics are enabled"""
    if enabled:
        export_metrics(os.path.join(run_dir, "metrics.prom"), registry)
