import time
from typing import Any, Callable, List, Sequence

import numpy as np

from app.domain.audio.entity import FrontendConfig
from app.domain.bench.entity import DEFAULT_DURATIONS, RtfRecord
from app.shared.errors import InvalidArgumentError
from app.shared.monitoring.logging import get_logger
from app.shared.monitoring.metrics import bench_forward_duration_seconds

logger = get_logger(__name__)

# a positive floor so a no-op forward still reports rtf > 0
MIN_WALL_TIME = 1e-9
MAX_INNER_CALLS = 1 << 16

Prepare = Callable[[float], Callable[[], Any]]


def frames_for_duration(duration_s: float, frontend: FrontendConfig = FrontendConfig()) -> int:
    """Frame count the toy front-end yields for duration_s seconds of audio"""
    return frontend.frames_for(int(round(duration_s * frontend.sample_rate)))


def _time_calls(forward: Callable[[], Any], calls: int) -> float:
    start = time.perf_counter()
    for _ in range(calls):
        forward()
    return (time.perf_counter() - start) / calls


def _calls_per_sample(forward: Callable[[], Any]) -> int:
    """Grow the calls per timed sample until the clock resolves 1% of it"""
    resolution = time.get_clock_info("perf_counter").resolution
    calls = 1
    while calls < MAX_INNER_CALLS:
        if resolution <= 0.01 * _time_calls(forward, calls) * calls:
            break
        calls *= 10
    if calls > 1:
        logger.warning(
            f"Timer resolution {resolution:g}s is coarse for this forward; "
            f"timing {calls} calls per run"
        )
    return calls


def measure_rtf(
    system: str,
    prepare: Prepare,
    durations: Sequence[float] = DEFAULT_DURATIONS,
    runs: int = 20,
    warmup: int = 3,
    frontend: FrontendConfig = FrontendConfig(),
) -> List[RtfRecord]:
    """
    Real-time factor of one system over a duration sweep.

    Args:
        system: label written to the results
        prepare: builds the inputs for a duration and returns the zero-arg
            forward to time; input construction is never timed
        durations: seconds, processed in increasing order
        runs: timed runs per duration, averaged
        warmup: untimed runs per duration

    Returns:
        one RtfRecord per duration
    """
    if runs < 1:
        raise InvalidArgumentError("runs must be at least 1")

    records = []
    for duration in sorted(durations):
        forward = prepare(duration)
        for _ in range(warmup):
            forward()
        calls = _calls_per_sample(forward)

        times = np.array([_time_calls(forward, calls) for _ in range(runs)])
        for t in times:
            bench_forward_duration_seconds.labels(system=system).observe(float(t))
        wall = max(float(times.mean()), MIN_WALL_TIME)
        records.append(
            RtfRecord(
                system=system,
                duration_s=duration,
                frames=frames_for_duration(duration, frontend),
                wall_time_s=wall,
                rtf=wall / duration,
                runs=runs,
                std=0.0 if runs == 1 else float(times.std()),
            )
        )
        logger.info(f"system={system} duration_s={duration} rtf={wall / duration:.6f}")
    return records


def wall_time_ratio(records: Sequence[RtfRecord], long_s: float, short_s: float) -> float:
    by_duration = {r.duration_s: r.wall_time_s for r in records}
    return by_duration[long_s] / by_duration[short_s]
