import os
from typing import Any, Callable, Optional

import numpy as np
import torch

from app.application.v1.bench.schemas import BenchOutcome
from app.domain.audio.entity import Waveform
from app.domain.audio.frontend import toy_frontend
from app.domain.bench.timing import frames_for_duration, measure_rtf
from app.domain.network.attention import AttentionReferenceSystem
from app.domain.network.bimamba import scan_branch_count
from app.domain.network.detector import build_detector
from app.infrastructure.config import RunConfig
from app.infrastructure.storage.report_writer import write_rtf_csv, write_rtf_svg
from app.shared.errors import DetectorError
from app.shared.monitoring.logging import LoggerMixin
from app.shared.monitoring.metrics import record_error, track_time, use_case_duration_seconds

RTF_CSV = "rtf.csv"
RTF_SVG = "rtf.svg"


def _no_grad(module: torch.nn.Module, make_input: Callable[[], Any]) -> Callable[[], Any]:
    def forward():
        with torch.no_grad():
            return module(make_input())

    return forward


class BenchmarkUseCase(LoggerMixin):
    @track_time(use_case_duration_seconds, {"use_case": "bench"})
    def execute(
        self, config: RunConfig, out_dir: str, runs: Optional[int] = None
    ) -> BenchOutcome:
        """
        RTF sweep of the configured systems, single-threaded:
            <variant>_trunk     projection, trunk and head on features
            <variant>_frontend  the same plus the toy front-end on audio
            attention           projection, self-attention stack and head

        The attention stack is as deep as the trunk has scan branches unless
        ``[bench] attention_layers`` says otherwise.
        """
        bench = config.bench
        runs = runs if runs is not None else bench.runs
        threads = torch.get_num_threads()
        torch.set_num_threads(1)
        try:
            records = []
            for system in bench.systems:
                label, prepare = self._system(config, system)
                self.logger.info(f"Benchmarking {label} over {len(bench.durations)} durations")
                records.extend(
                    measure_rtf(
                        label,
                        prepare,
                        bench.durations,
                        runs=runs,
                        warmup=bench.warmup,
                        frontend=config.frontend,
                    )
                )
            csv_path = os.path.join(out_dir, RTF_CSV)
            svg_path = os.path.join(out_dir, RTF_SVG)
            write_rtf_csv(records, csv_path)
            write_rtf_svg(records, svg_path)
        except DetectorError as e:
            self.logger.error(f"Benchmark failed: {e.detail}")
            record_error(type(e).__name__, "bench")
            raise
        finally:
            torch.set_num_threads(threads)
        return BenchOutcome(csv=csv_path, svg=svg_path, records=records)

    def _system(self, config: RunConfig, system: str):
        generator = torch.Generator().manual_seed(config.run.seed)
        variant = config.model.variant.value
        d_feat = config.model.d_feat

        def features(duration: float) -> torch.Tensor:
            frames = frames_for_duration(duration, config.frontend)
            return torch.randn(frames, d_feat, generator=generator)

        if system == "attention":
            layers = config.bench.attention_layers or scan_branch_count(config.model)
            torch.manual_seed(config.run.seed)
            reference = AttentionReferenceSystem(d_feat, config.model.d_model, layers).eval()

            def prepare_attention(duration: float) -> Callable[[], Any]:
                x = features(duration)
                return _no_grad(reference, lambda: x)

            return "attention", prepare_attention

        model = build_detector(config.model).eval()
        if system == "trunk":

            def prepare_trunk(duration: float) -> Callable[[], Any]:
                x = features(duration)
                return _no_grad(model, lambda: x)

            return f"{variant}_trunk", prepare_trunk

        rng = np.random.default_rng(config.run.seed)

        def prepare_frontend(duration: float) -> Callable[[], Any]:
            n_samples = int(round(duration * config.frontend.sample_rate))
            w = Waveform(
                samples=(0.1 * rng.standard_normal(n_samples)).astype(np.float32),
                sample_rate=config.frontend.sample_rate,
            )
            return _no_grad(
                model, lambda: torch.from_numpy(toy_frontend(w, config.frontend))
            )

        return f"{variant}_frontend", prepare_frontend
