import os
from typing import Dict, List, Sequence

import pandas as pd

from app.domain.bench.entity import RtfRecord
from app.domain.training.entity import EpochRecord
from app.shared.errors import DataError, EmptyInputError
from app.shared.monitoring.logging import get_logger, log_io_operation
from app.shared.monitoring.metrics import MetricsContext

logger = get_logger(__name__)

RTF_COLUMNS = ["system", "duration_s", "rtf", "std"]
COMPARISON_COLUMNS = ["variant", "params", "dev_eer", "min_tdcf"]

SVG_WIDTH, SVG_HEIGHT = 640, 400
SVG_MARGIN = 60
SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd")


def _write_text(path: str, text: str, operation: str) -> None:
    with MetricsContext(operation, "io"):
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        except OSError as e:
            raise DataError(f"cannot write {path}: {e.strerror}")
    logger.debug("Report written", extra=log_io_operation(operation, path))


def format_epoch_line(record: EpochRecord) -> str:
    return f"epoch={record.epoch} loss={record.loss:.6f} dev_eer={record.dev_eer:.6f}"


class TrainingLog:
    """Append-only ``epoch=<n> loss=<f> dev_eer=<f>`` lines"""

    def __init__(self, path: str, truncate: bool = True):
        self.path = path
        if truncate:
            try:
                open(path, "w", encoding="utf-8").close()
            except OSError as e:
                raise DataError(f"cannot create {path}: {e.strerror}")

    def append(self, record: EpochRecord) -> None:
        try:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(format_epoch_line(record) + "\n")
        except OSError as e:
            raise DataError(f"cannot append to {self.path}: {e.strerror}")


def rtf_table(records: Sequence[RtfRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [[r.system, r.duration_s, r.rtf, r.std] for r in records], columns=RTF_COLUMNS
    )


def write_rtf_csv(records: Sequence[RtfRecord], path: str) -> None:
    """``system,duration_s,rtf,std``; an empty record list gives a header-only file"""
    _write_text(path, rtf_table(records).to_csv(index=False, lineterminator="\n"), "rtf_csv")


def rtf_svg(records: Sequence[RtfRecord]) -> str:
    """Line chart of rtf against duration, one polyline per system"""
    if not records:
        raise EmptyInputError("no RTF records to plot")

    systems: Dict[str, List[RtfRecord]] = {}
    for r in records:
        systems.setdefault(r.system, []).append(r)
    x_min = min(r.duration_s for r in records)
    x_max = max(r.duration_s for r in records)
    y_max = max(r.rtf for r in records)
    x_span = (x_max - x_min) or 1.0
    plot_w = SVG_WIDTH - 2 * SVG_MARGIN
    plot_h = SVG_HEIGHT - 2 * SVG_MARGIN

    def x_of(d: float) -> float:
        return SVG_MARGIN + (d - x_min) / x_span * plot_w

    def y_of(v: float) -> float:
        return SVG_HEIGHT - SVG_MARGIN - v / y_max * plot_h

    bottom = SVG_HEIGHT - SVG_MARGIN
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}">',
        f'<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{SVG_MARGIN}" y1="{bottom}" x2="{SVG_WIDTH - SVG_MARGIN}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{SVG_MARGIN}" y1="{SVG_MARGIN}" x2="{SVG_MARGIN}" y2="{bottom}" stroke="black"/>',
        f'<text x="{SVG_WIDTH / 2:.1f}" y="{SVG_HEIGHT - 15}" text-anchor="middle">duration (s)</text>',
        f'<text x="15" y="{SVG_HEIGHT / 2:.1f}" transform="rotate(-90 15 {SVG_HEIGHT / 2:.1f})" text-anchor="middle">RTF</text>',
        f'<text x="{SVG_MARGIN - 5}" y="{SVG_MARGIN + 4}" text-anchor="end" font-size="10">{y_max:.3g}</text>',
        f'<text x="{SVG_MARGIN}" y="{bottom + 15}" text-anchor="middle" font-size="10">{x_min:g}</text>',
        f'<text x="{SVG_WIDTH - SVG_MARGIN}" y="{bottom + 15}" text-anchor="middle" font-size="10">{x_max:g}</text>',
    ]
    for i, (system, points) in enumerate(systems.items()):
        color = SVG_COLORS[i % len(SVG_COLORS)]
        points = sorted(points, key=lambda r: r.duration_s)
        coords = " ".join(f"{x_of(r.duration_s):.2f},{y_of(r.rtf):.2f}" for r in points)
        lines.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>'
        )
        lines.append(
            f'<text x="{SVG_WIDTH - SVG_MARGIN + 5}" y="{SVG_MARGIN + 15 * i}" '
            f'fill="{color}" font-size="11">{system}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_rtf_svg(records: Sequence[RtfRecord], path: str) -> None:
    _write_text(path, rtf_svg(records), "rtf_svg")


def write_comparison_csv(rows: Sequence[Dict[str, object]], path: str) -> None:
    """``variant,params,dev_eer,min_tdcf``; min_tdcf is empty without a cost model"""
    frame = pd.DataFrame(list(rows), columns=COMPARISON_COLUMNS)
    _write_text(path, frame.to_csv(index=False, lineterminator="\n"), "comparison_csv")
