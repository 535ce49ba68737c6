import math
from typing import Dict, Iterator, List, Tuple

from app.domain.audio.entity import Label
from app.domain.scoring.entity import ScoreLine
from app.domain.scoring.repository import ScoreRepository
from app.infrastructure.storage.utterance_repository import parse_label
from app.shared.errors import DataError, DuplicateIdError, MalformedLineError
from app.shared.monitoring.logging import LoggerMixin, log_io_operation
from app.shared.monitoring.metrics import MetricsContext


def _read_lines(path: str, operation: str) -> List[str]:
    with MetricsContext(operation, "io"):
        try:
            with open(path, "r", encoding="utf-8") as f:
                return f.readlines()
        except OSError as e:
            raise DataError(f"cannot read {path}: {e.strerror}")


def _records(path: str, lines: List[str]) -> Iterator[Tuple[int, str, List[str]]]:
    # blank lines and '#' comments are skipped
    for number, line in enumerate(lines, start=1):
        tokens = line.split()
        if tokens and not tokens[0].startswith("#"):
            yield number, line, tokens


class FileScoreRepository(ScoreRepository, LoggerMixin):
    """Score files ``<utt_id> <score>`` and protocol files ``<utt_id> <label>``"""

    def read_scores(self, path: str) -> List[Tuple[str, float]]:
        scores: List[Tuple[str, float]] = []
        seen = set()
        for number, line, tokens in _records(path, _read_lines(path, "scores_read")):
            if len(tokens) != 2:
                raise MalformedLineError(path, number, line)
            try:
                score = float(tokens[1])
            except ValueError:
                raise MalformedLineError(path, number, line)
            if not math.isfinite(score):
                raise MalformedLineError(path, number, line)
            if tokens[0] in seen:
                raise DuplicateIdError(path, tokens[0])
            seen.add(tokens[0])
            scores.append((tokens[0], score))
        self.logger.info(
            f"Read {len(scores)} scores",
            extra=log_io_operation("scores_read", path, trials=len(scores)),
        )
        return scores

    def read_protocol(self, path: str) -> Dict[str, Label]:
        protocol: Dict[str, Label] = {}
        for number, line, tokens in _records(path, _read_lines(path, "protocol_read")):
            label = parse_label(tokens[1]) if len(tokens) == 2 else None
            if label is None:
                raise MalformedLineError(path, number, line)
            if tokens[0] in protocol:
                raise DuplicateIdError(path, tokens[0])
            protocol[tokens[0]] = label
        return protocol

    def write_scores(self, path: str, lines: List[ScoreLine]) -> None:
        """
        One ``<utt_id> <score>`` line per utterance in the given order. A
        failed utterance becomes ``# error <utt_id> <reason>`` and the file
        then ends with ``# partial: <failed>/<total>``.
        """
        failed = 0
        out = []
        for line in lines:
            if line.error is not None:
                failed += 1
                reason = " ".join(line.error.split())
                out.append(f"# error {line.utt_id} {reason}\n")
            else:
                out.append(f"{line.utt_id} {float(line.score)!r}\n")
        if failed:
            out.append(f"# partial: {failed}/{len(lines)}\n")

        with MetricsContext("scores_write", "io"):
            try:
                with open(path, "w", encoding="utf-8") as f:
                    f.writelines(out)
            except OSError as e:
                raise DataError(f"cannot write scores {path}: {e.strerror}")
        self.logger.info(
            f"Wrote {len(lines) - failed} scores",
            extra=log_io_operation("scores_write", path, failed=failed),
        )

    def write_protocol(self, path: str, labels: List[Tuple[str, Label]]) -> None:
        with MetricsContext("protocol_write", "io"):
            try:
                with open(path, "w", encoding="utf-8") as f:
                    f.writelines(f"{utt_id} {label.value}\n" for utt_id, label in labels)
            except OSError as e:
                raise DataError(f"cannot write protocol {path}: {e.strerror}")
