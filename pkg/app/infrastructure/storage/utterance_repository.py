import os
from typing import Dict, List, Optional, Union

import numpy as np
import torch
from scipy.io import wavfile

from app.domain.audio.entity import (
    SAMPLE_RATE,
    Label,
    LabeledWaveform,
    ManifestEntry,
    Waveform,
)
from app.domain.audio.repository import UtteranceRepository
from app.shared.errors import DataError, DuplicateIdError, MalformedLineError
from app.shared.monitoring.logging import LoggerMixin, log_io_operation
from app.shared.monitoring.metrics import MetricsContext

WAVEFORM_SUFFIXES = (".wav", ".f32")
FEATURE_SUFFIXES = (".npy", ".txt", ".feat")


def parse_label(token: str) -> Optional[Label]:
    try:
        return Label(token)
    except ValueError:
        return None


def read_wav(path: str) -> Waveform:
    """16-bit PCM (scaled to [-1, 1)) or float WAV, mono"""
    sample_rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise DataError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif np.issubdtype(data.dtype, np.floating):
        samples = data.astype(np.float32)
    else:
        raise DataError(f"{path}: unsupported sample format {data.dtype}")
    return Waveform(samples=samples, sample_rate=int(sample_rate))


def write_wav(path: str, waveform: Waveform) -> None:
    pcm = np.clip(np.round(waveform.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(path, waveform.sample_rate, pcm)


class FileUtteranceRepository(UtteranceRepository, LoggerMixin):
    """
    Manifest lines ``<utt_id> <relative_path> [<label>]`` with paths relative
    to the manifest's directory. Files load by suffix:
        .wav  16-bit PCM or float WAV
        .f32  raw little-endian float32 samples
        .npy  1-D waveform or 2-D [T, d_feat] features
        .txt  whitespace-separated [T, d_feat] feature rows
        .feat raw little-endian float32 [T, d_feat], row-major
    """

    def __init__(self, d_feat: int = 1024, sample_rate: int = SAMPLE_RATE):
        self.d_feat = d_feat
        self.sample_rate = sample_rate

    def read_manifest(self, path: str) -> List[ManifestEntry]:
        base = os.path.dirname(os.path.abspath(path))
        entries: List[ManifestEntry] = []
        seen: Dict[str, int] = {}
        with MetricsContext("manifest_read", "io"):
            try:
                with open(path, "r", encoding="utf-8") as f:
                    lines = f.readlines()
            except OSError as e:
                raise DataError(f"cannot read manifest {path}: {e.strerror}")

            for number, line in enumerate(lines, start=1):
                tokens = line.split()
                if not tokens or tokens[0].startswith("#"):
                    continue
                label = parse_label(tokens[2]) if len(tokens) == 3 else None
                if len(tokens) not in (2, 3) or (len(tokens) == 3 and label is None):
                    raise MalformedLineError(path, number, line)
                if tokens[0] in seen:
                    raise DuplicateIdError(path, tokens[0])
                seen[tokens[0]] = number
                entries.append(
                    ManifestEntry(
                        utt_id=tokens[0],
                        path=os.path.join(base, tokens[1]),
                        label=label,
                    )
                )
        self.logger.info(
            f"Read {len(entries)} manifest entries",
            extra=log_io_operation("manifest_read", path, entries=len(entries)),
        )
        return entries

    def load(
        self, entry: ManifestEntry, d_feat: Optional[int] = None
    ) -> Union[Waveform, torch.Tensor]:
        d_feat = d_feat or self.d_feat
        suffix = os.path.splitext(entry.path)[1].lower()
        if not os.path.isfile(entry.path):
            raise DataError(f"{entry.utt_id}: missing file {entry.path}")
        with MetricsContext("utterance_read", "io"):
            try:
                if suffix == ".wav":
                    return read_wav(entry.path)
                if suffix == ".f32":
                    samples = np.fromfile(entry.path, dtype="<f4")
                    return Waveform(samples=samples, sample_rate=self.sample_rate)
                if suffix == ".npy":
                    return self._from_array(entry, np.load(entry.path), d_feat)
                if suffix == ".txt":
                    return self._from_array(entry, np.loadtxt(entry.path, ndmin=2), d_feat)
                if suffix == ".feat":
                    flat = np.fromfile(entry.path, dtype="<f4")
                    if flat.size % d_feat:
                        raise DataError(
                            f"{entry.utt_id}: {flat.size} values is not a multiple "
                            f"of d_feat={d_feat}"
                        )
                    return self._from_array(entry, flat.reshape(-1, d_feat), d_feat)
            except (OSError, ValueError) as e:
                raise DataError(f"{entry.utt_id}: cannot read {entry.path}: {e}")
        raise DataError(f"{entry.utt_id}: unsupported file type {suffix!r}")

    def _from_array(
        self, entry: ManifestEntry, array: np.ndarray, d_feat: int
    ) -> Union[Waveform, torch.Tensor]:
        if array.ndim == 1:
            return Waveform(samples=array.astype(np.float32), sample_rate=self.sample_rate)
        if array.ndim != 2 or array.shape[1] != d_feat:
            raise DataError(
                f"{entry.utt_id}: expected [T, {d_feat}] features, got {array.shape}"
            )
        return torch.from_numpy(np.ascontiguousarray(array, dtype=np.float32))

    def write_dataset(
        self, out_dir: str, name: str, items: List[LabeledWaveform]
    ) -> str:
        wav_dir = os.path.join(out_dir, "wav")
        os.makedirs(wav_dir, exist_ok=True)
        manifest = os.path.join(out_dir, f"{name}.lst")
        with MetricsContext("dataset_write", "io"):
            try:
                with open(manifest, "w", encoding="utf-8") as f:
                    for item in items:
                        relative = os.path.join("wav", f"{item.utt_id}.wav")
                        write_wav(os.path.join(out_dir, relative), item.waveform)
                        f.write(f"{item.utt_id} {relative} {item.label.value}\n")
            except OSError as e:
                raise DataError(f"cannot write dataset to {out_dir}: {e.strerror}")
        self.logger.info(
            f"Wrote {len(items)} utterances",
            extra=log_io_operation("dataset_write", manifest, utterances=len(items)),
        )
        return manifest


def labeled_waveforms(
    repository: UtteranceRepository, entries: List[ManifestEntry]
) -> List[LabeledWaveform]:
    """Load every entry as a labeled waveform (training and dev sets)"""
    items = []
    for entry in entries:
        if entry.label is None:
            raise DataError(f"{entry.utt_id}: training data needs a label")
        waveform = repository.load(entry)
        if not isinstance(waveform, Waveform):
            raise DataError(f"{entry.utt_id}: expected a waveform, found features")
        items.append(LabeledWaveform(utt_id=entry.utt_id, waveform=waveform, label=entry.label))
    return items
