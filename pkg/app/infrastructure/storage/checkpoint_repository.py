"""
Binary checkpoint format, all integers little-endian:

    magic       8 bytes  b"DUABIMB\\0"
    version     uint16
    header_len  uint32, then header_len bytes of compact sorted-key JSON
                (CheckpointHeader)
    n_tensors   uint32, then per tensor in state-dict order:
        name_len uint16, name (utf-8)
        dtype    uint8 (see DTYPE_CODES)
        ndim     uint8, then ndim x uint32 dims
        data     row-major little-endian values
    crc32       uint32 over every preceding byte
"""

import json
import struct
import zlib
from typing import Dict, Tuple

import numpy as np
import torch
from pydantic import ValidationError

from app.domain.training.entity import CheckpointHeader
from app.domain.training.repository import CheckpointRepository
from app.shared.errors import CheckpointVersionError, CorruptCheckpointError, DataError
from app.shared.monitoring.logging import LoggerMixin, log_io_operation
from app.shared.monitoring.metrics import MetricsContext

MAGIC = b"DUABIMB\0"
FORMAT_VERSION = 1

DTYPE_CODES = {
    torch.float32: (0, "<f4"),
    torch.float64: (1, "<f8"),
    torch.int64: (2, "<i8"),
    torch.int32: (3, "<i4"),
    torch.float16: (4, "<f2"),
    torch.bool: (5, "|b1"),
}
CODE_DTYPES = {code: (dtype, np_dtype) for dtype, (code, np_dtype) in DTYPE_CODES.items()}


def encode_checkpoint(header: CheckpointHeader, state: Dict[str, torch.Tensor]) -> bytes:
    header_json = json.dumps(
        header.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<HI", FORMAT_VERSION, len(header_json)),
        header_json,
        struct.pack("<I", len(state)),
    ]
    for name, tensor in state.items():
        if tensor.dtype not in DTYPE_CODES:
            raise DataError(f"unsupported tensor dtype {tensor.dtype} for {name}")
        code, np_dtype = DTYPE_CODES[tensor.dtype]
        encoded_name = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded_name)) + encoded_name)
        parts.append(struct.pack("<BB", code, tensor.dim()))
        parts.append(struct.pack(f"<{tensor.dim()}I", *tensor.shape))
        data = tensor.detach().cpu().contiguous().numpy().astype(np_dtype, copy=False)
        parts.append(data.tobytes(order="C"))
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise CorruptCheckpointError("corrupt checkpoint: truncated")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(data: bytes) -> Tuple[CheckpointHeader, Dict[str, torch.Tensor]]:
    """
    Raises:
        CorruptCheckpointError: bad magic, truncation, checksum or payload
        CheckpointVersionError: written by another format version
    """
    if len(data) < len(MAGIC) + 4 or data[: len(MAGIC)] != MAGIC:
        raise CorruptCheckpointError("corrupt checkpoint: bad magic")
    (expected_crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) != expected_crc:
        raise CorruptCheckpointError("corrupt checkpoint: checksum mismatch")
    reader = _Reader(data[:-4])
    reader.take(len(MAGIC))
    version, header_len = reader.unpack("<HI")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint format version {version}, expected {FORMAT_VERSION}"
        )

    try:
        header = CheckpointHeader.model_validate_json(reader.take(header_len))
    except ValidationError as e:
        raise CorruptCheckpointError(f"corrupt checkpoint header: {e.error_count()} errors")

    (n_tensors,) = reader.unpack("<I")
    state = {}
    for _ in range(n_tensors):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        code, ndim = reader.unpack("<BB")
        if code not in CODE_DTYPES:
            raise CorruptCheckpointError(f"corrupt checkpoint: dtype code {code}")
        dtype, np_dtype = CODE_DTYPES[code]
        shape = reader.unpack(f"<{ndim}I")
        count = int(np.prod(shape, dtype=np.int64))
        raw = reader.take(count * np.dtype(np_dtype).itemsize)
        array = np.frombuffer(raw, dtype=np_dtype).reshape(shape).copy()
        state[name] = torch.from_numpy(array).to(dtype)
    if reader.offset != len(reader.data):
        raise CorruptCheckpointError("corrupt checkpoint: trailing bytes")
    return header, state


class BinaryCheckpointRepository(CheckpointRepository, LoggerMixin):
    def save(
        self, path: str, header: CheckpointHeader, state: Dict[str, torch.Tensor]
    ) -> None:
        payload = encode_checkpoint(header, state)
        with MetricsContext("checkpoint_save", "io"):
            try:
                with open(path, "wb") as f:
                    f.write(payload)
            except OSError as e:
                raise DataError(f"cannot write checkpoint {path}: {e.strerror}")
        self.logger.info(
            "Checkpoint saved",
            extra=log_io_operation("checkpoint_save", path, bytes=len(payload)),
        )

    def load(self, path: str) -> Tuple[CheckpointHeader, Dict[str, torch.Tensor]]:
        with MetricsContext("checkpoint_load", "io"):
            try:
                with open(path, "rb") as f:
                    data = f.read()
            except OSError as e:
                raise DataError(f"cannot read checkpoint {path}: {e.strerror}")
            header, state = decode_checkpoint(data)
        self.logger.info(
            "Checkpoint loaded",
            extra=log_io_operation("checkpoint_load", path, tensors=len(state)),
        )
        return header, state
