"""LOBD file reader."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ._crc32c import crc32c
from .errors import BadMagic, ChecksumMismatch, TruncatedPayload, VersionUnsupported

MAGIC = b"LOBD"
SUPPORTED_VERSION = 1
SPLITS = ("train", "val", "test")


@dataclass
class ClientDataset:
    """Decoded dataset: observation tensor, labels, metadata map.

    ``tensor`` is the float32 (n, h, 4L) array exactly as stored;
    ``labels`` holds one byte per observation (0=up, 1=stationary,
    2=down). Split boundaries come from metadata["split_counts"].
    """

    tensor: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    def split(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """(windows, labels) of one split by name."""
        counts = self.meta["split_counts"]
        start = 0
        for s in SPLITS:
            if s == name:
                return self.tensor[start : start + counts[s]], self.labels[start : start + counts[s]]
            start += counts[s]
        raise KeyError(name)

    def __len__(self) -> int:
        return len(self.tensor)


def load_dataset(path) -> ClientDataset:
    """Decode and checksum-verify a LOBD file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 10:
        raise TruncatedPayload(f"file is {len(data)} bytes")
    if data[:4] != MAGIC:
        raise BadMagic(f"magic {data[:4]!r} != {MAGIC!r}")
    version = struct.unpack_from("<H", data, 4)[0]
    if version > SUPPORTED_VERSION:
        raise VersionUnsupported(f"file version {version} > supported {SUPPORTED_VERSION}")
    m_len = struct.unpack_from("<I", data, 6)[0]
    meta_end = 10 + m_len
    if len(data) < meta_end:
        raise TruncatedPayload("metadata block truncated")
    meta = json.loads(data[10:meta_end].decode())

    n, h, width = meta["tensor_shape"]
    tensor_bytes = n * h * width * 4
    body_end = meta_end + tensor_bytes + n
    if len(data) < body_end + 4:
        raise TruncatedPayload(
            f"need {body_end + 4} bytes for declared payload, file has {len(data)}"
        )
    stored = struct.unpack_from("<I", data, body_end)[0]
    if crc32c(data[:body_end]) != stored:
        raise ChecksumMismatch("payload checksum does not match")

    tensor = (
        np.frombuffer(data, dtype="<f4", count=n * h * width, offset=meta_end)
        .reshape(n, h, width)
        .copy()
    )
    labels = np.frombuffer(data, dtype=np.uint8, count=n, offset=meta_end + tensor_bytes).copy()
    return ClientDataset(tensor=tensor, labels=labels, meta=meta)
