"""Model checkpoint file: magic, structured-text header, raw float64 data.

Layout: 8-byte magic ``VOXDIS01``, an 8-byte little-endian header length,
a UTF-8 JSON header carrying parameter names/shapes/byte offsets and a
config echo, then the concatenated little-endian float64 parameter buffers.
Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from .autodiff import Tensor
from .errors import FormatError
from .model import EncoderConfig, ModelParams

MAGIC = b"VOXDIS01"


def save_checkpoint(path, mp: ModelParams, extra: dict | None = None) -> None:
    names = sorted(mp.params)
    entries = []
    offset = 0
    blobs = []
    for name in names:
        arr = mp.params[name].data
        blob = arr.astype("<f8").tobytes()
        entries.append({"name": name, "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "schema": 1,
        "config": asdict(mp.config),
        "n_classes": mp.n_classes,
        "n_speakers": mp.n_speakers,
        "params": entries,
        "extra": extra or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise FormatError(f"bad checkpoint magic {magic!r} in {path}")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        data = fh.read()
    config = EncoderConfig(**header["config"])
    params = {}
    for entry in header["params"]:
        start = entry["offset"]
        buf = data[start : start + entry["nbytes"]]
        arr = np.frombuffer(buf, dtype="<f8").reshape(entry["shape"]).astype(np.float64)
        params[entry["name"]] = Tensor(arr, requires_grad=True)
    mp = ModelParams(config=config, n_classes=header["n_classes"],
                     n_speakers=header["n_speakers"], params=params)
    return mp, header.get("extra", {})
