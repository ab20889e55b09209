"""Deterministic binary checkpoint for a trained encoder.

Layout (all integers little-endian):

* bytes 0..7    magic ``b"GBENCCKP"``
* bytes 8..15   header length ``L`` as uint64
* bytes 16..16+L  UTF-8 JSON header with sorted keys:
  ``{"format": "graphboot-encoder", "version": 1, "activation": ...,
  "in_dim": ..., "out_dim": ..., "arrays": [{"name": ..., "shape": [...]},
  ...], "meta": {...}}``
* remainder     the arrays named in the header, concatenated in order,
  float64, C order, little-endian

The writer emits no timestamps, so identical encoders always serialize to
identical bytes.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import CheckpointError
from .nn import GcnEncoder, LinearLayer

MAGIC = b"GBENCCKP"
FORMAT_TAG = "graphboot-encoder"
VERSION = 1


def save_encoder(path: str, encoder: GcnEncoder, meta: dict | None = None) -> None:
    arrays = [("weight", encoder.layer.weight), ("bias", encoder.layer.bias)]
    if encoder.slope is not None:
        arrays.append(("slope", encoder.slope))
    header = {
        "format": FORMAT_TAG,
        "version": VERSION,
        "activation": encoder.activation,
        "in_dim": encoder.in_dim,
        "out_dim": encoder.out_dim,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(blob).to_bytes(8, "little"))
        f.write(blob)
        for _, a in arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_encoder(path: str) -> tuple[GcnEncoder, dict]:
    """Read a checkpoint back into an encoder; returns (encoder, meta)."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path!r}: {e}") from e
    if len(raw) < 16 or raw[:8] != MAGIC:
        raise CheckpointError(f"{path!r} is not a graphboot checkpoint (bad magic)")
    header_len = int.from_bytes(raw[8:16], "little")
    if len(raw) < 16 + header_len:
        raise CheckpointError(f"{path!r} is truncated")
    try:
        header = json.loads(raw[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path!r} has a corrupt header: {e}") from e
    if header.get("format") != FORMAT_TAG:
        raise CheckpointError(f"{path!r} has format tag {header.get('format')!r}, expected {FORMAT_TAG!r}")
    if header.get("version") != VERSION:
        raise CheckpointError(
            f"{path!r} has version {header.get('version')!r}, this reader supports {VERSION}"
        )
    offset = 16 + header_len
    arrays = {}
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path!r} is truncated inside array {spec['name']!r}")
        arrays[spec["name"]] = np.frombuffer(raw[offset : offset + nbytes], dtype="<f8").reshape(shape).copy()
        offset += nbytes
    if "weight" not in arrays or "bias" not in arrays:
        raise CheckpointError(f"{path!r} is missing parameter arrays")
    layer = LinearLayer(arrays["weight"], arrays["bias"])
    encoder = GcnEncoder(layer, activation=header["activation"], slope=arrays.get("slope"))
    return encoder, header.get("meta", {})
