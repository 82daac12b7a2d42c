"""Channel files: JSON with complex entries stored as ``[re, im]`` pairs.

Schema::

    {"dim_in": 2, "dim_out": 2, "repr": "kraus" | "choi",
     "data": [...],                     # list of matrices, or one matrix
     "name": "...",                     # optional
     "split_in": [2, 1], "split_out": [1, 2]}   # optional bipartition

Floats are written with ``repr`` precision, so writing and reading a file
reproduces every entry bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import Channel, ChoiMatrix
from .errors import ShapeMismatch


def _encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _decode_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ShapeMismatch("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def channel_to_dict(channel: Channel, repr_: str | None = None, split_in=None, split_out=None) -> dict:
    if repr_ is None:
        repr_ = "kraus" if channel.kraus is not None else "choi"
    doc = {"dim_in": channel.dim_in, "dim_out": channel.dim_out, "repr": repr_}
    if repr_ == "kraus":
        if channel.kraus is None:
            raise ValueError("channel has no Kraus representation")
        doc["data"] = [_encode_matrix(k) for k in channel.kraus]
    elif repr_ == "choi":
        doc["data"] = _encode_matrix(channel.choi.data)
    else:
        raise ValueError(f"unknown representation {repr_!r}")
    if channel.name:
        doc["name"] = channel.name
    if split_in is not None:
        doc["split_in"] = list(split_in)
    if split_out is not None:
        doc["split_out"] = list(split_out)
    return doc


def channel_from_dict(doc: dict) -> Channel:
    try:
        d_in, d_out, kind, data = int(doc["dim_in"]), int(doc["dim_out"]), doc["repr"], doc["data"]
    except KeyError as exc:
        raise ShapeMismatch(f"channel document lacks field {exc}") from None
    name = doc.get("name", "")
    if kind == "kraus":
        kraus = [_decode_matrix(k) for k in data]
        if any(k.shape != (d_out, d_in) for k in kraus):
            raise ShapeMismatch("Kraus operator shape disagrees with dim_in/dim_out")
        return Channel.from_kraus(kraus, name=name)
    if kind == "choi":
        return Channel(ChoiMatrix(_decode_matrix(data), d_in, d_out), name=name)
    raise ShapeMismatch(f"unknown representation {kind!r}")


def load_channel(path) -> tuple[Channel, dict]:
    """Read a channel file; returns the channel and the raw document."""
    doc = json.loads(Path(path).read_text())
    return channel_from_dict(doc), doc


def save_channel(channel: Channel, path, **kwargs) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(channel, **kwargs)))
