"""Model checkpoint framing shared by the detector, resolver and rewriter.

Layout::

    b"DREF" | uint32 LE header length | UTF-8 JSON header | float32 LE parameters

The header lists parameter names and shapes in block order, along with the
model kind, its config, the vocabulary tokens and the vocabulary hash.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import torch

MAGIC = b"DREF"


class CheckpointError(RuntimeError):
    pass


def save(path: str | Path, header: Mapping[str, Any], state: Mapping[str, torch.Tensor]) -> None:
    params = []
    blocks = []
    for name, tensor in state.items():
        arr = tensor.detach().cpu().numpy().astype("<f4", copy=False)
        params.append({"name": name, "shape": list(arr.shape)})
        blocks.append(arr.ravel())
    head = dict(header)
    head["params"] = params
    raw = json.dumps(head, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        for b in blocks:
            fh.write(b.tobytes())


def load(path: str | Path) -> tuple[dict[str, Any], dict[str, torch.Tensor]]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path} is not a model checkpoint")
    (n,) = struct.unpack("<I", data[4:8])
    header = json.loads(data[8 : 8 + n].decode("utf-8"))
    flat = np.frombuffer(data, dtype="<f4", offset=8 + n)
    state: dict[str, torch.Tensor] = {}
    pos = 0
    for p in header["params"]:
        size = int(np.prod(p["shape"])) if p["shape"] else 1
        if pos + size > flat.size:
            raise CheckpointError(f"{path} is truncated")
        state[p["name"]] = torch.from_numpy(flat[pos : pos + size].reshape(p["shape"]).copy())
        pos += size
    if pos != flat.size:
        raise CheckpointError(f"{path} has {flat.size - pos} trailing values")
    return header, state


def read_header(path: str | Path) -> dict[str, Any]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise CheckpointError(f"{path} is not a model checkpoint")
        (n,) = struct.unpack("<I", fh.read(4))
        return json.loads(fh.read(n).decode("utf-8"))
