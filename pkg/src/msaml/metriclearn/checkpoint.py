"""Binary checkpoint: named float64 tensors followed by a key = value config block.

Layout (little-endian):
    b"MSANET1\n"
    u32 tensor count
    per tensor: u16 name length, UTF-8 name, u8 rank, u32 per dim, f64 data (row-major)
    u32 config length, UTF-8 config text
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"MSANET1\n"


class CheckpointError(ValueError):
    pass


def dump_tensors(tensors: dict[str, np.ndarray], config_text: str = "") -> bytes:
    parts = [MAGIC, struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    cfg = config_text.encode("utf-8")
    parts.append(struct.pack("<I", len(cfg)) + cfg)
    return b"".join(parts)


def load_tensors(buf: bytes) -> tuple[dict[str, np.ndarray], str]:
    if not buf.startswith(MAGIC):
        raise CheckpointError("bad checkpoint magic")
    pos = len(MAGIC)

    def take(n):
        nonlocal pos
        if pos + n > len(buf):
            raise CheckpointError(f"truncated checkpoint at byte {pos}")
        out = buf[pos:pos + n]
        pos += n
        return out

    (count,) = struct.unpack("<I", take(4))
    tensors = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = take(nlen).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        n = int(np.prod(dims)) if rank else 1
        tensors[name] = np.frombuffer(take(8 * n), dtype="<f8").reshape(dims).astype(np.float64)
    (clen,) = struct.unpack("<I", take(4))
    text = take(clen).decode("utf-8")
    if pos != len(buf):
        raise CheckpointError(f"{len(buf) - pos} trailing bytes in checkpoint")
    return tensors, text


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


def save_checkpoint(path, net, config_text: str = ""):
    c = net.config
    header = (f"net.in_dim = {c.in_dim}\nnet.hidden = {c.hidden}\nnet.out_dim = {c.out_dim}\n"
              f"net.normalize = {c.normalize}\nnet.linear_only = {c.linear_only}\n")
    with open(path, "wb") as fh:
        fh.write(dump_tensors(net.state(), header + config_text))


def load_checkpoint(path):
    """Returns ``(net, config mapping)``; the net is in eval mode."""
    from .net import EmbeddingNet, NetConfig
    with open(path, "rb") as fh:
        tensors, text = load_tensors(fh.read())
    cfg = parse_config_text(text)
    truthy = ("true", "1", "yes")
    try:
        nc = NetConfig(in_dim=int(cfg["net.in_dim"]), hidden=int(cfg["net.hidden"]),
                       out_dim=int(cfg["net.out_dim"]),
                       normalize=cfg["net.normalize"].lower() in truthy,
                       linear_only=cfg["net.linear_only"].lower() in truthy)
        net = EmbeddingNet(nc)
        net.load_state(tensors)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"incompatible checkpoint: {exc}") from None
    return net.eval(), cfg
