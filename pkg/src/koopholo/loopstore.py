"""
Compact on-disk cache for refined ray loops (msgpack + zstd behind a header).
"""

import mmap
import os
import struct
from pathlib import Path
from typing import Optional, Union

import msgpack
import numpy as np
import zstandard as zstd

from .holonomy import RayLoop
from .models import Tolerances

_CACHE_VERSION = 1
_MAGIC_HEADER = b"KHLOOP"
_COMPRESS_LEVEL = 3  # Balanced speed/ratio


def persist_loop(loop: RayLoop, path: Union[str, Path], meta: Optional[dict] = None) -> None:
    """Save a loop's representatives as a dense complex table."""
    modes, matrix = loop.to_dense()
    state = {
        "modes": [list(m) for m in modes],
        "dim": loop.dim,
        "rows": len(loop),
        "re": matrix.real.astype("<f8").tobytes(),
        "im": matrix.imag.astype("<f8").tobytes(),
        "meta": meta or {},
        "version": _CACHE_VERSION,
    }

    cctx = zstd.ZstdCompressor(level=_COMPRESS_LEVEL)
    packed = msgpack.packb(state, use_bin_type=True)
    compressed = cctx.compress(packed)

    with open(path, "wb") as f:
        f.write(_MAGIC_HEADER)
        f.write(struct.pack("!I", _CACHE_VERSION))
        f.write(struct.pack("!Q", len(compressed)))
        f.write(compressed)


def read_loop_state(path: Union[str, Path]) -> dict:
    header = len(_MAGIC_HEADER)
    with open(path, "rb") as f:
        if os.fstat(f.fileno()).st_size < header + 12:
            raise ValueError(f"{path} is truncated: no complete loop file header")
        with mmap.mmap(f.fileno(), 0, access=mmap.ACCESS_READ) as mm:
            if mm[:header] != _MAGIC_HEADER:
                raise ValueError(f"{path} is not a koopholo loop file")

            version = struct.unpack("!I", mm[header:header + 4])[0]
            if version != _CACHE_VERSION:
                raise ValueError(f"loop file version {version} is not supported (expected {_CACHE_VERSION})")

            data_size = struct.unpack("!Q", mm[header + 4:header + 12])[0]
            if len(mm) - header - 12 < data_size:
                raise ValueError(f"{path} is truncated: header announces {data_size} bytes of data")
            compressed = mm[header + 12:header + 12 + data_size]

    try:
        state = msgpack.unpackb(zstd.ZstdDecompressor().decompress(compressed), raw=False)
    except (zstd.ZstdError, msgpack.exceptions.UnpackException, ValueError, TypeError) as e:
        raise ValueError(f"{path} is corrupt: {e}") from e
    if not isinstance(state, dict):
        raise ValueError(f"{path} is corrupt: expected a mapping, got {type(state).__name__}")
    return state


def load_loop(path: Union[str, Path], tolerances: Optional[Tolerances] = None) -> RayLoop:
    state = read_loop_state(path)
    try:
        modes = [tuple(m) for m in state["modes"]]
        shape = (state["rows"], len(modes))
        real = np.frombuffer(state["re"], dtype="<f8").reshape(shape)
        imag = np.frombuffer(state["im"], dtype="<f8").reshape(shape)
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"{path} is corrupt: {e!r}") from e
    return RayLoop.from_dense(modes, real + 1j * imag, tolerances)
