"""Binary checkpoint format "QMC1".

Layout, all integers little-endian::

    b"QMC1"                       magic
    u32   version                 currently 1
    u32   header_len
    bytes header                  UTF-8 JSON (sorted keys): model kind, dims,
                                  layer list, free-form metadata
    u32   n_arrays
    repeated n_arrays times:
        u16   name_len
        bytes name                UTF-8
        u8    ndim
        u64   shape[ndim]
        f64   data[prod(shape)]   little-endian IEEE-754, C order

Arrays are written in the order given, so equal inputs give equal bytes.
"""

import json
import struct
from collections import OrderedDict

import numpy as np

from ..errors import CheckpointError

MAGIC = b"QMC1"
VERSION = 1


def dumps(header, arrays):
    parts = [MAGIC, struct.pack("<I", VERSION)]
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts += [struct.pack("<I", len(blob)), blob, struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw + struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    return b"".join(parts)


def loads(data):
    view = memoryview(data)
    if bytes(view[:4]) != MAGIC:
        raise CheckpointError("not a QMC1 checkpoint (bad magic)")
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(view):
            raise CheckpointError("truncated checkpoint")
        out = struct.unpack_from(fmt, view, pos)
        pos += size
        return out

    (version,) = take("<I")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (hlen,) = take("<I")
    header = json.loads(bytes(view[pos:pos + hlen]).decode("utf-8"))
    pos += hlen
    (count,) = take("<I")
    arrays = OrderedDict()
    for _ in range(count):
        (nlen,) = take("<H")
        name = bytes(view[pos:pos + nlen]).decode("utf-8")
        pos += nlen
        (ndim,) = take("<B")
        shape = take(f"<{ndim}Q") if ndim else ()
        n = int(np.prod(shape)) if ndim else 1
        if pos + 8 * n > len(view):
            raise CheckpointError(f"truncated array {name!r}")
        arrays[name] = np.frombuffer(view, dtype="<f8", count=n, offset=pos).astype(float).reshape(shape)
        pos += 8 * n
    if pos != len(view):
        raise CheckpointError("trailing bytes after last array")
    return header, arrays


def save(path, header, arrays):
    with open(path, "wb") as fh:
        fh.write(dumps(header, arrays))


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
