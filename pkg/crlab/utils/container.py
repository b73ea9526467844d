"""
Binary container shared by datasets and checkpoints.

Layout, all little-endian:

- 4 bytes magic ``CRL1``
- ``u32`` format version
- ``u32`` header length
- UTF-8 JSON header, with the ordered list of arrays (``name``, ``shape``),
  the SHA-256 of the payload and free-form metadata
- raw ``float64`` payload, arrays concatenated in header order

>>> import numpy as np, tempfile, os
>>> path = os.path.join(tempfile.mkdtemp(), "demo.crl")
>>> write_container(path, {"w": np.eye(2)}, {"step": 3})
>>> c = read_container(path)
>>> c.meta["step"], c.arrays["w"].tolist()
(3, [[1.0, 0.0], [0.0, 1.0]])
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np

from .files import PathLike, atomic_write

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "Container",
    "ContainerError",
    "FormatError",
    "VersionError",
    "CorruptFileError",
    "write_container",
    "read_container",
    "is_container",
]

MAGIC = b"CRL1"
FORMAT_VERSION = 1

_PREFIX = struct.Struct("<4sII")
_DTYPE = np.dtype("<f8")


class ContainerError(OSError):
    pass


class FormatError(ContainerError):
    """The file is not a container (foreign magic bytes)"""


class VersionError(ContainerError):
    """The container was written with another format version"""


class CorruptFileError(ContainerError):
    """Truncated file, malformed header, or payload hash mismatch"""


@dataclass
class Container:
    arrays: Dict[str, np.ndarray] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)


def write_container(
    path: PathLike, arrays: Mapping[str, np.ndarray], meta: Mapping[str, Any]
) -> None:
    blobs = []
    entries = []
    for name, array in arrays.items():
        a = np.ascontiguousarray(array, dtype=_DTYPE)
        entries.append({"name": name, "shape": list(a.shape)})
        blobs.append(a.tobytes())
    payload = b"".join(blobs)
    header = {
        "arrays": entries,
        "sha256": hashlib.sha256(payload).hexdigest(),
        "meta": dict(meta),
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    prefix = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(hbytes))
    atomic_write(path, prefix + hbytes + payload)


def is_container(path: PathLike) -> bool:
    try:
        with open(path, "rb") as f:
            return f.read(len(MAGIC)) == MAGIC
    except OSError:
        return False


def read_container(path: PathLike) -> Container:
    """
    :raises FormatError: Foreign magic bytes
    :raises VersionError: Unsupported format version
    :raises CorruptFileError: Truncation or hash mismatch
    """
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC[: len(data)] or not data:
        raise FormatError(f"{path} is not a crlab container")
    if len(data) < _PREFIX.size:
        raise CorruptFileError(f"{path} is truncated")

    _, version, hlen = _PREFIX.unpack_from(data)
    if version != FORMAT_VERSION:
        raise VersionError(
            f"{path} has format version {version}, expected {FORMAT_VERSION}"
        )

    start = _PREFIX.size
    if len(data) < start + hlen:
        raise CorruptFileError(f"{path} is truncated")
    try:
        header = json.loads(data[start : start + hlen].decode())
        entries = [(e["name"], tuple(e["shape"])) for e in header["arrays"]]
    except (ValueError, KeyError, TypeError) as err:
        raise CorruptFileError(f"{path} has a malformed header") from err

    payload = data[start + hlen :]
    expected = sum(int(np.prod(shape)) for _, shape in entries) * _DTYPE.itemsize
    if len(payload) != expected:
        raise CorruptFileError(
            f"{path} payload has {len(payload)} bytes, expected {expected}"
        )
    if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise CorruptFileError(f"{path} payload hash mismatch")

    arrays = {}
    offset = 0
    for name, shape in entries:
        count = int(np.prod(shape))
        arrays[name] = (
            np.frombuffer(payload, _DTYPE, count, offset)
            .reshape(shape)
            .astype(np.float64)
        )
        offset += count * _DTYPE.itemsize
    return Container(arrays, header.get("meta", {}))
