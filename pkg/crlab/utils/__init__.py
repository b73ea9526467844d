from .container import (
    Container,
    ContainerError,
    CorruptFileError,
    FormatError,
    VersionError,
    read_container,
    write_container,
)
from .files import atomic_write, canonical_hash, canonical_json

__all__ = [
    "Container",
    "ContainerError",
    "FormatError",
    "VersionError",
    "CorruptFileError",
    "read_container",
    "write_container",
    "atomic_write",
    "canonical_hash",
    "canonical_json",
]
