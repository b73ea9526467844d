import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Union

__all__ = ["atomic_write", "canonical_json", "canonical_hash", "PathLike"]

PathLike = Union[str, "os.PathLike[str]"]


def atomic_write(path: PathLike, content: Union[bytes, str]) -> Path:
    """Write `content` next to `path` then rename over it, so readers never
    observe a partially written file."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    data = content.encode() if isinstance(content, str) else content
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def canonical_json(obj: Any) -> str:
    """
    >>> canonical_json({"b": 1, "a": [1.5, None]})
    '{"a":[1.5,null],"b":1}'
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def canonical_hash(obj: Any) -> str:
    """SHA-256 hex digest of the canonical JSON form of `obj`"""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()
