"""Versioned checkpoint container: a zip of .npy tensors plus a JSON header.

Entries are written in sorted order with a fixed zip timestamp so that the
same tensors and metadata always produce byte-identical files (np.savez
stamps entries with wall-clock time, which breaks reproducible artifacts).
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from pathlib import Path

import numpy as np

from .errors import MissingArtifactError, SchemaError

FORMAT_VERSION = 1
_FIXED_DATE = (1980, 1, 1, 0, 0, 0)


def save_checkpoint(
    path: str | Path,
    kind: str,
    arrays: dict[str, np.ndarray],
    meta: dict | None = None,
) -> None:
    """Write tensors and metadata; `kind` tags the checkpoint type (teacher/student/...)."""
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "meta": meta or {},
        "tensors": sorted(arrays),
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        _write_entry(zf, "header.json", json.dumps(header, sort_keys=True).encode("utf-8"))
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]), version=(1, 0))
            _write_entry(zf, f"{name}.npy", buf.getvalue())


def load_checkpoint(path: str | Path, expect_kind: str | None = None):
    """Return (kind, arrays, meta). Raises SchemaError on version/kind mismatch."""
    p = Path(path)
    if not p.exists():
        raise MissingArtifactError(f"checkpoint not found: {p}")
    try:
        with zipfile.ZipFile(p) as zf:
            header = json.loads(zf.read("header.json"))
            if header.get("format_version") != FORMAT_VERSION:
                raise SchemaError(
                    f"{p}: unsupported checkpoint version {header.get('format_version')}"
                )
            arrays = {
                name: np.lib.format.read_array(io.BytesIO(zf.read(f"{name}.npy")))
                for name in header["tensors"]
            }
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{p}: not a valid checkpoint ({exc})") from exc
    kind = header["kind"]
    if expect_kind is not None and kind != expect_kind:
        raise SchemaError(f"{p}: expected a {expect_kind!r} checkpoint, found {kind!r}")
    return kind, arrays, header["meta"]


def _write_entry(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_FIXED_DATE)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
