"""Run artifacts and their atomic persistence."""
from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy
import scipy

from .. import __version__

SUCCESS = "success"
VALIDATION_FAILURE = "validation-failure"
NUMERIC_ERROR = "numeric-error"
MANIFEST = "manifest.json"


@dataclass
class RunArtifact:
    """Manifest plus named text tables; ``tables`` maps file name to content."""

    manifest: dict
    tables: dict = field(default_factory=dict)
    status: str = SUCCESS
    summary: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {SUCCESS: 0, VALIDATION_FAILURE: 1, NUMERIC_ERROR: 2}[self.status]


def versions() -> dict:
    return {"tightwave": __version__, "numpy": numpy.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


def content_hash(canonical_config: str, extra_inputs: dict | None = None) -> str:
    """Git-style blob hash over the canonical config and any referenced input files."""
    h = hashlib.sha256()
    parts = [("config", canonical_config.encode())]
    for name in sorted(extra_inputs or {}):
        parts.append((name, extra_inputs[name]))
    for name, data in parts:
        h.update(f"blob {name} {len(data)}\0".encode())
        h.update(data)
    return "sha256:" + h.hexdigest()


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_artifact(artifact: RunArtifact, directory) -> Path:
    """Write every table, then the manifest; a stale manifest is removed first.

    Any failure before the last rename leaves the directory without a
    manifest, which marks the run as incomplete.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    man = out / MANIFEST
    if man.exists():
        man.unlink()
    digests = {}
    for name in sorted(artifact.tables):
        text = artifact.tables[name]
        _atomic_write(out / name, text)
        digests[name] = "sha256:" + hashlib.sha256(text.encode()).hexdigest()
    manifest = dict(artifact.manifest)
    manifest["status"] = artifact.status
    manifest["tables"] = digests
    _atomic_write(man, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return man
