"""
Run manifests: what a command was asked to do and what it wrote.

A manifest sits next to the artifacts it describes, `<file>.manifest.json`
for a single output file or `<dir>/manifest.json` for an output directory,
and carries enough (argv, resolved config, seeds, precision) to re-run the
command and compare artifact hashes.
"""

import hashlib
import logging
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Union

from pydantic import BaseModel, Field, PrivateAttr

from t2f.engine import get_precision
from t2f.errors import ParseError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_SUFFIX = ".manifest.json"

PathLike = Union[str, Path]


def compute_hash(path: PathLike) -> str:
    """SHA-256 of a file, streamed."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        while True:
            chunk = f.read(8192)
            if not chunk:
                break
            h.update(chunk)
    return h.hexdigest()


def manifest_path(out: PathLike) -> Path:
    out = Path(out)
    if out.is_dir():
        return out / MANIFEST_NAME
    return out.with_name(out.name + MANIFEST_SUFFIX)


class RunManifest(BaseModel):
    command: str
    argv: list[str] = Field(default_factory=list)
    config: dict[str, Any] = Field(default_factory=dict)
    seeds: dict[str, int] = Field(default_factory=dict)
    precision: int = Field(default_factory=get_precision)
    artifacts: dict[str, str] = Field(default_factory=dict)
    duration_seconds: float = 0.0
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))

    _started: float = PrivateAttr(default_factory=time.monotonic)

    def record(self, paths: Iterable[PathLike]) -> "RunManifest":
        """Hash each file in `paths` into `artifacts`."""
        for p in paths:
            p = Path(p)
            if p.is_file():
                self.artifacts[str(p)] = compute_hash(p)
        return self

    def finish(self, out: PathLike, paths: Iterable[PathLike] = ()) -> Path:
        """Hash `paths`, stamp the duration and write the manifest for `out`."""
        self.record(paths)
        self.duration_seconds = round(time.monotonic() - self._started, 3)
        return write_manifest(self, out)

    def stale_artifacts(self) -> list[str]:
        """Artifacts whose file is gone or no longer matches its recorded hash."""
        stale = []
        for name, digest in self.artifacts.items():
            p = Path(name)
            if not p.is_file() or compute_hash(p) != digest:
                stale.append(name)
        return stale


def write_manifest(manifest: RunManifest, out: PathLike) -> Path:
    path = manifest_path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.debug(f"Wrote manifest for {manifest.command} to {path}")
    return path


def read_manifest(path: PathLike, out: bool = False) -> RunManifest:
    """Read a manifest file, or the manifest belonging to an output when `out` is true."""
    path = manifest_path(path) if out else Path(path)
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ParseError(f"{path}: invalid run manifest ({exc})") from exc
