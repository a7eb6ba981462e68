"""Run manifests: enough to reproduce any command byte for byte.

A manifest records the canonical argv, the resolved configuration, the
seed, sha256 digests of the inputs and of the outputs produced.  No
wall-clock values are stored, so re-running a command rewrites identical
manifests too.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__

MANIFEST_SCHEMA = "anonset-manifest/1"
MANIFEST_NAME = "manifest.json"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(
    command: str,
    argv: list[str],
    config: dict,
    inputs: list[str | Path],
    outputs: list[str | Path],
    seed: int | None = None,
) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "tool_version": __version__,
        "command": command,
        "argv": [str(a) for a in argv],
        "config": config,
        "seed": seed,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
    }


def write_manifest(path: str | Path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_manifest(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"{path}: not a run manifest")
    return data


def verify_outputs(manifest: dict) -> list[str]:
    """Paths whose current digest differs from the recorded one."""
    bad = []
    for path, digest in manifest.get("outputs", {}).items():
        if not Path(path).exists() or sha256_file(path) != digest:
            bad.append(path)
    return bad
