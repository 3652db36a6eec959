"""Atomic artifact writing and the hashed manifest."""
from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

MANIFEST = "manifest.txt"


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, names, header: dict[str, str]) -> Path:
    """List every artifact with its content hash, sorted by name."""
    out_dir = Path(out_dir)
    lines = [f"{k}={v}" for k, v in sorted(header.items())]
    for name in sorted(names):
        lines.append(f"{sha256_file(out_dir / name)}  {name}")
    target = out_dir / MANIFEST
    atomic_write(target, ("\n".join(lines) + "\n").encode())
    return target


def check_manifest(out_dir) -> list[str]:
    """Names whose current hash no longer matches the manifest."""
    out_dir = Path(out_dir)
    bad = []
    for line in (out_dir / MANIFEST).read_text().splitlines():
        if "  " not in line:
            continue
        digest, name = line.split("  ", 1)
        if not (out_dir / name).exists() or sha256_file(out_dir / name) != digest:
            bad.append(name)
    return bad
