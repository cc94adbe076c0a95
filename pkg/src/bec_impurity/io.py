"""CSV interchange and run manifests.

Every CSV starts with a ``#`` block carrying the manifest hash, the unit
statement and the column schema, followed by a plain header row and
full-precision rows. Writing is deterministic: the same arrays and metadata
give the same bytes.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

UNITS = "hbar=m=omega_BEC=1"

#: canonical file name -> column names
SCHEMAS = {
    "correlation.csv": ("t", "im_alpha"),
    "kernel.csv": ("tau", "gamma_kernel"),
    "kernel_truncated.csv": ("tau", "gamma_kernel"),
    "spectral.csv": ("omega", "J"),
    "trajectory.csv": ("t", "Q"),
    "rates.csv": ("omega", "gamma", "method"),
    "rates_analytic.csv": ("omega", "gamma", "method"),
    "toy.csv": ("t", "Q_envelope"),
}


class MissingArtifactError(FileNotFoundError):
    """A pipeline stage needs an output that an earlier stage has not written."""


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return "%.17g" % value


def write_csv(path, columns: dict, manifest_hash: str, meta: dict | None = None) -> Path:
    """Write equal-length columns with the standard metadata block.

    ``meta`` entries become extra ``# key: value`` lines (values JSON-encoded
    unless they are strings).
    """
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    length = {len(c) for c in data}
    if len(length) != 1:
        raise ValueError("all columns must have the same length")
    lines = [f"# manifest: {manifest_hash}", f"# units: {UNITS}",
             f"# columns: {','.join(names)}"]
    for key, value in (meta or {}).items():
        text = value if isinstance(value, str) else json.dumps(value, sort_keys=True)
        lines.append(f"# {key}: {text}")
    lines.append(",".join(names))
    for row in zip(*data):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Return ``(columns, meta)``; numeric columns become float arrays."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"missing artifact: {path}")
    meta, rows, names = {}, [], None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif names is None:
                names = line.split(",")
            elif line:
                rows.append(line.split(","))
    if names is None:
        raise ValueError(f"{path}: no header row")
    columns = {}
    for j, name in enumerate(names):
        raw = [r[j] for r in rows]
        try:
            columns[name] = np.array([float(v) for v in raw])
        except ValueError:
            columns[name] = np.array(raw)
    return columns, meta


@dataclass
class RunManifest:
    """Provenance record kept as ``manifest.json`` in the output directory.

    ``hash`` identifies the resolved configuration and tool version; it is
    what the CSV headers reference. Stage records hold input and output
    digests, wall-clock seconds and step counts.
    """

    params_hash: str
    tool_version: str = __version__
    stages: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return hashlib.sha256(f"{self.params_hash}:{self.tool_version}".encode()).hexdigest()

    def record(self, stage: str, inputs=(), outputs=(), wall_clock: float = 0.0,
               steps: int = 0, **extra) -> None:
        self.stages[stage] = {
            "inputs": {os.path.basename(p): file_digest(p) for p in inputs},
            "outputs": {os.path.basename(p): file_digest(p) for p in outputs},
            "wall_clock": wall_clock,
            "steps": steps,
            **extra,
        }

    def save(self, directory) -> Path:
        path = Path(directory) / "manifest.json"
        payload = asdict(self)
        payload["hash"] = self.hash
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, directory, params_hash: str) -> "RunManifest":
        """Existing manifest for the same configuration, else a fresh one."""
        path = Path(directory) / "manifest.json"
        if path.exists():
            data = json.loads(path.read_text())
            if data.get("params_hash") == params_hash:
                return cls(data["params_hash"], data.get("tool_version", __version__),
                           data.get("stages", {}))
        return cls(params_hash)
