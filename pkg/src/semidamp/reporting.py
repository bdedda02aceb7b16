"""Deterministic CSV emission (RFC 4180) and the run manifest."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__


def fmt(value) -> str:
    """Stable scalar formatting: shortest float repr, lowercase booleans."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path, header: list[str], rows) -> Path:
    """UTF-8, CRLF line endings, header row mandatory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


@dataclass
class RunManifest:
    version: str = __version__
    config_hash: str = ""
    config_path: str = ""
    seeds: dict = field(default_factory=dict)
    grid_convergence: dict = field(default_factory=dict)
    z_grid_doc: str = ""
    outputs: list = field(default_factory=list)
    gates: dict = field(default_factory=dict)

    def add_output(self, path) -> None:
        self.outputs.append(str(Path(path).name))

    def write(self, directory) -> Path:
        path = Path(directory) / "manifest.json"
        payload = {
            "version": self.version,
            "config_hash": self.config_hash,
            "config_path": self.config_path,
            "seeds": self.seeds,
            "grid_convergence": self.grid_convergence,
            "z_grid": self.z_grid_doc,
            "outputs": sorted(self.outputs),
            "gates": self.gates,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path
