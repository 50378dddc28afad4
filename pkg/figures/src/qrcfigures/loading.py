"""Validated loading of benchmark run directories (CSV + manifest)."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path


class ManifestError(RuntimeError):
    """Missing manifest or digest mismatch: the CSV is not trustworthy."""


class SchemaError(RuntimeError):
    """The CSV does not carry the columns the requested figure needs."""


@dataclass
class RunData:
    """One run directory: parsed rows, column names and the run's config."""

    path: Path
    columns: list[str]
    rows: list[dict]
    config: dict

    def label(self) -> str:
        stat = self.config.get("statistics", "?")
        parts = [stat]
        if stat == "boson":
            parts.append(f"e={self.config.get('excitation')}")
        if self.config.get("virtual_nodes", 1) != 1:
            parts.append(f"V={self.config.get('virtual_nodes')}")
        return " ".join(parts)

    def column(self, name: str, cast=float) -> list:
        return [cast(r[name]) for r in self.rows]


def load_run(run_dir, csv_name: str, required: list[str]) -> RunData:
    """Load one CSV from a run directory, checking manifest digest and schema."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise ManifestError(f"{run_dir} has no manifest.json; refusing unattributed CSVs")
    manifest = json.loads(manifest_path.read_text())
    csv_path = run_dir / csv_name
    if not csv_path.exists():
        raise SchemaError(f"{run_dir} does not contain {csv_name}")
    recorded = manifest.get("outputs", {}).get(csv_name)
    if recorded is None:
        raise ManifestError(f"manifest in {run_dir} does not list {csv_name}")
    digest = hashlib.sha256(csv_path.read_bytes()).hexdigest()
    if digest != recorded:
        raise ManifestError(
            f"{csv_path} digest {digest[:12]} does not match manifest {recorded[:12]}"
        )
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        columns = reader.fieldnames or []
        missing = [c for c in required if c not in columns]
        if missing:
            raise SchemaError(f"{csv_path} lacks columns {missing} (has {columns})")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{csv_path} has no data rows; nothing to plot")
    return RunData(path=run_dir, columns=list(columns), rows=rows, config=manifest.get("config", {}))
