"""Writing bound reports, sample streams and run summaries."""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np


def _jsonable(value: Any) -> Any:
    """Replace infinities and numpy scalars so the output is strict JSON."""
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Path):
        return str(value)
    return value


class ReportWriter:
    """Writes reports into one output directory."""

    def __init__(self, out_dir: Path, fmt: str = "json"):
        """
        Args:
            out_dir: Output directory (created on first write)
            fmt: "json" or "csv" for bound reports
        """
        if fmt not in ("json", "csv"):
            raise ValueError(f"unknown report format {fmt!r}")
        self.out_dir = out_dir
        self.fmt = fmt
        self.written: List[Path] = []

    def _path(self, name: str, suffix: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / f"{name}.{suffix}"
        self.written.append(path)
        return path

    def write_json(self, name: str, data: Dict[str, Any]) -> Path:
        """Strict, key-sorted UTF-8 JSON; identical input gives identical bytes."""
        path = self._path(name, "json")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(_jsonable(data), f, ensure_ascii=False, indent=2, sort_keys=True, allow_nan=False)
            f.write("\n")
        return path

    def write_rows(self, name: str, rows: Sequence[Dict[str, Any]], fieldnames: Optional[List[str]] = None) -> Path:
        """CSV with a header row; missing cells stay empty."""
        path = self._path(name, "csv")
        if fieldnames is None:
            fieldnames = []
            for row in rows:
                fieldnames.extend(key for key in row if key not in fieldnames)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: _jsonable(value) for key, value in row.items()})
        return path

    def write_report(self, name: str, report: Any) -> Path:
        """Any report exposing to_dict (and to_rows for per-level CSV)."""
        if self.fmt == "csv":
            rows = report.to_rows() if hasattr(report, "to_rows") else [report.to_dict()]
            return self.write_rows(name, [_flatten(row) for row in rows])
        return self.write_json(name, report.to_dict())

    def write_samples(self, name: str, statistic: str, batches: Iterable[np.ndarray]) -> Path:
        """Sample stream as sample_id,statistic,value rows."""
        path = self._path(name, "csv")
        sample_id = 0
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["sample_id", "statistic", "value"])
            for values in batches:
                for value in values:
                    writer.writerow([sample_id, statistic, repr(float(value))])
                    sample_id += 1
        return path


def _flatten(row: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in row.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, (list, tuple)):
            flat[name] = json.dumps(_jsonable(value))
        else:
            flat[name] = value
    return flat
