"""
Plot-ready output files.

  timeseries.csv   one row per grid time, numbers with 12 significant digits
  tomogram_t<k>    snapshot tomograms (JSON + CSV)
  manifest.json    config echo, seeds and package versions; no timestamps,
                   so identical runs produce identical bytes
"""
import csv
import json
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from loguru import logger
from pydantic import BaseModel

from app.models import RunManifest
from app.tomography import Tomogram, write_tomogram

VERSIONED_PACKAGES = ["spintomo", "numpy", "scipy", "pydantic", "loguru", "python-dotenv"]


def format_number(value: Optional[float]) -> str:
    if value is None:
        return ""
    return "%.12g" % value


def write_timeseries(rows: Iterable[dict[str, Any]], columns: Sequence[str], path: Path) -> Path:
    """CSV with a header row; missing values are written as empty fields."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(row.get(c)) for c in columns])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def snapshot_indices(times: Sequence[float], requested: Sequence[float]) -> list[int]:
    """Grid index closest to each requested time, without duplicates."""
    indices = []
    for t in requested:
        k = min(range(len(times)), key=lambda i: abs(times[i] - t))
        if k not in indices:
            indices.append(k)
    return indices


def write_snapshots(
    times: Sequence[float],
    tomograms: Sequence[Tomogram],
    requested: Sequence[float],
    out_dir: Path,
) -> list[Path]:
    paths = []
    for k in snapshot_indices(times, requested):
        json_path, csv_path = write_tomogram(tomograms[k], Path(out_dir) / f"tomogram_t{k}.json")
        paths += [json_path, csv_path]
    return paths


def package_versions(names: Sequence[str] = VERSIONED_PACKAGES) -> dict[str, str]:
    versions = {}
    for name in names:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


def write_json(document: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(document, BaseModel):
        text = document.model_dump_json(indent=2)
    else:
        text = json.dumps(document, indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_manifest(
    command: str,
    config: BaseModel,
    seeds: dict[str, int],
    outputs: Sequence[Path],
    out_dir: Path,
) -> Path:
    manifest = RunManifest(
        command=command,
        config=config.model_dump(mode="json"),
        seeds=seeds,
        versions=package_versions(),
        outputs=sorted(Path(p).name for p in outputs),
    )
    return write_json(manifest, Path(out_dir) / "manifest.json")
