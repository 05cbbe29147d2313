"""Run manifests and deterministic CSV / JSON output."""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

THREADS_ENV = "SCLDPC_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class RunManifest:
    """Everything needed to reproduce a run.

    ``wall_clock`` stays ``None`` unless timing was requested, so repeated
    invocations write identical bytes.
    """

    command: str
    parameters: dict
    tolerances: dict = field(default_factory=dict)
    version: str = __version__
    seed: int | None = None
    wall_clock: float | None = None

    def to_dict(self) -> dict:
        return _plain(asdict(self))


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def fmt(value) -> str:
    """Decimal rendering with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(value)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def csv_text(header: list[str], rows: list[list], manifest: RunManifest) -> str:
    """CurveFile: a manifest comment line, a header row and 17-digit rows."""
    width = len(header)
    lines = ["# manifest: " + json.dumps(manifest.to_dict(), sort_keys=True), ",".join(header)]
    for row in rows:
        if len(row) != width:
            raise ValueError(f"row has {len(row)} columns, header has {width}")
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Parse a CurveFile back into (manifest, header, numeric rows)."""
    text = Path(path).read_text().splitlines()
    manifest = json.loads(text[0].split(":", 1)[1])
    header = text[1].split(",")
    rows = [[float(v) for v in line.split(",")] for line in text[2:] if line]
    return manifest, header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def json_text(payload: dict, manifest: RunManifest) -> str:
    body = {"manifest": manifest.to_dict(), **_plain(payload)}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def write_text(path, text: str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
