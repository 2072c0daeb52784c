"""CSV and JSON artifact writers."""

import csv
import json
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Union

import numpy as np
import structlog
from pydantic import BaseModel

from .models import SweepRow

logger = structlog.get_logger(__name__)

Cell = Union[str, int, float, bool, None]


def _cell(value: Cell) -> str:
    if isinstance(value, np.generic):
        value = value.item()
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> Path:
    """Comma-separated table; floats keep their exact repr."""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"Row of {len(row)} cells does not match {len(header)} columns")
            writer.writerow([_cell(v) for v in row])
            count += 1
    logger.debug("csv_written", path=str(path), rows=count)
    return path


SWEEP_COLUMNS = ("parameter", "analytic", "simulated", "relative_error", "alternate")


def write_sweep(
    path: Path,
    rows: Sequence[SweepRow],
    extra_header: Sequence[str] = (),
    extras: Optional[Sequence[Sequence[Cell]]] = None,
) -> Path:
    """Sweep table: the SweepRow columns followed by per-row ``extras``."""
    tails = extras if extras is not None else [()] * len(rows)
    if len(tails) != len(rows):
        raise ValueError(f"{len(tails)} extra rows for {len(rows)} sweep rows")
    body = [
        (r.parameter, r.analytic, r.simulated, r.relative_error, r.alternate, *tail)
        for r, tail in zip(rows, tails)
    ]
    return write_csv(path, [*SWEEP_COLUMNS, *extra_header], body)


def _plain(payload: Any) -> Any:
    if isinstance(payload, np.generic):
        return payload.item()
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, dict):
        return {str(k): _plain(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_plain(v) for v in payload]
    return payload


def write_json(path: Path, payload: Any) -> Path:
    """UTF-8 JSON with sorted keys, two-space indent and a trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_plain(payload), sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    logger.debug("json_written", path=str(path))
    return path


def run_directory(root: Union[str, Path], command: str, seed: int) -> Path:
    """Fresh directory ``<root>/<command>-seed<seed>[-<i>]`` for one run."""
    base = Path(root)
    base.mkdir(parents=True, exist_ok=True)
    name = f"{command}-seed{seed}"
    candidate = base / name
    suffix = 1
    while candidate.exists():
        candidate = base / f"{name}-{suffix}"
        suffix += 1
    candidate.mkdir()
    return candidate


def relative_outputs(run_dir: Path, paths: Iterable[Path]) -> List[str]:
    return sorted(str(p.relative_to(run_dir)) for p in paths)
