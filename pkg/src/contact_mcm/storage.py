"""
Run directories on disk.

    series.csv          one row per record, columns SERIES_COLUMNS
    snap_NNNNNN.json    one file per snapshot, NNNNNN the step number
    trace.json          config echo, exit reason, full records and the snapshot index
    verify.jsonl        one JSON object per verify report
    orders.csv          observed orders of a refinement sweep
    profile_NNNNNN.svg  plots

Floats are written as the shortest decimal that round-trips binary64, so snapshots reload
bit-exactly and identical runs produce identical files.
"""
from __future__ import annotations
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

from src.contact_mcm.errors import StorageError
from src.contact_mcm.trace import SERIES_COLUMNS, SNAPSHOT_FORMAT, RunTrace, Snapshot, StepRecord
from src.utils import format_float

logger = logging.getLogger(__name__)

ENCODING = 'utf-8'
SERIES_FILE = "series.csv"
TRACE_FILE = "trace.json"
VERIFY_FILE = "verify.jsonl"
ORDERS_FILE = "orders.csv"
ORDERS_COLUMNS = ("quantity", "level", "spacing", "residual", "order", "passed")

PathLike = Union[str, Path]


def snapshot_name(step: int) -> str:
    return f"snap_{step:06d}.json"


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding=ENCODING)
    except OSError as e:
        raise StorageError(f"cannot write '{path}': {e}") from e


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding=ENCODING)
    except OSError as e:
        raise StorageError(f"cannot read '{path}': {e}") from e


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


###################################################################################################
# Series
###################################################################################################

def series_text(records: Iterable[StepRecord]) -> str:
    lines = [",".join(SERIES_COLUMNS)]
    lines.extend(",".join(format_float(x) for x in r.series_row()) for r in records)
    return "\n".join(lines) + "\n"


def write_series(directory: PathLike, records: Iterable[StepRecord]) -> Path:
    path = Path(directory) / SERIES_FILE
    _write_text(path, series_text(records))
    return path


def read_series(directory: PathLike) -> List[Dict[str, float]]:
    rows = list(csv.reader(_read_text(Path(directory) / SERIES_FILE).splitlines()))
    if not rows or tuple(rows[0]) != SERIES_COLUMNS:
        raise StorageError(f"series header must be {','.join(SERIES_COLUMNS)}")
    return [dict(zip(SERIES_COLUMNS, map(float, row))) for row in rows[1:]]


###################################################################################################
# Snapshots
###################################################################################################

def snapshot_to_json(snapshot: Snapshot) -> str:
    data = {
        "format": snapshot.format,
        "step": snapshot.step,
        "t": snapshot.t,
        "solver": snapshot.solver,
        "grid": snapshot.grid,
        "fields": {k: v.tolist() for k, v in snapshot.fields.items()},
        "derived": {k: v.tolist() for k, v in snapshot.derived.items()},
    }
    return json.dumps(data)


def snapshot_from_json(text: str) -> Snapshot:
    try:
        data = json.loads(text)
        if data["format"] != SNAPSHOT_FORMAT:
            raise StorageError(f"unsupported snapshot format '{data['format']}'")
        return Snapshot(
            step=int(data["step"]),
            t=float(data["t"]),
            solver=data["solver"],
            grid=data["grid"],
            fields={k: np.array(v, dtype=float) for k, v in data["fields"].items()},
            derived={k: np.array(v, dtype=float) for k, v in data.get("derived", {}).items()},
            format=data["format"],
        )
    except (ValueError, KeyError, TypeError) as e:
        raise StorageError(f"malformed snapshot: {e}") from e


def write_snapshot(directory: PathLike, snapshot: Snapshot) -> Path:
    path = Path(directory) / snapshot_name(snapshot.step)
    _write_text(path, snapshot_to_json(snapshot))
    return path


def read_snapshot(path: PathLike) -> Snapshot:
    return snapshot_from_json(_read_text(Path(path)))


###################################################################################################
# Traces
###################################################################################################

def trace_to_dict(trace: RunTrace) -> Dict[str, Any]:
    return {
        "solver": trace.solver,
        "config": _json_safe(trace.config),
        "exit_reason": trace.exit_reason,
        "error_message": trace.error_message,
        "steps": trace.steps,
        "initial": None if trace.initial is None else trace.initial.to_dict(),
        "records": [r.to_dict() for r in trace.records],
        "snapshots": [snapshot_name(s.step) for s in trace.snapshots],
    }


def save_run(directory: PathLike, trace: RunTrace) -> Path:
    """Write series, snapshots and trace of a run into `directory`."""
    directory = Path(directory)
    write_series(directory, trace.all_records())
    for snapshot in trace.snapshots:
        write_snapshot(directory, snapshot)
    _write_text(directory / TRACE_FILE, json.dumps(trace_to_dict(trace), indent=1))
    logger.info(f"run saved to {directory}: {len(trace.snapshots)} snapshots, exit '{trace.exit_reason}'")
    return directory


def load_run(directory: PathLike) -> RunTrace:
    """Read a run directory written by `save_run`.

    :raises StorageError: Missing or malformed files
    """
    directory = Path(directory)
    if not (directory / TRACE_FILE).is_file():
        raise StorageError(f"'{directory}' holds no {TRACE_FILE}")
    try:
        data = json.loads(_read_text(directory / TRACE_FILE))
        trace = RunTrace(
            solver=data["solver"],
            config=data["config"],
            initial=None if data["initial"] is None else StepRecord.from_dict(data["initial"]),
            records=[StepRecord.from_dict(r) for r in data["records"]],
            exit_reason=data["exit_reason"],
            error_message=data.get("error_message"),
        )
        names = data["snapshots"]
    except (ValueError, KeyError, TypeError) as e:
        raise StorageError(f"malformed {TRACE_FILE}: {e}") from e
    trace.snapshots = [read_snapshot(directory / name) for name in names]
    if trace.snapshots:
        trace.final_state = trace.snapshots[-1].state()
    return trace


###################################################################################################
# Reports
###################################################################################################

def write_verify(directory: PathLike, reports: Sequence[Any]) -> Path:
    path = Path(directory) / VERIFY_FILE
    _write_text(path, "".join(json.dumps(_json_safe(r.to_dict())) + "\n" for r in reports))
    return path


def read_verify(directory: PathLike) -> List[Dict[str, Any]]:
    text = _read_text(Path(directory) / VERIFY_FILE)
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def write_orders(path: PathLike, rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    lines = [",".join(ORDERS_COLUMNS)]
    for row in rows:
        lines.append(",".join(
            "" if x is None else format_float(x) if isinstance(x, float) else str(x) for x in row))
    _write_text(path, "\n".join(lines) + "\n")
    return path


def write_text(path: PathLike, text: str) -> Path:
    """Plain text artifacts: meshes, config files."""
    path = Path(path)
    _write_text(path, text)
    return path
