"""Deterministic CSV/JSON artifacts and run manifests.

Numbers are written with 17 significant digits ('.' decimal separator),
which round-trips binary64 exactly; CSV uses comma delimiters and LF
line endings; JSON keys are sorted.  Identical inputs therefore produce
byte-identical files on every platform.  Manifests carry no timestamps
or host details for the same reason: they record exactly the effective
options of a run, nothing environmental.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__

TOOL_NAME = "fermisphere"
MANIFEST_NAME = "manifest.json"


def format_float(x: float) -> str:
    """17 significant digits: parses back to the identical binary64."""
    return "%.17g" % float(x)


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path, header, rows) -> None:
    """Comma-delimited, LF-terminated table with formatted numbers."""
    path = Path(path)
    lines = [",".join(str(h) for h in header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def jsonable(value):
    """Recursively convert numpy containers to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def json_text(obj) -> str:
    """Canonical JSON rendering (sorted keys, two-space indent, LF)."""
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(json_text(obj), encoding="utf-8")


def write_manifest(directory, subcommand: str, options: dict) -> Path:
    """Record the effective run configuration beside the outputs.

    ``options`` must contain everything needed to reproduce the run
    (output location and worker caps excluded: neither affects content).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / MANIFEST_NAME
    write_json(path, {
        "tool": TOOL_NAME,
        "version": __version__,
        "subcommand": subcommand,
        "options": options,
    })
    return path


def read_manifest(path) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON: {exc}") from None
    for key in ("tool", "subcommand", "options"):
        if key not in data:
            raise ValueError(f"{path}: manifest lacks {key!r}")
    if data["tool"] != TOOL_NAME:
        raise ValueError(
            f"{path}: manifest is for {data['tool']!r}, not {TOOL_NAME!r}")
    if not isinstance(data["options"], dict):
        raise ValueError(f"{path}: manifest options must be an object")
    return data


def read_table_csv(path, min_columns: int = 2):
    """Read a numeric CSV with a header row; returns (header, array).

    Malformed content raises ValueError naming the offending line
    (1-based, header included), so callers can surface usable messages.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip() != ""]
    if not lines:
        raise ValueError(f"{path}: file is empty")
    header = [h.strip() for h in lines[0].split(",")]
    width = len(header)
    if width < min_columns:
        raise ValueError(
            f"{path}: line 1: need at least {min_columns} columns, "
            f"found {width}")
    rows = np.empty((len(lines) - 1, width))
    for k, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != width:
            raise ValueError(
                f"{path}: line {k}: expected {width} columns, "
                f"found {len(cells)}")
        try:
            rows[k - 2] = [float(c) for c in cells]
        except ValueError:
            raise ValueError(
                f"{path}: line {k}: non-numeric value") from None
    if rows.shape[0] == 0:
        raise ValueError(f"{path}: no data rows after the header")
    return header, rows
