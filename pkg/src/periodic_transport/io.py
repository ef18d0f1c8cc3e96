"""Deterministic CSV / JSON output and the matching readers.

Every file starts with the resolved run configuration and its SHA-256
digest.  Floats are written with 17 significant digits, which round-trips
IEEE doubles exactly.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

TRAJECTORY_HEADER = ("t", "n", "w")
BOUND_HEADER = ("t", "n", "value", "bound", "margin")
SWEEP_HEADER = ("kappa", "alpha", "delta", "T_fit", "bound", "pass")
FIELD_HEADER = ("t", "x", "u")
FIT_HEADER = ("t", "rho", "gamma", "C", "residual")
COMPARE_HEADER = ("n", "w_modes", "w_pde", "rel_diff")
CHECK_HEADER = ("check", "value", "pass")


def format_value(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def parse_value(s: str) -> Any:
    if s == "none":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _json_text(v: Any) -> str:
    if isinstance(v, Mapping):
        items = (f"{json.dumps(str(k))}: {_json_text(x)}" for k, x in v.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_text(x) for x in v) + "]"
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return json.dumps(format_value(v))
        return f"{v:.17g}"
    return json.dumps(str(v))


def config_digest(config: Mapping[str, Any]) -> str:
    canonical = _json_text({k: config[k] for k in sorted(config)})
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config: Mapping[str, Any],
    summary: Mapping[str, Any] | None = None,
) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# config: {_json_text({k: config[k] for k in sorted(config)})}\n")
        fh.write(f"# config_sha256: {config_digest(config)}\n")
        for k, v in (summary or {}).items():
            fh.write(f"# {k}: {format_value(v)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def read_csv(path: str | Path) -> dict[str, Any]:
    """Parse a file written by :func:`write_csv`.

    Returns a dict with ``config``, ``summary``, ``header`` and ``rows``.
    """
    config: dict[str, Any] = {}
    summary: dict[str, Any] = {}
    body = []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("# config: "):
                config = json.loads(line[len("# config: "):])
            elif line.startswith("# config_sha256: "):
                continue
            elif line.startswith("# "):
                key, _, val = line[2:].rstrip("\n").partition(": ")
                summary[key] = parse_value(val)
            else:
                body.append(line)
    reader = csv.reader(body)
    header = tuple(next(reader))
    rows = [tuple(parse_value(c) for c in r) for r in reader]
    return {"config": config, "summary": summary, "header": header, "rows": rows}


def write_json(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config: Mapping[str, Any],
    summary: Mapping[str, Any] | None = None,
) -> None:
    doc = {
        "config": {k: config[k] for k in sorted(config)},
        "config_sha256": config_digest(config),
        "summary": dict(summary or {}),
        "columns": list(header),
        "rows": [list(r) for r in rows],
    }
    Path(path).write_text(_json_text(doc) + "\n")


def _restore(v: Any) -> Any:
    if isinstance(v, str) and v in ("inf", "-inf", "nan"):
        return float(v)
    if isinstance(v, list):
        return [_restore(x) for x in v]
    return v


def read_json(path: str | Path) -> dict[str, Any]:
    doc = json.loads(Path(path).read_text())
    return {
        "config": doc["config"],
        "summary": {k: _restore(v) for k, v in doc["summary"].items()},
        "header": tuple(doc["columns"]),
        "rows": [tuple(_restore(x) for x in r) for r in doc["rows"]],
    }


def write_table(path, fmt: str, header, rows, config, summary=None) -> None:
    rows = list(rows)
    if fmt == "json":
        write_json(path, header, rows, config, summary)
    else:
        write_csv(path, header, rows, config, summary)


def read_table(path: str | Path) -> dict[str, Any]:
    text = Path(path).read_text()
    return read_json(path) if text.lstrip().startswith("{") else read_csv(path)
