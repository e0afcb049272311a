"""Reading samples from CSV and serializing results.

JSON documents use stable field names and Python's shortest round-trip
float representation. CSV output writes floats with 17 significant digits
and carries the run configuration in ``#``-prefixed header lines.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .config import RunConfig
from .divergence import GsbParams, PhiGenerator
from .errors import ParseError, SchemaError
from .robustness import RobustnessReport
from .simulation import RejectionTable
from .testing import TestResult, TwoSampleData
from .tuning import RiskSurface

__all__ = [
    "emit_result",
    "load_samples",
    "read_csv_table",
    "result_to_dict",
    "write_document",
]


def _read_rows(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if header is None:
                header = [c.strip().lower() for c in row]
                yield None, header
                continue
            yield reader.line_num, row


def _parse_float(text: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {text.strip()!r} as a number", line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text.strip()!r}", line)
    return v


def _column(header: list[str], name: str, path: Path) -> int:
    try:
        return header.index(name)
    except ValueError:
        raise SchemaError(f"{path}: missing column {name!r} (found {header})") from None


def _cell(row: list[str], idx: int, line: int) -> str:
    if idx >= len(row):
        raise ParseError("row has too few fields", line)
    return row[idx]


def _load_one_column(path: Path) -> np.ndarray:
    values = []
    y_idx = None
    for line, row in _read_rows(path):
        if line is None:
            y_idx = _column(row, "y", path)
            continue
        values.append(_parse_float(_cell(row, y_idx, line), line))
    if y_idx is None:
        raise SchemaError(f"{path}: empty file, header with column 'y' required")
    return np.asarray(values)


def load_samples(paths) -> TwoSampleData:
    """Load a two-sample data set.

    ``paths`` is either one CSV with columns ``group`` (0/1) and ``y``, or a
    pair of CSVs with a ``y`` column each (group 0 first).
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    paths = [Path(p) for p in paths]
    if len(paths) == 2:
        return TwoSampleData(_load_one_column(paths[0]), _load_one_column(paths[1]))
    if len(paths) != 1:
        raise ValueError("expected one or two input files")
    path = paths[0]
    groups: dict[int, list[float]] = {0: [], 1: []}
    g_idx = y_idx = None
    for line, row in _read_rows(path):
        if line is None:
            g_idx = _column(row, "group", path)
            y_idx = _column(row, "y", path)
            continue
        g = _cell(row, g_idx, line).strip()
        if g not in ("0", "1"):
            raise ParseError(f"group must be 0 or 1, got {g!r}", line)
        groups[int(g)].append(_parse_float(_cell(row, y_idx, line), line))
    if g_idx is None:
        raise SchemaError(f"{path}: empty file, header with columns 'group' and 'y' required")
    return TwoSampleData(np.asarray(groups[0]), np.asarray(groups[1]))


def _params_dict(params) -> dict:
    if isinstance(params, GsbParams):
        return params.as_dict()
    if isinstance(params, PhiGenerator):
        return {"generator": params.description, "index": params.index}
    raise TypeError(f"unsupported divergence {params!r}")


def result_to_dict(result, config: RunConfig | None = None) -> dict:
    """Plain-data view of any result object, with the run configuration attached."""
    if isinstance(result, TestResult):
        m = result.moments
        doc = {
            "kind": "test",
            "i_hat": result.i_hat,
            "mu_hat": None if m is None else m.mu,
            "sigma_hat": None if m is None else m.sigma,
            "family_path": None if m is None else m.family_path,
            "t_hat": result.t_hat,
            "p_value": result.p_value,
            "method": result.method.value,
            "reject": bool(result.reject),
            "level": result.level,
            "params": _params_dict(result.params),
            "n0": result.n0,
            "n1": result.n1,
            "h": result.h,
            "seed": result.seed,
        }
        config = config or result.config
    elif isinstance(result, RiskSurface):
        best = result.best_params
        doc = {
            "kind": "tuning",
            "pilot": _params_dict(result.decision.pilot),
            "p1": result.decision.p1,
            "pilot_rejected": bool(result.decision.rejected),
            "level": result.decision.level,
            "n_resample": result.n_resample,
            "seed": result.seed,
            "best": _params_dict(best),
            "best_risk": float(result.risk[result.best]),
            "entries": result.rows(),
        }
        config = config or result.config
    elif isinstance(result, RejectionTable):
        doc = {
            "kind": "table",
            "beta": result.beta,
            "alphas": list(result.alphas),
            "lambdas": list(result.lambdas),
            "cells": result.cells.tolist(),
            "se": result.se.tolist(),
            "methods": [list(r) for r in result.methods],
            "replications": result.replications,
            "data_hashes": list(result.data_hashes),
            "scenario": None if result.spec is None else result.spec.to_dict(),
            "seed": result.config.seed,
        }
        config = config or result.config
    elif isinstance(result, RobustnessReport):
        doc = {
            "kind": "robustness",
            "params": None if result.params is None else _params_dict(result.params),
            "region": result.region,
            "ges2": result.ges2,
            "breakdown": result.breakdown,
            "x0": result.x0,
            "policy": {"kind": result.policy.kind.value, "eta": result.policy.eta},
            "skipped": result.skipped,
            "curve": {"y0": result.y0.tolist(), "if2": result.if2.tolist()},
        }
        doc.update(result.extra)
    else:
        raise TypeError(f"cannot serialize {type(result).__name__}")
    doc["config"] = (config or RunConfig()).to_dict()
    return doc


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _csv_rows(result) -> list[list]:
    if isinstance(result, RejectionTable):
        rows = [["lambda\\alpha", *result.alphas]]
        rows += [[lam, *result.cells[i]] for i, lam in enumerate(result.lambdas)]
        return rows
    if isinstance(result, RiskSurface):
        keys = ["alpha", "lambda", "beta", "p_hat", "risk"]
        return [keys] + [[r[k] for k in keys] for r in result.rows()]
    if isinstance(result, RobustnessReport):
        return [["y0", "if2"]] + [[a, b] for a, b in zip(result.y0, result.if2)]
    if isinstance(result, TestResult):
        d = result_to_dict(result)
        flat = {k: v for k, v in d.items() if k not in ("params", "config", "kind")}
        flat.update({f"param_{k}": v for k, v in d["params"].items()})
        return [list(flat), list(flat.values())]
    raise TypeError(f"cannot serialize {type(result).__name__}")


def emit_result(result, config: RunConfig | None = None, fmt: str | None = None) -> str:
    """Serialize ``result`` as a JSON document or a CSV table."""
    doc = result_to_dict(result, config)
    fmt = fmt or doc["config"]["output_format"]
    if fmt == "json":
        return json.dumps(doc, indent=2, allow_nan=True) + "\n"
    if fmt != "csv":
        raise ValueError("format must be 'json' or 'csv'")
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(doc["config"], sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for row in _csv_rows(result):
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_csv_table(text: str) -> list[list[str]]:
    """Parse CSV emitted by :func:`emit_result`, skipping ``#`` header lines."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(lines))


def write_document(text: str, path: str | Path | None) -> None:
    """Write to ``path``, or to standard output when ``path`` is ``None``."""
    if path is None:
        import sys

        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)
