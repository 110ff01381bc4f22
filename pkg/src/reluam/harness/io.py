"""CSV output and its metadata sidecar."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from threadpoolctl import threadpool_info

import reluam
from reluam.harness.runner import BLAS_THREADS, ExperimentResult, LossRow, PhaseRow

PHASE_HEADER = ("arch", "algo", "init", "d", "k", "k_o", "n", "trials", "successes", "probability")
LOSS_HEADER = ("arch", "algo", "init", "d", "k", "n", "trial", "iteration", "residual", "param_dist")
SCHEMAS = {"phase": (PHASE_HEADER, PhaseRow), "loss": (LOSS_HEADER, LossRow)}


def format_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return "%.17g" % value
    return str(value)


def _schema_of(rows: Sequence, schema: Optional[str]) -> str:
    if schema is not None:
        if schema not in SCHEMAS:
            raise ValueError(f"unknown schema {schema!r}")
        return schema
    if not rows:
        raise ValueError("cannot infer the schema of an empty row list; pass schema=")
    return "loss" if isinstance(rows[0], LossRow) else "phase"


def write_csv(
    results: Union[ExperimentResult, Sequence[Union[PhaseRow, LossRow]]],
    path,
    schema: Optional[str] = None,
) -> Path:
    """Write aggregated rows (or an :class:`ExperimentResult`) to ``path``.

    Rows come out in grid-major, trial-minor order; reals use ``%.17g``.
    """
    if isinstance(results, ExperimentResult):
        schema = results.schema
        rows = results.rows()
    else:
        rows = list(results)
    schema = _schema_of(rows, schema)
    header, _ = SCHEMAS[schema]
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(getattr(row, name)) for name in header))
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> List[Union[PhaseRow, LossRow]]:
    """Inverse of :func:`write_csv`."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader, ()))
            body = list(reader)
    except OSError as exc:
        raise OSError(f"cannot read CSV {path}: {exc.strerror or exc}") from exc
    for schema, (expected, cls) in SCHEMAS.items():
        if header == expected:
            break
    else:
        raise ValueError(f"{path}: unrecognized header {','.join(header)!r}")
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    rows = []
    for lineno, values in enumerate(body, 2):
        if len(values) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(values)}")
        kwargs = {}
        for name, raw in zip(header, values):
            kind = types[name]
            kwargs[name] = int(raw) if kind == "int" else float(raw) if kind == "float" else raw
        rows.append(cls(**kwargs))
    return rows


def metadata_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_metadata(
    path,
    result: ExperimentResult,
    overrides: Iterable[str] = (),
    config_file: Optional[str] = None,
    jobs: Optional[int] = None,
) -> Path:
    """Sidecar ``<csv>.meta.json`` describing how the CSV was produced.

    Only run-independent fields are stored, so reruns leave it unchanged.
    """
    spec = result.spec
    blas = sorted({(lib.get("internal_api", ""), lib.get("version") or "") for lib in threadpool_info()})
    meta = {
        "package": "reluam",
        "version": reluam.__version__,
        "seed": spec.seed,
        "spec": spec.to_dict(),
        "schema": result.schema,
        "threads_per_trial": BLAS_THREADS,
        "jobs": jobs,
        "blas": [f"{api} {ver}".strip() for api, ver in blas],
        "config_file": config_file,
        "overridden_by_flags": sorted(overrides),
        "trials_run": len(result.trials),
        "diverged_trials": sum(r.diverged for r in result.trials),
    }
    out = metadata_path(path)
    try:
        out.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write metadata to {out}: {exc.strerror or exc}") from exc
    return out
