"""KPI tables, run manifests and atomic output writing."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .simulation import ConfidenceInterval, Estimate, KpiReport

KPI_HEADER = ("scenario_id", "kpi", "value", "ci95_low", "ci95_high", "unit")
KPI_TABLE = "kpi_table.csv"
MANIFEST = "manifest.json"
PER_UE = "per_ue.csv"


@dataclass(frozen=True)
class OutputBundle:
    kpi_table: Path
    manifest: Path
    per_ue_samples: Optional[Path] = None


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".9g")


def _row(name, est, unit):
    if isinstance(est, ConfidenceInterval):
        return (name, est.mean, est.low, est.high, unit)
    return (name, est.value, est.low, est.high, unit)


def kpi_rows(report: KpiReport) -> list:
    rows = [
        _row("coverage_pct", report.coverage_pct, "percent"),
        _row("median_throughput", report.median_throughput, "bps"),
        _row("p5_throughput", report.p5_throughput, "bps"),
        _row("median_sinr", report.median_sinr, "dB"),
    ]
    for name, (est, unit) in report.extra.items():
        rows.append(_row(name, est, unit))
    if report.latency_summary is not None:
        rows.append(_row("latency_median", report.latency_summary["median_ms"], "ms"))
    return rows


def kpi_table_text(report: KpiReport, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(KPI_HEADER)
    for name, value, lo, hi, unit in kpi_rows(report):
        w.writerow((report.scenario_id, name, fmt(value), fmt(lo), fmt(hi), unit))
    return buf.getvalue()


def per_ue_text(report: KpiReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scenario_id", "drop", "ue", "x", "y", "snr_db", "sinr_db", "throughput_bps", "covered"))
    for r in report.drops:
        for u in range(r.throughput_bps.size):
            w.writerow((
                report.scenario_id, r.drop_index, u, fmt(r.ue_xy[u, 0]), fmt(r.ue_xy[u, 1]),
                fmt(r.snr_db[u]), fmt(r.sinr_db[u]), fmt(r.throughput_bps[u]), int(r.covered[u]),
            ))
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, (ConfidenceInterval,)):
        return {"mean": _jsonable(x.mean), "ci95": _jsonable(x.ci95)}
    if isinstance(x, Estimate):
        return {"value": _jsonable(x.value), "ci95_low": _jsonable(x.low), "ci95_high": _jsonable(x.high)}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return None if math.isnan(x) else float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def manifest_dict(report: KpiReport, config: Optional[dict] = None) -> dict:
    meta = dict(report.metadata)
    return _jsonable({
        "scenario_id": report.scenario_id,
        "config": config,
        "seed": meta.pop("seed", None),
        "tool_version": meta.pop("version", None),
        "config_digest": meta.pop("config_digest", None),
        "start": meta.pop("start", None),
        "end": meta.pop("end", None),
        "metadata": meta,
        "kpis": {name: {"value": v, "ci95_low": lo, "ci95_high": hi, "unit": unit} for name, v, lo, hi, unit in kpi_rows(report)},
        "sinr_distribution": report.sinr_distribution,
        "latency_summary": report.latency_summary,
    })


def write_atomic(path, data: str):
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(report: KpiReport, directory, config: Optional[dict] = None, append: bool = False, per_ue: bool = False) -> OutputBundle:
    """Write the KPI table, manifest and optional per-UE samples to ``directory``.

    With ``append`` the KPI rows are added to an existing table (the header
    is written once), which lets sweep scripts collect many scenarios.
    """
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
        table = d / KPI_TABLE
        if append and table.exists():
            text = table.read_text() + kpi_table_text(report, header=False)
        else:
            text = kpi_table_text(report)
        write_atomic(table, text)
        manifest = d / MANIFEST
        write_atomic(manifest, json.dumps(manifest_dict(report, config), indent=2, sort_keys=True) + "\n")
        ue_path = None
        if per_ue:
            ue_path = d / PER_UE
            write_atomic(ue_path, per_ue_text(report))
    except OSError as exc:
        raise OSError(f"{d}: {exc.strerror or exc}") from exc
    return OutputBundle(table, manifest, ue_path)
