"""Verification records and deterministic report files."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Verification:
    lemma_id: str
    passed: bool
    defect: float | None = None
    grid: dict | None = None
    refinement_ratios: list | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"lemma_id": self.lemma_id, "grid": self.grid, "defect": self.defect,
                "refinement_ratios": self.refinement_ratios, "pass": bool(self.passed),
                "details": self.details}


@dataclass
class SuiteResult:
    name: str
    records: list
    seconds: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.records) and all(r.passed for r in self.records)

    def to_dict(self, timing: bool = False) -> dict:
        out = {"suite": self.name, "pass": self.passed, "records": [r.to_dict() for r in self.records]}
        if self.error is not None:
            out["error"] = self.error
        if timing:
            out["seconds"] = self.seconds
        return out


def _plain(x):
    """Convert to JSON-ready values; floats become fixed-format strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return format_float(float(x))
    if isinstance(x, (complex, np.complexfloating)):
        return [format_float(x.real), format_float(x.imag)]
    return x


def format_float(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.12e" % v


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def render_json(results, cfg_hash: str = "") -> str:
    doc = {"config_hash": cfg_hash, "pass": all(r.passed for r in results),
           "suites": [r.to_dict() for r in results]}
    return json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n"


def _flat(prefix, x, out):
    if isinstance(x, dict):
        for k in sorted(x):
            _flat(f"{prefix}.{k}" if prefix else str(k), x[k], out)
    else:
        out[prefix] = json.dumps(_plain(x), sort_keys=True) if isinstance(x, (list, tuple, np.ndarray)) else _plain(x)


def render_csv(results, cfg_hash: str = "") -> str:
    """One row per record; nested details are flattened to dotted column names."""
    rows = []
    for res in results:
        for rec in res.records:
            d = rec.to_dict()
            flat = {"suite": res.name, "config_hash": cfg_hash}
            _flat("", d, flat)
            rows.append(flat)
    cols = ["suite", "lemma_id", "pass", "defect"]
    rest = sorted({k for r in rows for k in r} - set(cols))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols + rest, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in cols + rest})
    return buf.getvalue()


def emit_report(results, fmt: str = "json", path=None, cfg_hash: str = "") -> str:
    """Render ``results`` and write them to ``path`` (stdout text is returned either way).

    Refuses empty input before touching the file system.
    """
    results = list(results)
    if not results or not any(r.records for r in results):
        raise ValueError("no results to report")
    if fmt == "json":
        text = render_json(results, cfg_hash)
    elif fmt == "csv":
        text = render_csv(results, cfg_hash)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        path = os.fspath(path)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def write_decay_csv(report, path) -> None:
    """Decay table with headers radius,value,fit_residual."""
    report.write_csv(path)
