"""Experiment reports and their CSV / JSON serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

VERDICTS = ("converging", "inconclusive", "diverging")
TREND_WINDOW = 4  # ratios spanning the last three decades


def trend_verdict(ratios) -> str:
    """converging iff |r - 1| strictly decreases over the last few samples.

    Strictly increasing is diverging; anything else, or fewer than three
    usable ratios, is inconclusive.
    """
    r = [float(v) for v in ratios][-TREND_WINDOW:]
    if len(r) < 3 or not all(math.isfinite(v) for v in r):
        return "inconclusive"
    d = [abs(v - 1) for v in r]
    if all(b < a for a, b in zip(d, d[1:])):
        return "converging"
    if all(b > a for a, b in zip(d, d[1:])):
        return "diverging"
    return "inconclusive"


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


@dataclass
class ExperimentReport:
    experiment_id: str
    x_samples: list[int]
    exact_values: list[float]
    predicted_values: list[float]
    ratios: list[float] = field(default_factory=list)
    trend: str = ""
    metadata: dict = field(default_factory=dict)
    extra: dict[str, list] = field(default_factory=dict)  # more per-x columns
    table: tuple[list[str], list[list]] | None = None  # replaces the per-x CSV body
    checks: list[Check] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.x_samples)
        if len(self.exact_values) != n or len(self.predicted_values) != n:
            raise ValueError("x_samples, exact_values and predicted_values must have equal length")
        for name, col in self.extra.items():
            if len(col) != n:
                raise ValueError(f"extra column {name!r} has wrong length")
        if not self.ratios:
            self.ratios = [e / p if p else math.nan for e, p in zip(self.exact_values, self.predicted_values)]
        if not self.trend:
            self.trend = trend_verdict(self.ratios)
        if self.trend not in VERDICTS:
            raise ValueError(f"bad trend verdict {self.trend!r}")

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def csv_rows(self) -> tuple[list[str], list[list]]:
        if self.table is not None:
            return self.table
        header = ["x", "exact", "predicted", "ratio", *self.extra]
        rows = []
        for i, x in enumerate(self.x_samples):
            rows.append([x, self.exact_values[i], self.predicted_values[i], self.ratios[i], *(c[i] for c in self.extra.values())])
        return header, rows

    def to_csv(self) -> str:
        header, rows = self.csv_rows()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self, timestamp: str | None = None) -> str:
        doc = {
            "experiment_id": self.experiment_id,
            "x_samples": self.x_samples,
            "exact_values": self.exact_values,
            "predicted_values": self.predicted_values,
            "ratios": [None if isinstance(r, float) and math.isnan(r) else r for r in self.ratios],
            "trend_verdict": self.trend,
            "metadata": self.metadata,
            "extra": self.extra,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
            "generated_at": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        return json.dumps(doc, indent=2, default=_json_default)

    def write(self, out_dir, x_max: int) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{self.experiment_id}_{x_max}"
        pc, pj = out / f"{stem}.csv", out / f"{stem}.json"
        with open(pc, "w", encoding="utf-8", newline="") as f:
            f.write(self.to_csv())
        pj.write_text(self.to_json(), encoding="utf-8")
        return pc, pj


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")
