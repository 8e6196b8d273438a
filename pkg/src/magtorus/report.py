"""Check rows, deterministic JSON/CSV emission."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Iterable

__all__ = ["Check", "Report", "canonical_json", "emit_report", "rows_csv", "default_out_dir", "OUT_ENV"]

OUT_ENV = "MAGTORUS_OUT"
FLOAT_DIGITS = 6


def _canon(value: Any) -> Any:
    """Round floats to a fixed number of significant digits, recursively."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(f"{value:.{FLOAT_DIGITS}e}")
    if isinstance(value, int):
        return value
    if hasattr(value, "item") and callable(value.item):  # numpy scalars
        return _canon(value.item())
    if isinstance(value, dict):
        return {str(k): _canon(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canon(v) for v in value]
    return value


def canonical_json(data: Any) -> str:
    """Byte-stable JSON: sorted keys, fixed float precision, trailing newline."""
    return json.dumps(_canon(data), sort_keys=True, indent=2) + "\n"


@dataclass
class Check:
    """One residual compared against its tolerance, or a boolean outcome
    when ``tol`` is ``None``.

    With ``bound="upper"`` (the default) ``value <= tol`` passes; with
    ``bound="lower"`` ``value >= tol`` passes.
    """

    name: str
    value: float | bool
    tol: float | None = None
    detail: str = ""
    bound: str = "upper"

    def __post_init__(self):
        if self.bound not in ("upper", "lower"):
            raise ValueError("bound must be 'upper' or 'lower'")

    @property
    def passed(self) -> bool:
        if self.tol is None:
            return bool(self.value)
        v = float(self.value)
        if not math.isfinite(v):
            return False
        return v <= self.tol if self.bound == "upper" else v >= self.tol

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "tol": self.tol,
            "bound": self.bound,
            "pass": self.passed,
            "detail": self.detail,
        }


@dataclass
class Report:
    battery: str
    checks: list[Check] = dc_field(default_factory=list)
    data: dict[str, Any] = dc_field(default_factory=dict)

    def add(
        self, name: str, value: float | bool, tol: float | None = None, detail: str = "", bound: str = "upper"
    ) -> Check:
        c = Check(name, value, tol, detail, bound)
        self.checks.append(c)
        return c

    def extend(self, checks: Iterable[Check]) -> None:
        self.checks.extend(checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "battery": self.battery,
            "status": "PASS" if self.passed else "FAIL",
            "checks": [c.to_json() for c in self.checks],
            "failed": [c.name for c in self.failures()],
            "data": self.data,
        }

    def summary(self) -> str:
        lines = [f"[{'PASS' if self.passed else 'FAIL'}] {self.battery}"]
        for c in self.checks:
            rel = "<=" if c.bound == "upper" else ">="
            tol = "" if c.tol is None else f" (need {rel} {c.tol:.1e})"
            val = c.value if isinstance(c.value, bool) else f"{float(c.value):.3e}"
            lines.append(f"  {'ok  ' if c.passed else 'FAIL'} {c.name}: {val}{tol}{' ' + c.detail if c.detail else ''}")
        return "\n".join(lines)


def rows_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    if not rows:
        return ""
    columns = columns or sorted({k for r in rows for k in r})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _csv_cell(r.get(k)) for k in columns})
    return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12e}"
    return v


def default_out_dir() -> Path | None:
    env = os.environ.get(OUT_ENV)
    return Path(env) if env else None


def emit_report(name: str, payload: Any, out_dir: Path | str | None, csv_text: str | None = None) -> list[Path]:
    """Write ``<name>.json`` (and ``<name>.csv`` if given) into ``out_dir``.

    Returns the written paths; nothing is written when ``out_dir`` is ``None``.
    """
    if out_dir is None:
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    p = out / f"{name}.json"
    p.write_text(canonical_json(payload))
    paths.append(p)
    if csv_text is not None:
        q = out / f"{name}.csv"
        q.write_text(csv_text)
        paths.append(q)
    return paths
