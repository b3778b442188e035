#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# 📊 REPORTING - Console formatting and atomic artifact writers
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: Turn reports into emoji console lines and write JSON / CSV / JSONL
# Functions: configure_logging, write_text_atomic, write_json, write_csv,
#            write_jsonl, format_check, format_report, format_failure,
#            format_bounds_row, echo_lines
# ═══════════════════════════════════════════════════════════════════════════════

# ────────────────────────────────────────────────────────────────────────────────
# 📦 IMPORTS
# ────────────────────────────────────────────────────────────────────────────────
import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import typer


# ┌─────────────────────────────────────────────────────────────────────────────┐
# 🪵 FUNCTION: configure_logging
# └─────────────────────────────────────────────────────────────────────────────┘
# Purpose: Route library loggers to stderr; -v enables debug iteration lines
# ────────────────────────────────────────────────────────────────────────────────
def configure_logging(verbose: bool = False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


# ┌─────────────────────────────────────────────────────────────────────────────┐
# 💾 FUNCTION: write_text_atomic
# └─────────────────────────────────────────────────────────────────────────────┘
# Purpose: Write through a temp file in the target directory, then os.replace
# Parameters:
#   path: Destination file (parent directories are created)
#   text: Full file content
# Returns: The destination path
# ────────────────────────────────────────────────────────────────────────────────
def write_text_atomic(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _json_text(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path, payload: Any) -> Path:
    return write_text_atomic(path, _json_text(payload))


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# 📄 FUNCTION: write_csv
# └─────────────────────────────────────────────────────────────────────────────┘
# Purpose: Header row from the first row's keys, repr-exact floats
# ────────────────────────────────────────────────────────────────────────────────
def write_csv(path: Path, rows: Sequence[Dict[str, Any]], columns: Sequence[str] = ()) -> Path:
    columns = list(columns) or (list(rows[0].keys()) if rows else [])
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return write_text_atomic(path, buffer.getvalue())


def write_jsonl(path: Path, entries: Iterable[Dict[str, Any]]) -> Path:
    text = "".join(json.dumps(e, sort_keys=True) + "\n" for e in entries)
    return write_text_atomic(path, text)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# 🎨 FUNCTION: format_check
# └─────────────────────────────────────────────────────────────────────────────┘
# Purpose: One console line per report section
# Parameters:
#   section: dict from CheckReport.to_dict()
# Returns: Formatted line with a status emoji
# ────────────────────────────────────────────────────────────────────────────────
STATUS_ICONS = {"pass": "✅", "fail": "❌", "info": "ℹ️"}

HEADLINE_KEYS = (
    "max_core_eigenvalue",
    "margin",
    "lower_bound",
    "gap",
    "ceiling",
    "min_gap",
    "max_residual",
    "max_abs_residual",
    "min_residual",
    "order",
    "min_phi_second",
)


def format_check(section: Dict[str, Any]) -> str:
    status = section.get("status", "info")
    icon = STATUS_ICONS.get(status, "⚠️")
    details = ", ".join(
        f"{key}={section[key]:.6g}" for key in HEADLINE_KEYS if isinstance(section.get(key), (int, float)) and not isinstance(section.get(key), bool)
    )
    note = "" if section.get("counted", True) else " (evidence only)"
    return f"{icon} {section['name']}: {status}{note}" + (f" [{details}]" if details else "")


def format_report(report: Dict[str, Any]) -> List[str]:
    lines = []
    meta = report.get("meta", {})
    problem = meta.get("problem", {}).get("name", "?")
    where = meta.get("domain", {}).get("kind") or f"ball R={meta.get('R')}"
    lines.append(f"📋 Problem: {problem} on {where}")
    for hyp in report.get("hypotheses", []):
        lines.append(f"🔍 Hypothesis {hyp['name']}: {hyp['verdict']}")
    for name in sorted(report.get("sections", {})):
        lines.append(format_check(report["sections"][name]))
    if report.get("failure"):
        lines.extend(format_failure(report["failure"]))
    lines.append("✅ Overall: pass" if report.get("pass") else "❌ Overall: fail")
    return lines


def format_failure(failure: Dict[str, Any]) -> List[str]:
    lines = [f"❌ [SOLVER] {failure.get('kind')}: {failure.get('reason') or failure.get('message')}"]
    for key in ("lambda", "iteration", "residual_norm", "R"):
        if failure.get(key) is not None:
            lines.append(f"  {key}: {failure[key]}")
    return lines


def format_bounds_row(row: Dict[str, Any]) -> str:
    lorentz = f"{row['lorentz']:.10g}" if row.get("lorentz") is not None else "❌ outside validity region"
    return f"  α={row['alpha']:<12.6g} euclid={row['euclid']:<16.10g} lorentz={lorentz}"


def echo_lines(lines: Iterable[str]):
    for line in lines:
        typer.echo(line)
