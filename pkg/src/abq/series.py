"""Versioned CSV persistence for diagnostics series.

Layout:

    # abq-series 1
    # meta {"kappa": 1.0, "nu": 1.0, ...}
    t,u_l2,theta_l2,...
    0.0,1.234,...

Floats are written with repr(), which round-trips exactly in both directions,
so identical runs produce byte-identical files and reading back reproduces
the in-memory values bit for bit.  Readers reject other schema versions and
name any missing column.  Writes go to a temporary file in the target
directory followed by an atomic rename.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Sequence, Union

from .monitor import DiagnosticsRecord

__all__ = ["SERIES_VERSION", "SchemaError", "series_columns", "write_series", "read_series"]

SERIES_VERSION = 1
_MAGIC = "# abq-series"
_META = "# meta "

# fixed column order; the variable theta_lq block is spliced in after theta_linf
_PRE_Q = ("t", "u_l2", "theta_l2", "theta_linf")
_POST_Q = (
    "u_h1", "theta_h1", "dyu_h1", "dytheta_h1", "dyu_l2", "dytheta_l2",
    "dxu_l2", "dxtheta_l2", "growth_ratio", "u2_linf", "dt_u_l2",
    "dt_theta_l2", "h1_residual", "f_local", "diss_xy", "tail_frac",
    "div_ratio",
)


class SchemaError(ValueError):
    """Raised for series files with the wrong version or missing columns."""


def _q_label(q: float) -> str:
    return f"theta_lq_{q:g}"


def series_columns(qset: Sequence[float]) -> list[str]:
    return [*_PRE_Q, *(_q_label(q) for q in sorted(qset)), *_POST_Q]


def _row(rec: DiagnosticsRecord, qset: Sequence[float]) -> str:
    vals = [rec.t, rec.u_l2, rec.theta_l2, rec.theta_linf]
    vals += [rec.theta_lq[q] for q in qset]
    vals += [
        rec.u_h1, rec.theta_h1, rec.dyu_h1, rec.dytheta_h1, rec.dyu_l2,
        rec.dytheta_l2, rec.dxu_l2, rec.dxtheta_l2, rec.growth_ratio,
        rec.u2_linf, rec.dt_u_l2, rec.dt_theta_l2, rec.h1_residual,
        rec.f_local, rec.diss_xy, rec.tail_frac, rec.div_ratio,
    ]
    return ",".join(repr(float(v)) for v in vals)


def write_series(path: Union[str, Path], series: Sequence[DiagnosticsRecord],
                 meta: dict[str, Any]) -> None:
    """Write a diagnostics series atomically."""
    if not series:
        raise ValueError("refusing to write an empty series")
    qset = sorted(series[0].theta_lq)
    path = Path(path)
    lines = [
        f"{_MAGIC} {SERIES_VERSION}",
        _META + json.dumps(meta, sort_keys=True, separators=(",", ":")),
        ",".join(series_columns(qset)),
    ]
    lines.extend(_row(rec, qset) for rec in series)
    payload = "\n".join(lines) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_series(path: Union[str, Path]) -> tuple[list[DiagnosticsRecord], dict[str, Any]]:
    """Read a series file; returns (records, meta)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith(_MAGIC):
        raise SchemaError(f"{path} is not a diagnostics series (missing magic line)")
    version_str = lines[0][len(_MAGIC):].strip()
    try:
        version = int(version_str)
    except ValueError:
        raise SchemaError(f"unreadable series version {version_str!r}") from None
    if version != SERIES_VERSION:
        raise SchemaError(
            f"unsupported series version {version} (this reader handles {SERIES_VERSION})"
        )
    if len(lines) < 3:
        raise SchemaError(f"{path} has no header")
    meta: dict[str, Any] = {}
    header_idx = 1
    if lines[1].startswith(_META):
        meta = json.loads(lines[1][len(_META):])
        header_idx = 2
    header = lines[header_idx].split(",")
    col = {name: i for i, name in enumerate(header)}

    q_cols = sorted(
        (float(name[len("theta_lq_"):]), name)
        for name in header
        if name.startswith("theta_lq_")
    )
    required = [c for c in series_columns([q for q, _ in q_cols]) if c]
    missing = [c for c in required if c not in col]
    if missing:
        raise SchemaError(f"series {path} is missing column(s): {', '.join(missing)}")

    records = []
    for lineno, line in enumerate(lines[header_idx + 1:], header_idx + 2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise SchemaError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}"
            )

        def get(name: str) -> float:
            return float(parts[col[name]])

        records.append(DiagnosticsRecord(
            t=get("t"),
            u_l2=get("u_l2"),
            theta_l2=get("theta_l2"),
            theta_linf=get("theta_linf"),
            theta_lq={q: float(parts[col[name]]) for q, name in q_cols},
            u_h1=get("u_h1"),
            theta_h1=get("theta_h1"),
            dyu_h1=get("dyu_h1"),
            dytheta_h1=get("dytheta_h1"),
            dyu_l2=get("dyu_l2"),
            dytheta_l2=get("dytheta_l2"),
            dxu_l2=get("dxu_l2"),
            dxtheta_l2=get("dxtheta_l2"),
            growth_ratio=get("growth_ratio"),
            u2_linf=get("u2_linf"),
            dt_u_l2=get("dt_u_l2"),
            dt_theta_l2=get("dt_theta_l2"),
            h1_residual=get("h1_residual"),
            f_local=get("f_local"),
            diss_xy=get("diss_xy"),
            tail_frac=get("tail_frac"),
            div_ratio=get("div_ratio"),
        ))
    return records, meta
