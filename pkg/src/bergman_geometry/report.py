from __future__ import annotations

from pathlib import Path
from typing import List, Union, cast

import pandas as pd

from .verify import VerifyReport


def _as_df(obj: object) -> pd.DataFrame:
    """Verify check rows as a DataFrame; a lone Series becomes one column, anything else an empty table."""
    if isinstance(obj, pd.DataFrame):
        return obj
    if isinstance(obj, pd.Series):
        return obj.to_frame()
    return pd.DataFrame()


def _series_float(df: pd.DataFrame, col: str) -> pd.Series:
    if col in df.columns:
        raw = pd.to_numeric(df[col], errors="coerce")
        return cast(pd.Series, pd.Series(raw, index=df.index, dtype="float64"))
    return pd.Series([float("nan")] * len(df), index=df.index, dtype="float64")


def _fmt_num(x: float, digits: int = 3) -> str:
    try:
        v = float(x)
        if v != v:
            return "—"
        if v in (float("inf"), float("-inf")):
            return "∞" if v > 0 else "-∞"
        return f"{v:.{digits}e}"
    except (TypeError, ValueError):
        return "—"


def _to_markdown_table(df: pd.DataFrame, cols: List[str], n: int) -> str:
    existing: List[str] = [c for c in cols if c in df.columns]
    if not existing or df.empty:
        return "_(none)_"
    view = df.loc[:, existing].head(n)
    return view.to_markdown(index=False)


def _display(df: pd.DataFrame) -> pd.DataFrame:
    view = df.copy()
    for col in ("measured", "threshold"):
        view[col] = _series_float(view, col).map(lambda v: _fmt_num(float(v)))
    view["passed"] = view["passed"].map(lambda b: "yes" if bool(b) else "**no**")
    return view


def render_markdown(report: VerifyReport) -> str:
    df = _as_df(report.checks)
    lines: List[str] = []
    lines.append(f"# bgeo verify (seed {report.seed})\n")

    lines.append("## Summary\n")
    lines.append(f"- Suites: {', '.join(report.suites)}")
    lines.append(f"- Checks: **{len(df)}**, failed: **{len(report.failed)}**")
    lines.append(f"- Result: **{'PASS' if report.passed else 'FAIL'}**\n")

    if not df.empty:
        lines.append("## Per suite\n")
        per = df.groupby("suite", sort=False)["passed"].agg(["count", "sum"]).reset_index()
        per.columns = ["suite", "checks", "passed"]
        lines.append(per.to_markdown(index=False))
        lines.append("")

    failed = _as_df(report.failed)
    if not failed.empty:
        lines.append("## Failures\n")
        cols = ["suite", "name", "domain", "measured", "comparison", "threshold", "detail"]
        lines.append(_to_markdown_table(_display(failed), cols, n=len(failed)))
        lines.append("")

    info = _as_df(df[df["comparison"] == "info"]) if not df.empty else pd.DataFrame()
    if not info.empty:
        lines.append("## Informational\n")
        lines.append(_to_markdown_table(_display(info), ["suite", "name", "domain", "measured", "detail"], n=len(info)))
        lines.append("")

    lines.append("## All checks\n")
    cols = ["suite", "name", "domain", "measured", "comparison", "threshold", "passed"]
    lines.append(_to_markdown_table(_display(df) if not df.empty else df, cols, n=len(df)))
    return "\n".join(lines).strip() + "\n"


def write_verify_report(report: VerifyReport, path: Union[str, Path]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_markdown(report), encoding="utf-8")
    return out
