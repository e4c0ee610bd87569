from __future__ import annotations

from pathlib import Path

import pandas as pd

from src.bergman_geometry.report import render_markdown, write_verify_report
from src.bergman_geometry.verify import VerifyReport

COLUMNS = ["suite", "name", "domain", "measured", "threshold", "comparison", "passed", "detail"]


def _report() -> VerifyReport:
    rows = [
        ["elliptic", "legendre_relation", "annulus(0.3)", 2e-15, 1e-10, "<", True, ""],
        ["gram", "disk_cap_5", "disk", 3e-3, float("inf"), "info", True, ""],
        ["zeros", "pole_probe_annulus_collides", "annulus(0.1)", float("nan"), 1.0, ">=", False, "Unreachable: boom"],
    ]
    return VerifyReport(seed=7, suites=("elliptic", "gram", "zeros"), checks=pd.DataFrame(rows, columns=COLUMNS))


def test_markdown_sections() -> None:
    text = render_markdown(_report())
    assert text.startswith("# bgeo verify (seed 7)")
    for heading in ("## Summary", "## Per suite", "## Failures", "## Informational", "## All checks"):
        assert heading in text
    assert "**FAIL**" in text
    assert "Unreachable: boom" in text
    assert "2.000e-15" in text


def test_passing_report_has_no_failure_section() -> None:
    rep = _report()
    ok = VerifyReport(seed=1, suites=("elliptic",), checks=rep.checks.iloc[:1].reset_index(drop=True))
    text = render_markdown(ok)
    assert "**PASS**" in text
    assert "## Failures" not in text


def test_write_creates_parents(tmp_path: Path) -> None:
    out = write_verify_report(_report(), tmp_path / "a" / "b" / "report.md")
    assert out.read_text(encoding="utf-8").endswith("\n")
