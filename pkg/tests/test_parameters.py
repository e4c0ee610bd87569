from __future__ import annotations

import pytest

from src.bergman_geometry.parameters import DEFAULT_TOLERANCES, Tolerances, parallel_map, worker_count


def test_with_overrides_keeps_types() -> None:
    tol = DEFAULT_TOLERANCES.with_overrides({"ode_tol": "1e-8", "series_cap": "32"})
    assert tol.ode_tol == 1e-8
    assert tol.series_cap == 32 and isinstance(tol.series_cap, int)
    assert tol.newton_tol == DEFAULT_TOLERANCES.newton_tol
    assert DEFAULT_TOLERANCES.ode_tol == Tolerances().ode_tol
    with pytest.raises(KeyError):
        DEFAULT_TOLERANCES.with_overrides({"spline_tol": 1.0})


@pytest.mark.parametrize("raw, expected", [("", 1), ("4", 4), ("0", 1), ("many", 1)])
def test_worker_count(monkeypatch: pytest.MonkeyPatch, raw: str, expected: int) -> None:
    monkeypatch.setenv("BGEO_THREADS", raw)
    assert worker_count() == expected


def test_parallel_map_keeps_order(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("BGEO_THREADS", "4")
    def square(x: int) -> int:
        return x * x

    assert parallel_map(square, range(50)) == [x * x for x in range(50)]
    monkeypatch.delenv("BGEO_THREADS")
    assert parallel_map(square, [3, 1, 2]) == [9, 1, 4]
