import numpy as np
import pandas as pd

from wavepanel.svg import Canvas, nice_ticks, phases_chart, residual_grid_chart, scatter_chart
from wavepanel.waves import PhasePartition


def test_canvas_is_deterministic_and_escaped():
    c = Canvas(10, 10)
    c.text(1, 2, "a<b & c")
    c.line(0, 0, 1.23456, -0.001, stroke_dasharray="2 2")
    s = c.render()
    assert "a&lt;b &amp; c" in s and 'x2="1.23"' in s and 'y2="0"' in s and 'stroke-dasharray="2 2"' in s
    assert s == c.render()


def test_nice_ticks():
    assert nice_ticks(0, 1) == [0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert nice_ticks(3, 3) == [3]


def test_charts_render():
    dates = pd.date_range("2020-02-04", periods=200)
    curve = pd.Series(np.sin(np.arange(200) / 20) + 1.5, index=dates)
    part = PhasePartition(dates[0], dates[-1], (dates[60], dates[130]))
    s = phases_chart(curve, part)
    assert s.count("<line") >= 2 and s.rstrip().endswith("</svg>")
    sc = scatter_chart([1, 2, 3], [3, np.nan, 1], "x", "y")
    assert sc.count("<circle") == 2
    grid = residual_grid_chart({f"C{i}": pd.Series(np.arange(5.0) - 2) for i in range(24)}, "t")
    assert grid.count("<polyline") == 24
