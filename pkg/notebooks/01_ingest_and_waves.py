"""Load a panel, validate it and detect epidemic waves.

Runs on the synthetic demo panel so it works without the real data; point
``load_panel`` at your own daily/weekly/covariates CSVs to use those instead.
"""
import tempfile
from pathlib import Path

from wavepanel import build_waveset, demo_panel, find_phase_boundaries, load_panel, pooled_curve, write_panel
from wavepanel import weekly_mask_average

# round-trip through CSV so the loader's checks actually run
tmp = Path(tempfile.mkdtemp())
write_panel(demo_panel(seed=7), tmp)
ds = weekly_mask_average(load_panel(tmp / "daily.csv", tmp / "weekly.csv", tmp / "covariates.csv"))
print(f"{len(ds.countries)} countries, {ds.analysis_start.date()} .. {ds.analysis_end.date()}")

# pooled normalized death curve, split at its two deepest well-separated troughs
curve = pooled_curve(ds)
part = find_phase_boundaries(curve)
print("phase boundaries:", [str(b.date()) for b in part.boundaries])

waves = build_waveset(ds, part)
frame = waves.to_frame()
print(frame.head(6).to_string(index=False))
print("mean wave length per phase (days):")
print(frame.assign(days=frame["end"].sub(frame["start"]).dt.days + 1).groupby("phase")["days"].mean().round(1))
