"""Mask indices per country, their correlations and the paired rank tests."""
from wavepanel import (
    build_waveset, compute_indices, correlation, demo_panel, find_phase_boundaries,
    pooled_curve, quartiles, wave_mask_records, weekly_mask_average, wilcoxon_one_sided,
)
from wavepanel.indices import ratio_table

ds = weekly_mask_average(demo_panel(seed=7))
waves = build_waveset(ds, find_phase_boundaries(pooled_curve(ds)))
idx = compute_indices(ds, waves)
print(idx.round(2).head())

# Pearson with a basic bootstrap interval; fixed seed, so reruns are identical
r = correlation(idx["maskall"], idx["maskpeakwave"], reps=2000, seed=1)
print(f"maskall vs maskpeakwave: r={r.estimate:.3f} CI [{r.ci_low:.3f}, {r.ci_high:.3f}]")

rec = wave_mask_records(ds, waves).dropna(subset=["begin_avg", "peak_avg"])
w = wilcoxon_one_sided(rec["peak_avg"], rec["begin_avg"], "greater")
print(f"peak > begin: W={w.statistic:.1f} p={w.p_value:.3g} ({w.method})")

ratios = ratio_table(idx, wave_mask_records(ds, waves), ds)
for name, t in ratios.items():
    print(name, "quartiles", [round(q, 3) for q in quartiles(t["ratio"])])
