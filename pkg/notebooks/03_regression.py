"""Cross-country OLS of excess mortality on each mask index, with standardized CIs."""
from wavepanel import build_waveset, compute_indices, demo_panel, find_phase_boundaries, pooled_curve
from wavepanel import mask_index_regressions, weekly_mask_average

ds = weekly_mask_average(demo_panel(seed=7))
idx = compute_indices(ds, build_waveset(ds, find_phase_boundaries(pooled_curve(ds))))

# controls: vaccination rate, HDI and the first principal component of the two health covariates
table = mask_index_regressions(ds.covariates, idx)
print(table.round(4).to_string(index=False))
