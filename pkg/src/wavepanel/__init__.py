"""Panel econometrics and epidemic-wave tools for mask-usage / excess-mortality data."""

__version__ = "0.1.0"

from .ingest import (
    ANALYSIS_END,
    ANALYSIS_START,
    PanelDataset,
    ParseError,
    ValidationError,
    ConsistencyError,
    load_panel,
    weekly_mask_average,
    drop_leading_zeros,
    write_panel,
)
from .waves import (
    PhasePartition,
    WaveInterval,
    WaveSet,
    normalize_deaths,
    pooled_curve,
    find_phase_boundaries,
    detect_wave,
    build_waveset,
)
from .indices import INDEX_NAMES, compute_indices, wave_mask_records
from .stats import (
    CorrelationResult,
    WilcoxonResult,
    pearson,
    spearman,
    bootstrap_ci,
    correlation,
    wilcoxon_one_sided,
    quartiles,
)
from .regress import RegressionFit, health_pc, ols_fit, reverse_causality_regressions, mask_index_regressions
from .twfe import LaggedPanel, TwfeFit, build_lagged_panel, twfe_fit, lag_sweep, residual_diagnostics
from .falsify import SynthSpec, FalsifyReport, synth_panel, spuriousness_experiment
from .demo import demo_panel
