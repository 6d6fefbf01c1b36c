"""Stablecoin T-bill market share and short-term Treasury yields.

Derive the regression panel from raw holdings/yield data, fit semi-log
time-trend and two-regime threshold models with a bootstrap linearity test,
and translate semi-elasticities into basis points and interest savings.
"""

from .analysis import (
    ImpactQuery,
    ImpactReport,
    SlopeProfile,
    annual_savings,
    bps_impact,
    counterfactual_yield,
    impact_report,
    render_regime_figure,
    render_table,
)
from .dataset import (
    DerivedPanel,
    Observation,
    PanelValidationError,
    derive_panel,
    ihs,
    load_panel,
    market_share,
    read_panel,
    residualize_issuance,
    summary_stats,
)
from .models import baseline_fits, linear_design
from .regress import (
    DesignMatrix,
    FitResult,
    RankDeficiencyError,
    fitted_value_ci,
    ols_fit,
    significance_stars,
)
from .simulate import SimulationConfig, simulate_panel
from .threshold import (
    RegimeError,
    ThresholdFit,
    ThresholdSpec,
    grid_search,
    lr_linearity_test,
    regime_design,
    threshold_fit,
)

__version__ = "0.1.0"
