"""Security conditions, acceptance intervals and efficiency for symmetric 1x1 states."""

from .closed_forms import (
    ATTACKS,
    CoherentInsecureError,
    EveConditionalState,
    EveIngredients,
    PPTStateError,
    SecurityReport,
    StdSymmetricState,
    accept_interval,
    alpha,
    anticoincidence_prob,
    beta,
    coincidence_prob,
    error_odds,
    error_rate,
    eve_conditional,
    eve_ingredients,
    eve_overlap,
    positivity_violations,
    security_lhs,
    standard_form_cm,
    unit_interval,
    xx_marginal,
)
from .efficiency import (
    EfficiencyEstimate,
    QuadratureError,
    QuadSpec,
    efficiency,
    efficiency_mc,
    folded_integrand,
)
from .sweep import GridSpec, SweepRecord, SweepResult, sweep, write_csv, CSV_HEADER
