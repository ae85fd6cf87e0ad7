//! Sequence lemmas and empirical verification of convergence and
//! complexity statements on run histories.

mod axioms;
mod rates;
mod sequences;
mod thresholds;

pub use axioms::{reduction_check, verify_axioms, AxiomReport, Q_RED};
pub use rates::{
    complexity_from_series, fit_rate_loglog, least_squares_slope, rates_equals_complexity, Complexity,
    DEFAULT_WINDOW,
};
pub use sequences::{
    check_criterion, fit_rlinear, random_criterion_instance, CriterionInstance, rlinear_constants_from_criterion, rlinear_from_tailsum, rlinear_ratio,
    tail_sum_constant, tailsum_from_rlinear, verify_rlinear, CriterionConstants, RLinearFit, EXACT_SCAN,
};
pub use thresholds::{threshold_helpers, Thresholds};
