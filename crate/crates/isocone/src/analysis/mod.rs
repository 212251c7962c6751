//! Supporting lemmas checked numerically: a quantitative AM-GM bound,
//! one-dimensional stability and polar slicing, translation diagnostics,
//! and the Cheeger / removal toolkit.

mod amgm;
mod cheeger;
mod interval;
mod translation;

pub use amgm::{quantitative_amgm_check, sample_amgm_input, AmgmReport};
pub use cheeger::{
    cheeger_1d, cheeger_2d, cheeger_ratio_1d, k_of_d, psi, psi_k, removal_lemma_check, trace_poincare_check_1d,
    Cheeger1d, Cheeger2d, FmpConstants, RemovalReport, StepFunction, TracePoincareReport, MAX_CHEEGER_CELLS,
    MAX_CHEEGER_GRID, MAX_CHEEGER_INTERVALS,
};
pub use interval::{
    exhaustive_stability_max, one_dim_stability_check, polar_slices, shift_lower_bound_check, volume_from_slices,
    FamilyMax, IntervalSet, PiecewiseLinear, StabilityReport, MAX_INTERVALS,
};
pub use translation::{
    ball_volume_growth, shifted_weight_separation, translated_ball_control_check, ControlReport, SeparationReport,
};
