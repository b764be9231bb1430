//! Singular initial profiles, critical exponents, the weight ψ, the
//! auxiliary convex function H and the explicit supersolution templates.

mod aux_h;
mod exponents;
mod singular;
mod template;

pub use aux_h::{
    admissible_range, build_aux_h, inverse_bound_constant, min_second_difference, monotonicity, select_a_min,
    validation_grid, AuxiliaryH, CaseP, HCase, MonotonicityReport, GRID_LOG10, GRID_POINTS,
};
pub use exponents::{critical_exponents, is_critical, psi_weight, CriticalExponents, CRITICAL_TOL};
pub use singular::{eval_profile, SingularProfile, Term, TermKind};
pub use template::{base_power_exponent, make_template, SupersolutionTemplate, TemplateForm};
