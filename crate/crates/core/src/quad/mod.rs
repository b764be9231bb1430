//! Heat convolutions, Duhamel integrals and the discrete fields the solver
//! iterates on.

mod convolve;
mod duhamel;
mod envelope;
mod field;
mod grid;
mod tables;
mod template_field;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrate::Tolerance;

pub use convolve::{heat_convolve, heat_convolve_estimate};
pub use duhamel::{
    apply_phi, duhamel, duhamel_estimate, duhamel_rule, DuhamelEstimate, DuhamelValue, PhiOperator, PhiOutcome, RuleLevel,
    BLOWUP_SUM, DIVERGENCE_RATIO, MAX_RULE_LEVEL,
};
pub use envelope::Envelope;
pub use field::{DiscreteField, Field, FnField};
pub use grid::{Geometry, GridSpec, SpaceTimeGrid};
pub use template_field::{eval_u, TemplateField};

/// Quadrature settings shared by convolutions, Duhamel integrals and Φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_subdivisions: usize,
    /// Extra points where integrands blow up; used as breakpoints.
    pub singular_points: Vec<Vec<f64>>,
    /// Level of the frozen Duhamel rule used by Φ; derived from `rel_tol`
    /// when absent.
    pub rule_level: Option<usize>,
    pub execution: Execution,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-7,
            abs_floor: 1e-30,
            max_subdivisions: 2000,
            singular_points: Vec::new(),
            rule_level: None,
            execution: Execution::default(),
        }
    }
}

impl QuadSpec {
    /// Defaults for Duhamel integrals (rel_tol 1e-5).
    pub fn duhamel_default() -> Self {
        QuadSpec { rel_tol: 1e-5, ..Self::default() }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Add a singular point unless already present.
    pub fn with_singular_point(mut self, p: &[f64]) -> Self {
        if !self.singular_points.iter().any(|v| v == p) {
            self.singular_points.push(p.to_vec());
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(Error::param("rel_tol must be positive"));
        }
        if !(self.abs_floor >= 0.0) {
            return Err(Error::param("abs_floor must be nonnegative"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::param("max_subdivisions must be positive"));
        }
        if self.singular_points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::param("singular points must be finite"));
        }
        if self.rule_level.is_some_and(|l| l > MAX_RULE_LEVEL) {
            return Err(Error::param(format!("rule_level must be at most {MAX_RULE_LEVEL}")));
        }
        Ok(())
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.rel_tol, self.abs_floor, self.max_subdivisions)
    }

    /// Level of the frozen Duhamel rule.
    pub fn frozen_level(&self) -> usize {
        self.rule_level.unwrap_or(match self.rel_tol {
            r if r >= 1e-5 => 0,
            r if r >= 1e-7 => 1,
            r if r >= 1e-9 => 2,
            _ => 3,
        })
    }
}
