//! Monotone Picard iteration for the mild formulation.

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::profile::{SingularProfile, TermKind};
use crate::quad::{DiscreteField, Field, Geometry, PhiOperator, QuadSpec, SpaceTimeGrid};

/// Horizon used when the problem asks for T = ∞.
pub const INFINITE_HORIZON: f64 = 1e3;

/// One instance of `∂t u + (−Δ)^{θ/2} u = |x|^{−γ} u^p`, `u(0) = u0`, on (0, T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kernel: KernelSpec,
    pub p: f64,
    pub gamma: f64,
    pub u0: SingularProfile,
    /// T; `f64::INFINITY` requests a global run (see [`INFINITE_HORIZON`]).
    #[serde(serialize_with = "ser_horizon", deserialize_with = "de_horizon", alias = "T")]
    pub horizon: f64,
    /// Factor in front of the nonlinear term; 0 gives the linear problem.
    #[serde(default = "one")]
    pub coefficient: f64,
}

fn one() -> f64 {
    1.0
}

pub(crate) fn ser_horizon<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

pub(crate) fn de_horizon<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum H {
        Num(f64),
        Text(String),
    }
    match H::deserialize(d)? {
        H::Num(v) => Ok(v),
        H::Text(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") => Ok(f64::INFINITY),
        H::Text(s) => Err(serde::de::Error::custom(format!("bad horizon '{s}'"))),
    }
}

impl ProblemSpec {
    pub fn new(kernel: KernelSpec, p: f64, gamma: f64, u0: SingularProfile, horizon: f64) -> Self {
        ProblemSpec { kernel, p, gamma, u0, horizon, coefficient: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        let n = self.kernel.dim as f64;
        let theta = self.kernel.theta();
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::param(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.gamma > 0.0 && self.gamma < theta.min(n)) {
            return Err(Error::param(format!("gamma must lie in (0, min(theta, N)) = (0, {}), got {}", theta.min(n), self.gamma)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::param("horizon must be positive"));
        }
        if !(self.coefficient >= 0.0) || !self.coefficient.is_finite() {
            return Err(Error::param("nonlinear coefficient must be finite and nonnegative"));
        }
        self.u0.validate(self.kernel.dim)
    }

    /// T, with ∞ replaced by [`INFINITE_HORIZON`].
    pub fn effective_horizon(&self) -> f64 {
        if self.horizon.is_finite() {
            self.horizon
        } else {
            INFINITE_HORIZON
        }
    }

    pub fn with_data(&self, u0: SingularProfile) -> Self {
        ProblemSpec { u0, ..self.clone() }
    }
}

/// Outcome class of a Picard run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Converged,
    Diverging,
    Inconclusive,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Converged => "converged",
            Classification::Diverging => "diverging",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

/// Why a run was classified as diverging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "signature", rename_all = "snake_case")]
pub enum DivergenceSignature {
    /// Non-integrable Duhamel source near s = 0 at time `at`.
    Duhamel { at: f64, ratio: f64 },
    SupRatioCap { sup_ratio: f64 },
    /// Successive sup-ratio increments grew by at least the growth factor
    /// this many times in a row.
    Growth { factors: Vec<f64> },
}

/// Divergence heuristics and iteration limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub conv_tol: f64,
    pub sup_ratio_cap: f64,
    pub growth_factor: f64,
    pub growth_window: usize,
    /// Keep every iterate (otherwise only the last two).
    pub retain_iterates: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 40,
            conv_tol: 1e-5,
            sup_ratio_cap: 1e6,
            growth_factor: 2.0,
            growth_window: 3,
            retain_iterates: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.conv_tol > 0.0) || !(self.sup_ratio_cap > 1.0) || !(self.growth_factor > 1.0) || self.growth_window == 0 {
            return Err(Error::param("solver options need conv_tol > 0, sup_ratio_cap > 1, growth_factor > 1, growth_window >= 1"));
        }
        Ok(())
    }
}

/// Result of [`picard_solve`]. The fields are not serialized; the scalar
/// histories are.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub classification: Classification,
    /// Φ applications performed.
    pub iterations: usize,
    /// max u⁽ⁿ⁾/E over nodes, for n = 0, 1, ...
    pub sup_ratios: Vec<f64>,
    /// max |u⁽ⁿ⁺¹⁾ − u⁽ⁿ⁾|/(1 + u⁽ⁿ⁾) over nodes, one entry per step.
    pub residuals: Vec<f64>,
    /// max (u⁽ⁿ⁾ − u⁽ⁿ⁺¹⁾)₊/E over nodes and steps.
    pub monotone_violation: f64,
    /// max |Φ[u] − u|/E over nodes for the returned field (converged runs).
    pub fixed_point_residual: Option<f64>,
    pub divergence: Option<DivergenceSignature>,
    /// Largest level ratio toward s = 0 seen in any Φ application.
    pub max_decay_ratio: f64,
    /// Identifier of a certificate known to dominate the iterates.
    pub certificate: Option<String>,
    pub nodes: usize,
    #[serde(skip)]
    pub field: Option<DiscreteField>,
    #[serde(skip)]
    pub iterates: Vec<DiscreteField>,
}

impl SolveReport {
    pub fn final_sup_ratio(&self) -> f64 {
        self.sup_ratios.last().copied().unwrap_or(0.0)
    }
}

/// max (a − b)₊/E over nodes, i.e. in ratio units.
fn decrease(a: &DiscreteField, b: &DiscreteField) -> f64 {
    a.ratios.iter().zip(&b.ratios).map(|(x, y)| (x - y).max(0.0)).fold(0.0, f64::max)
}

fn step_residual(prev: &[f64], next: &[f64]) -> f64 {
    prev.iter().zip(next).map(|(a, b)| (b - a).abs() / (1.0 + a)).fold(0.0, f64::max)
}

/// Monotone Picard iteration u⁽⁰⁾ = heat term, u⁽ⁿ⁺¹⁾ = Φ[u⁽ⁿ⁾] on `grid`.
pub fn picard_solve(problem: &ProblemSpec, grid: Arc<SpaceTimeGrid>, q: &QuadSpec, max_iter: usize, conv_tol: f64) -> Result<SolveReport> {
    let opts = SolverOptions { max_iter, conv_tol, ..SolverOptions::default() };
    picard_solve_with(problem, grid, q, &opts)
}

pub fn picard_solve_with(problem: &ProblemSpec, grid: Arc<SpaceTimeGrid>, q: &QuadSpec, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let op = PhiOperator::new(problem, grid.clone(), q)?;
    let mut u = op.initial()?;
    let mut values = op.heat.clone();
    let mut report = SolveReport {
        classification: Classification::Inconclusive,
        iterations: 0,
        sup_ratios: vec![u.sup_ratio()],
        residuals: Vec::new(),
        monotone_violation: 0.0,
        fixed_point_residual: None,
        divergence: None,
        max_decay_ratio: 0.0,
        certificate: None,
        nodes: grid.len(),
        field: None,
        iterates: Vec::new(),
    };
    if opts.retain_iterates {
        report.iterates.push(u.clone());
    }
    if values.iter().all(|v| *v == 0.0) {
        // Φ[0] = 0 exactly when the data vanish.
        report.classification = Classification::Converged;
        report.fixed_point_residual = Some(0.0);
        report.field = Some(u);
        return Ok(report);
    }
    let mut increments: Vec<f64> = Vec::new();
    while report.iterations < opts.max_iter {
        let out = match op.apply(&u) {
            Ok(o) => o,
            Err(Error::Divergent { at, ratio }) => {
                report.iterations += 1;
                report.classification = Classification::Diverging;
                report.divergence = Some(DivergenceSignature::Duhamel { at, ratio });
                break;
            }
            Err(e) => return Err(e),
        };
        report.iterations += 1;
        report.max_decay_ratio = report.max_decay_ratio.max(out.max_decay_ratio);
        let res = step_residual(&values, &out.values);
        report.residuals.push(res);
        report.monotone_violation = report.monotone_violation.max(decrease(&u, &out.field));
        let sup = out.field.sup_ratio();
        increments.push(sup - report.sup_ratios[report.sup_ratios.len() - 1]);
        report.sup_ratios.push(sup);
        u = out.field;
        values = out.values;
        if opts.retain_iterates {
            report.iterates.push(u.clone());
        }
        if res < opts.conv_tol {
            report.classification = Classification::Converged;
            break;
        }
        if sup > opts.sup_ratio_cap {
            report.classification = Classification::Diverging;
            report.divergence = Some(DivergenceSignature::SupRatioCap { sup_ratio: sup });
            break;
        }
        let w = opts.growth_window;
        if increments.len() > w {
            let tail = &increments[increments.len() - w - 1..];
            let factors: Vec<f64> = tail.windows(2).map(|d| if d[0] > 0.0 { d[1] / d[0] } else { 0.0 }).collect();
            if factors.iter().all(|g| *g >= opts.growth_factor) {
                report.classification = Classification::Diverging;
                report.divergence = Some(DivergenceSignature::Growth { factors });
                break;
            }
        }
    }
    if report.classification == Classification::Converged {
        report.fixed_point_residual = Some(match op.apply(&u) {
            Ok(o) => o.field.ratios.iter().zip(&u.ratios).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        });
    }
    report.field = Some(u);
    Ok(report)
}

/// max over consecutive iterates of (u⁽ⁿ⁾ − u⁽ⁿ⁺¹⁾)₊/E; `fields` defaults to
/// the iterates retained in the report.
pub fn verify_monotone(report: &SolveReport, fields: &[DiscreteField]) -> Result<f64> {
    let fields = if fields.is_empty() { &report.iterates[..] } else { fields };
    if fields.len() < 2 {
        return Err(Error::param("monotonicity check needs at least two iterates"));
    }
    Ok(fields.windows(2).map(|w| decrease(&w[0], &w[1])).fold(0.0, f64::max))
}

/// max over nodes of u/ū for a candidate dominating field ū.
pub fn domination_ratio<F: Field + ?Sized>(u: &DiscreteField, bound: &F) -> f64 {
    let vals = u.node_values();
    let mut worst: f64 = 0.0;
    for (k, v) in vals.iter().enumerate() {
        let (y, t) = u.grid.node(k);
        let b = bound.value(y, t);
        if *v > 0.0 {
            worst = worst.max(if b > 0.0 { v / b } else { f64::INFINITY });
        }
    }
    worst
}

/// Exponent a of pure power data c|x|^{−a} centered at the origin.
fn origin_power(problem: &ProblemSpec) -> Result<f64> {
    let terms: Vec<_> = problem.u0.terms.iter().filter(|t| t.amplitude > 0.0).collect();
    match terms.as_slice() {
        [t] if t.center.iter().all(|c| *c == 0.0) => match t.kind {
            TermKind::Power { a } => Ok(a),
            _ => Err(Error::param("scaling check needs power data")),
        },
        _ => Err(Error::param("scaling check needs a single power term centered at the origin")),
    }
}

/// max relative mismatch between u(x, t) and λ^a u(λx, λ^θ t) over the nodes
/// for which (λx, λ^θ t) still lies in the grid, where a is the data
/// exponent. Zero for λ = 1; small when the data are scale invariant.
pub fn scaling_check(problem: &ProblemSpec, u: &DiscreteField, lambda: f64) -> Result<f64> {
    if !(0.5..=2.0).contains(&lambda) {
        return Err(Error::param("lambda must lie in [0.5, 2]"));
    }
    let a = origin_power(problem)?;
    let theta = problem.kernel.theta();
    let g = &u.grid;
    let (tmax, xmax) = (g.time[g.nt() - 1], g.space.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let (tmin, xmin) = (g.time[0], g.space.iter().filter(|v| **v != 0.0).fold(f64::INFINITY, |m, v| m.min(v.abs())));
    let lt = lambda.powf(theta);
    let vals = u.node_values();
    let mut worst: f64 = 0.0;
    for (k, v) in vals.iter().enumerate() {
        let (y, t) = g.node(k);
        let (ys, ts) = (lambda * y, lt * t);
        let inside = ts <= tmax * (1.0 + 1e-12) && ts >= tmin * (1.0 - 1e-12) && ys.abs() <= xmax && ys.abs() >= xmin * (1.0 - 1e-12);
        if !inside || !(*v > 0.0) {
            continue;
        }
        if g.geometry == Geometry::Line && y == 0.0 {
            continue;
        }
        let w = lambda.powf(a) * u.value(ys, ts);
        worst = worst.max((w - v).abs() / v);
    }
    Ok(worst)
}
