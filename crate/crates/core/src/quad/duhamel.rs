//! Duhamel integral ∫₀ᵗ∫ G(x−y, t−s)|y|^{−γ} u(y,s)^p dy ds and the map Φ.
//!
//! The workhorse is a deterministic composite rule whose nodes and weights
//! depend only on (x, t), the kernel, the field's centers and breakpoints,
//! never on the field values. Φ built on it is therefore exactly monotone.
//! Time is cut into dyadic levels toward s = 0 and toward s = t; the level
//! sums are extrapolated geometrically past the deepest level, and a level
//! ratio near or above 1 at s → 0 is the divergence signature.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrate::gauss_legendre;
use crate::kernel::KernelSpec;
use crate::solver::ProblemSpec;
use crate::special::sphere_area;

use super::convolve::heat_convolve_estimate;
use super::envelope::Envelope;
use super::field::{DiscreteField, Field};
use super::grid::{Geometry, SpaceTimeGrid};
use super::QuadSpec;

const MULT: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Level ratio toward s = 0 at or above which the integral is declared
/// divergent.
pub const DIVERGENCE_RATIO: f64 = 0.999;
/// Partial sums above this are declared divergent.
pub const BLOWUP_SUM: f64 = 1e30;
/// Deepest refinement tried by the adaptive [`duhamel`].
pub const MAX_RULE_LEVEL: usize = 5;

/// Parameters of the composite rule at one refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleLevel {
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Dyadic time levels toward s = 0 and toward s = t.
    pub levels_start: usize,
    pub levels_end: usize,
    /// Multiplier (≤ 1) on the maximal spatial panel length.
    pub refine: f64,
}

impl RuleLevel {
    pub fn new(level: usize) -> Self {
        RuleLevel {
            order: 4 + level,
            levels_start: 24 + 4 * level,
            levels_end: 16 + 2 * level,
            refine: 1.0 / (1.0 + level as f64),
        }
    }
}

/// Result of one composite-rule evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuhamelValue {
    pub value: f64,
    /// Ratio of the two deepest level sums toward s = 0.
    pub decay_ratio: f64,
    pub divergent: bool,
}

struct Ctx<'a> {
    kernel: &'a KernelSpec,
    geometry: Geometry,
    p: f64,
    /// Exponent of the radial weight: −γ on the line, N−1−γ radially.
    weight_exp: f64,
    area: f64,
    gaussian: bool,
}

#[derive(Default)]
struct Scratch {
    pts: Vec<f64>,
    stack: Vec<(f64, f64)>,
    panels: Vec<(f64, f64)>,
    ys: Vec<f64>,
    ws: Vec<f64>,
    /// ln of the Hardy weight where not absorbed by a substitution.
    lw: Vec<f64>,
    vals: Vec<f64>,
}

#[inline]
fn dist(c: f64, a: f64, b: f64) -> f64 {
    if c < a {
        a - c
    } else if c > b {
        c - b
    } else {
        0.0
    }
}

impl Ctx<'_> {
    fn new<'a>(kernel: &'a KernelSpec, gamma: f64, p: f64, geometry: Geometry) -> Ctx<'a> {
        let (weight_exp, area) = match geometry {
            Geometry::Line => (-gamma, 1.0),
            Geometry::Radial => (kernel.dim as f64 - 1.0 - gamma, sphere_area(kernel.dim)),
        };
        Ctx { kernel, geometry, p, weight_exp, area, gaussian: kernel.is_gaussian() }
    }

    /// ∫ K(x, y, τ) w(y) u(y, s)^p dy over the reduced coordinate.
    fn inner<F: Field + ?Sized>(&self, field: &F, x: f64, tau: f64, s: f64, rule: &RuleLevel, sc: &mut Scratch) -> f64 {
        let lt = self.kernel.scale(tau);
        let ls = self.kernel.scale(s);
        let centers = field.centers();
        let radial = self.geometry == Geometry::Radial;
        let pts = &mut sc.pts;
        pts.clear();
        pts.push(x);
        for m in MULT {
            pts.push(x + m * lt);
            pts.push(x - m * lt);
        }
        pts.push(0.0);
        for &c in centers {
            pts.push(c);
            for m in MULT {
                pts.push(c + m * ls);
                pts.push(c - m * ls);
            }
        }
        let breaks = field.space_breaks();
        let from = breaks.partition_point(|b| *b < x - 4.0 * lt);
        for &b in &breaks[from..] {
            if b > x + 4.0 * lt {
                break;
            }
            pts.push(b);
        }
        let (mut lo, mut hi) = if self.gaussian {
            (x - 14.0 * lt, x + 14.0 * lt)
        } else {
            let w = 32.0 * lt;
            let (mut lo, mut hi) = (x - w, x + w);
            for &c in centers {
                lo = lo.min(c - 8.0 * ls);
                hi = hi.max(c + 8.0 * ls);
            }
            (lo.min(-w), hi.max(w))
        };
        if radial {
            lo = lo.max(0.0);
            hi = hi.max(lo);
        }
        pts.retain(|v| *v >= lo && *v <= hi);
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(b.abs()));

        let maxlen = |a: f64, b: f64| -> f64 {
            let mut m = if self.gaussian { lt } else { lt.max(0.5 * dist(x, a, b)) };
            for &c in centers {
                m = m.min((0.5 * ls).max(0.5 * dist(c, a, b)));
            }
            if a != 0.0 && b != 0.0 {
                m = m.min(0.5 * dist(0.0, a, b));
            }
            m * rule.refine
        };
        sc.panels.clear();
        for w in pts.windows(2) {
            sc.stack.push((w[0], w[1]));
            while let Some((a, b)) = sc.stack.pop() {
                let len = b - a;
                if len > maxlen(a, b) && len > 1e-13 * (a.abs() + b.abs()) {
                    let m = 0.5 * (a + b);
                    sc.stack.push((a, m));
                    sc.stack.push((m, b));
                } else {
                    sc.panels.push((a, b));
                }
            }
        }

        sc.ys.clear();
        sc.ws.clear();
        sc.lw.clear();
        let gl = gauss_legendre(rule.order);
        let e = self.weight_exp;
        let e1 = e + 1.0;
        for &(a, b) in &sc.panels {
            if a == 0.0 || b == 0.0 {
                // y = ±L v^{1/e1} absorbs |y|^e.
                let (sign, len) = if a == 0.0 { (1.0, b) } else { (-1.0, -a) };
                let pre = len.powf(e1) / e1;
                for (xi, wi) in gl.nodes.iter().zip(&gl.weights) {
                    let v = 0.5 * (xi + 1.0);
                    sc.ys.push(sign * len * v.powf(1.0 / e1));
                    sc.ws.push(0.5 * wi * pre);
                    sc.lw.push(0.0);
                }
            } else {
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                for (xi, wi) in gl.nodes.iter().zip(&gl.weights) {
                    let y = c + h * xi;
                    sc.ys.push(y);
                    sc.ws.push(h * wi);
                    sc.lw.push(e * y.abs().ln());
                }
            }
        }
        if !self.gaussian {
            // Algebraic tails through y = edge ± L u/(1−u)^q.
            let q = (2.0 / self.kernel.theta()).max(1.0);
            let len = (16.0 * lt).max(hi.abs().max(lo.abs()));
            let sides: &[(f64, f64)] = if radial { &[(hi, 1.0)] } else { &[(hi, 1.0), (lo, -1.0)] };
            for &(edge, sign) in sides {
                for j in 0..12 {
                    let (ua, ub) = (1.0 - 0.5f64.powi(j), 1.0 - 0.5f64.powi(j + 1));
                    let (c, h) = (0.5 * (ua + ub), 0.5 * (ub - ua));
                    for (xi, wi) in gl.nodes.iter().zip(&gl.weights) {
                        let u = c + h * xi;
                        let v = 1.0 - u;
                        let y = edge + sign * len * u * v.powf(-q);
                        let dy = len * (v.powf(-q) + q * u * v.powf(-q - 1.0));
                        sc.ys.push(y);
                        sc.ws.push(h * wi * dy);
                        sc.lw.push(e * y.abs().ln());
                    }
                }
            }
        }
        // Kernel factor.
        if self.geometry == Geometry::Line && self.gaussian {
            let c1 = 1.0 / (4.0 * std::f64::consts::PI * tau).sqrt();
            let c2 = 1.0 / (4.0 * tau);
            for ((w, &y), &l) in sc.ws.iter_mut().zip(&sc.ys).zip(&sc.lw) {
                *w *= c1 * (l - (x - y) * (x - y) * c2).exp();
            }
        } else if self.geometry == Geometry::Line {
            for ((w, &y), &l) in sc.ws.iter_mut().zip(&sc.ys).zip(&sc.lw) {
                *w *= self.kernel.radial((x - y).abs(), tau) * l.exp();
            }
        } else {
            for ((w, &y), &l) in sc.ws.iter_mut().zip(&sc.ys).zip(&sc.lw) {
                *w *= self.area * self.kernel.sphere_average(x, y, tau) * l.exp();
            }
        }
        sc.vals.resize(sc.ys.len(), 0.0);
        field.fill(s, &sc.ys, &mut sc.vals);
        let mut sum = 0.0;
        for (w, v) in sc.ws.iter().zip(&sc.vals) {
            if *v > 0.0 && *w > 0.0 {
                sum += w * (self.p * v.ln()).exp();
            }
        }
        sum
    }

    /// Time integral over [lo, hi], split at field time breaks.
    fn time_panel<F: Field + ?Sized>(&self, field: &F, x: f64, t: f64, lo: f64, hi: f64, rule: &RuleLevel, sc: &mut Scratch) -> f64 {
        let tb = field.time_breaks();
        let from = tb.partition_point(|v| *v <= lo);
        let mut cuts = vec![lo];
        for &b in &tb[from..] {
            if b >= hi {
                break;
            }
            cuts.push(b);
        }
        cuts.push(hi);
        let gl = gauss_legendre(rule.order);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            if h <= 0.0 {
                continue;
            }
            for (xi, wi) in gl.nodes.iter().zip(&gl.weights) {
                let s = c + h * xi;
                total += h * wi * self.inner(field, x, t - s, s, rule, sc);
            }
        }
        total
    }

    fn evaluate<F: Field + ?Sized>(&self, field: &F, x: f64, t: f64, rule: &RuleLevel) -> DuhamelValue {
        let mut sc = Scratch::default();
        let k0 = rule.levels_start.max(3);
        let k1 = rule.levels_end.max(3);
        let mut total = 0.0;
        let blown = |v: f64| !v.is_finite() || v > BLOWUP_SUM;
        // Toward s = 0, deepest level last.
        let mut a_sums = Vec::with_capacity(k0);
        for k in 1..k0 {
            let (lo, hi) = (t * 0.5f64.powi(k as i32 + 1), t * 0.5f64.powi(k as i32));
            let v = self.time_panel(field, x, t, lo, hi, rule, &mut sc);
            a_sums.push(v);
            total += v;
            if blown(total) {
                return DuhamelValue { value: f64::INFINITY, decay_ratio: f64::INFINITY, divergent: true };
            }
        }
        let mut b_sums = Vec::with_capacity(k1);
        for k in 1..k1 {
            let (lo, hi) = (t - t * 0.5f64.powi(k as i32), t - t * 0.5f64.powi(k as i32 + 1));
            let v = self.time_panel(field, x, t, lo, hi, rule, &mut sc);
            b_sums.push(v);
            total += v;
        }
        let ratio = |s: &[f64]| -> f64 {
            let (a, b) = (s[s.len() - 2], s[s.len() - 1]);
            if a > 0.0 {
                b / a
            } else {
                0.0
            }
        };
        let ra = ratio(&a_sums);
        if ra >= DIVERGENCE_RATIO || !ra.is_finite() {
            return DuhamelValue { value: f64::INFINITY, decay_ratio: ra, divergent: true };
        }
        let last_a = a_sums[a_sums.len() - 1];
        if ra > 0.0 {
            total += last_a * ra / (1.0 - ra);
        }
        let rb = ratio(&b_sums).min(0.95);
        if rb > 0.0 {
            total += b_sums[b_sums.len() - 1] * rb / (1.0 - rb);
        }
        DuhamelValue { value: total, decay_ratio: ra, divergent: blown(total) }
    }
}

fn check_args(kernel: &KernelSpec, gamma: f64, p: f64, geometry: Geometry, t: f64) -> Result<()> {
    kernel.validate()?;
    let n = kernel.dim as f64;
    if !(gamma > 0.0 && gamma < kernel.theta().min(n)) {
        return Err(Error::param(format!("gamma must lie in (0, min(theta, N)), got {gamma}")));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::param("p must be positive"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("time must be positive"));
    }
    if (geometry == Geometry::Line) != (kernel.dim == 1) {
        return Err(Error::param("line fields need N = 1; radial fields need N >= 2"));
    }
    Ok(())
}

/// One evaluation of the composite rule at reduced coordinate `x`.
pub fn duhamel_rule<F: Field + ?Sized>(
    kernel: &KernelSpec,
    gamma: f64,
    p: f64,
    u: &F,
    x: f64,
    t: f64,
    rule: RuleLevel,
) -> Result<DuhamelValue> {
    check_args(kernel, gamma, p, u.geometry(), t)?;
    Ok(Ctx::new(kernel, gamma, p, u.geometry()).evaluate(u, x, t, &rule))
}

/// Duhamel value with an error estimate from successive rule levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuhamelEstimate {
    pub value: f64,
    pub error: f64,
    pub level: usize,
}

/// Adaptive Duhamel integral at the point `x`: rule levels are refined until
/// two successive values agree to `rel_tol`.
pub fn duhamel_estimate<F: Field + ?Sized>(
    kernel: &KernelSpec,
    gamma: f64,
    p: f64,
    u: &F,
    x: &[f64],
    t: f64,
    q: &QuadSpec,
) -> Result<DuhamelEstimate> {
    q.validate()?;
    check_args(kernel, gamma, p, u.geometry(), t)?;
    if x.len() != kernel.dim {
        return Err(Error::param(format!("point has dimension {}, kernel has {}", x.len(), kernel.dim)));
    }
    let xr = u.geometry().reduce(x);
    let ctx = Ctx::new(kernel, gamma, p, u.geometry());
    let mut prev: Option<f64> = None;
    let max_level = MAX_RULE_LEVEL.min(q.max_subdivisions / 200 + 1);
    for level in 0..=max_level {
        let v = ctx.evaluate(u, xr, t, &RuleLevel::new(level));
        if v.divergent {
            return Err(Error::Divergent { at: t, ratio: v.decay_ratio });
        }
        if let Some(pv) = prev {
            let err = (v.value - pv).abs();
            if err <= q.abs_floor.max(q.rel_tol * v.value.abs()) {
                return Ok(DuhamelEstimate { value: v.value, error: err, level });
            }
            if level == max_level {
                return Err(Error::Budget { value: v.value, error: err });
            }
        }
        prev = Some(v.value);
    }
    unreachable!("loop returns at the last level")
}

/// ∫₀ᵗ∫ G(x−y, t−s)|y|^{−γ} u(y,s)^p dy ds to `q.rel_tol`.
pub fn duhamel<F: Field + ?Sized>(kernel: &KernelSpec, gamma: f64, p: f64, u: &F, x: &[f64], t: f64, q: &QuadSpec) -> Result<f64> {
    duhamel_estimate(kernel, gamma, p, u, x, t, q).map(|e| e.value)
}

/// Φ on a fixed grid: cached heat term at the nodes plus the frozen
/// composite Duhamel rule.
#[derive(Debug, Clone)]
pub struct PhiOperator {
    pub problem: ProblemSpec,
    pub grid: Arc<SpaceTimeGrid>,
    pub envelope: Arc<Envelope>,
    /// Heat evolution of u0 at the nodes (time-major).
    pub heat: Vec<f64>,
    pub rule: RuleLevel,
    pub execution: Execution,
}

/// Output of one application of Φ.
#[derive(Debug, Clone)]
pub struct PhiOutcome {
    pub field: DiscreteField,
    pub values: Vec<f64>,
    /// Largest level ratio toward s = 0 over the nodes.
    pub max_decay_ratio: f64,
}

impl PhiOperator {
    /// Operator whose fields use the heat evolution of u0 as envelope.
    pub fn new(problem: &ProblemSpec, grid: Arc<SpaceTimeGrid>, q: &QuadSpec) -> Result<Self> {
        let env = Arc::new(Envelope::new(&problem.kernel, &problem.u0, grid.horizon)?);
        Self::with_envelope(problem, grid, env, q)
    }

    pub fn with_envelope(problem: &ProblemSpec, grid: Arc<SpaceTimeGrid>, envelope: Arc<Envelope>, q: &QuadSpec) -> Result<Self> {
        problem.validate()?;
        q.validate()?;
        let (geometry, centers) = Geometry::for_problem(problem)?;
        if geometry != grid.geometry || grid.dim != problem.kernel.dim || !centers.iter().all(|c| grid.centers.contains(c)) {
            return Err(Error::param("grid was not built for this problem"));
        }
        let est: Vec<Result<_>> = q.execution.map(grid.len(), |k| {
            let (i, j) = grid.index(k);
            heat_convolve_estimate(&problem.kernel, &problem.u0, &grid.point(i), grid.time[j], q)
        });
        let est = est.into_iter().collect::<Result<Vec<_>>>()?;
        // Far-tail nodes may miss the relative target; they pass when the
        // error is small against the largest value at the same time.
        let mut scale = vec![0.0f64; grid.nt()];
        for (k, e) in est.iter().enumerate() {
            let j = grid.index(k).1;
            scale[j] = scale[j].max(e.value);
        }
        let mut heat = Vec::with_capacity(est.len());
        for (k, e) in est.iter().enumerate() {
            let ok = e.converged || e.error <= q.rel_tol * scale[grid.index(k).1];
            if !ok || !e.value.is_finite() {
                return Err(Error::Budget { value: e.value, error: e.error });
            }
            heat.push(e.value);
        }
        Ok(PhiOperator {
            problem: problem.clone(),
            grid,
            envelope,
            heat,
            rule: RuleLevel::new(q.frozen_level()),
            execution: q.execution,
        })
    }

    /// u⁽⁰⁾: the heat term alone.
    pub fn initial(&self) -> Result<DiscreteField> {
        DiscreteField::from_values(self.grid.clone(), self.envelope.clone(), &self.heat)
    }

    pub fn apply<F: Field + ?Sized>(&self, u: &F) -> Result<PhiOutcome> {
        self.apply_with(u, self.rule)
    }

    /// Φ[u] at every node with an explicit rule level. A divergence
    /// signature at any node fails the whole application.
    pub fn apply_with<F: Field + ?Sized>(&self, u: &F, rule: RuleLevel) -> Result<PhiOutcome> {
        let pr = &self.problem;
        let d: Vec<DuhamelValue> = if pr.coefficient == 0.0 {
            vec![DuhamelValue { value: 0.0, decay_ratio: 0.0, divergent: false }; self.grid.len()]
        } else {
            check_args(&pr.kernel, pr.gamma, pr.p, u.geometry(), self.grid.time[0])?;
            let ctx = Ctx::new(&pr.kernel, pr.gamma, pr.p, u.geometry());
            self.execution.map(self.grid.len(), |k| {
                let (x, t) = self.grid.node(k);
                ctx.evaluate(u, x, t, &rule)
            })
        };
        let mut max_decay_ratio: f64 = 0.0;
        for (k, v) in d.iter().enumerate() {
            if v.divergent {
                return Err(Error::Divergent { at: self.grid.node(k).1, ratio: v.decay_ratio });
            }
            max_decay_ratio = max_decay_ratio.max(v.decay_ratio);
        }
        let values: Vec<f64> = self.heat.iter().zip(&d).map(|(h, v)| h + pr.coefficient * v.value).collect();
        let field = DiscreteField::from_values(self.grid.clone(), self.envelope.clone(), &values)?;
        Ok(PhiOutcome { field, values, max_decay_ratio })
    }
}

/// Φ[u] on u's grid, keeping u's envelope.
pub fn apply_phi(problem: &ProblemSpec, u: &DiscreteField, q: &QuadSpec) -> Result<DiscreteField> {
    PhiOperator::with_envelope(problem, u.grid.clone(), u.envelope.clone(), q)?.apply(u).map(|o| o.field)
}
