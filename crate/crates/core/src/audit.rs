//! Empirical constants for the kernel and convolution estimates, nodal
//! supersolution certificates, and the smallness conditions on (c, C0).

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::KernelSpec;
use crate::profile::{critical_exponents, is_critical, SingularProfile, SupersolutionTemplate, TemplateForm};
use crate::quad::{heat_convolve_estimate, Field, GridSpec, PhiOperator, QuadSpec, SpaceTimeGrid, TemplateField};
use crate::solver::ProblemSpec;
use crate::special::sphere_area;

/// Inequalities with an audited constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditTarget {
    /// G(x−y,t−s)G(y−η,s) against G(x−η,t)G(y−(s/t)x−((t−s)/t)η, s(t−s)/t);
    /// an identity, so the constant is 1.
    KernelIdentity,
    /// G(y−(s/t)x−((t−s)/t)η, 2s(t−s)/t)·e^{−|x−y|²/(8(t−s))}
    /// ≤ C (G(y−η, 35s) + G(y−x, 35(t−s))).
    MidpointBound,
    /// ∫G(x−y,t)|y|^{−k}dy ≤ C|x|^{−k}, 0 < k < N.
    PowerSmoothing,
    /// ∫G(x−y,t)|y|^{−N}(log(e+|y|^{−1}))^{−k−1}χ₁ dy
    /// ≤ C|x|^{−N}(log(e+|x|^{−1}))^{−k}.
    LogSmoothing,
    /// ∫G(x−y,t)φ(y)dy ≤ C t^{−N/2} sup_ζ ∫_{B(ζ,√t)} φ, with φ = |y|^{−k}.
    LocalMass,
    /// ∫G(y,σ)|y|^{−k}dy ≤ C σ^{−k/2}.
    WeightSmoothing,
    /// G_θ(x−y,t−s)G_θ(y−η,s) ≤ C G_θ(x−η,t)(G_θ(y−η,s) + G_θ(y−x,t−s)).
    ProductInequality,
}

impl AuditTarget {
    pub const ALL: [AuditTarget; 7] = [
        AuditTarget::KernelIdentity,
        AuditTarget::MidpointBound,
        AuditTarget::PowerSmoothing,
        AuditTarget::LogSmoothing,
        AuditTarget::LocalMass,
        AuditTarget::WeightSmoothing,
        AuditTarget::ProductInequality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuditTarget::KernelIdentity => "kernel_identity",
            AuditTarget::MidpointBound => "midpoint_bound",
            AuditTarget::PowerSmoothing => "power_smoothing",
            AuditTarget::LogSmoothing => "log_smoothing",
            AuditTarget::LocalMass => "local_mass",
            AuditTarget::WeightSmoothing => "weight_smoothing",
            AuditTarget::ProductInequality => "product_inequality",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::param(format!("unknown audit target '{s}'")))
    }

    /// Targets whose samples are (x, y, η, s, t) tuples rather than (x, t).
    fn is_tuple(self) -> bool {
        matches!(self, AuditTarget::KernelIdentity | AuditTarget::MidpointBound | AuditTarget::ProductInequality)
    }
}

/// What to sample. Scales (t, |x|) are log-uniform, directions uniform,
/// tuple coordinates uniform in [−coord_range, coord_range].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub samples: usize,
    pub dim: usize,
    /// Exponent k of the power and log targets.
    pub k: f64,
    /// Diffusion order for the product inequality.
    pub theta: f64,
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
    pub coord_range: f64,
    /// Range of s/t for tuple targets.
    pub s_fraction: (f64, f64),
    pub execution: Execution,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            samples: 1000,
            dim: 1,
            k: 0.5,
            theta: 1.0,
            t_range: (1e-3, 1e3),
            x_range: (1e-3, 1e3),
            coord_range: 5.0,
            s_fraction: (0.01, 0.99),
            execution: Execution::default(),
        }
    }
}

impl SampleSpec {
    pub fn with_samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_t(mut self, lo: f64, hi: f64) -> Self {
        self.t_range = (lo, hi);
        self
    }

    fn validate(&self, target: AuditTarget) -> Result<()> {
        if self.samples == 0 || !(1..=3).contains(&self.dim) {
            return Err(Error::param("audit needs at least one sample and N in {1, 2, 3}"));
        }
        let pos = |r: (f64, f64)| r.0 > 0.0 && r.1 >= r.0 && r.1.is_finite();
        if !pos(self.t_range) || !pos(self.x_range) {
            return Err(Error::param("sample ranges must be positive and ordered"));
        }
        if !(self.s_fraction.0 > 0.0 && self.s_fraction.1 < 1.0 && self.s_fraction.0 <= self.s_fraction.1) {
            return Err(Error::param("s/t range must lie inside (0, 1)"));
        }
        let n = self.dim as f64;
        match target {
            AuditTarget::PowerSmoothing | AuditTarget::LocalMass | AuditTarget::WeightSmoothing if !(self.k > 0.0 && self.k < n) => {
                Err(Error::param(format!("{} needs 0 < k < N", target.name())))
            }
            AuditTarget::LogSmoothing if !(self.k > 0.0) => Err(Error::param("log_smoothing needs k > 0")),
            AuditTarget::ProductInequality if !(self.theta > 0.0 && self.theta < 2.0) => {
                Err(Error::param("product_inequality needs a fractional order 0 < theta < 2"))
            }
            _ => Ok(()),
        }
    }
}

/// One sampled configuration; unused entries are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub eta: Vec<f64>,
    pub s: Option<f64>,
    pub t: f64,
}

/// Supremum of lhs/rhs over a seeded sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstant {
    pub target: AuditTarget,
    pub sample_size: usize,
    pub sup_ratio: f64,
    pub argmax: SamplePoint,
    pub seed: u64,
    pub sweep_metadata: SampleSpec,
}

fn log_uniform(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.0 == r.1 {
        return r.0;
    }
    (rng.random_range(r.0.ln()..r.1.ln())).exp()
}

fn direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

fn draw(target: AuditTarget, spec: &SampleSpec, rng: &mut ChaCha8Rng) -> SamplePoint {
    let n = spec.dim;
    if target.is_tuple() {
        let l = spec.coord_range;
        let mut pt = || (0..n).map(|_| rng.random_range(-l..=l)).collect::<Vec<f64>>();
        let (x, y, eta) = (pt(), pt(), pt());
        let t = log_uniform(rng, spec.t_range);
        let s = t * rng.random_range(spec.s_fraction.0..=spec.s_fraction.1);
        SamplePoint { x, y, eta, s: Some(s), t }
    } else {
        let t = log_uniform(rng, spec.t_range);
        let r = log_uniform(rng, spec.x_range);
        let x = direction(rng, n).into_iter().map(|v| v * r).collect();
        SamplePoint { x, y: Vec::new(), eta: Vec::new(), s: None, t }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

fn ln_gauss(n: usize, r: f64, t: f64) -> f64 {
    -0.5 * n as f64 * (4.0 * std::f64::consts::PI * t).ln() - r * r / (4.0 * t)
}

fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

struct Evaluator {
    target: AuditTarget,
    dim: usize,
    k: f64,
    kernel: KernelSpec,
    data: SingularProfile,
    quad: QuadSpec,
}

impl Evaluator {
    fn new(target: AuditTarget, spec: &SampleSpec) -> Result<Self> {
        let n = spec.dim;
        let origin = vec![0.0; n];
        let kernel = if target == AuditTarget::ProductInequality {
            KernelSpec::fractional_built(n, spec.theta)?
        } else {
            KernelSpec::gaussian(n)
        };
        let data = match target {
            AuditTarget::LogSmoothing => SingularProfile::logpower(n as f64, spec.k + 1.0, 1.0, &origin),
            _ => SingularProfile::power(spec.k.clamp(1e-9, n as f64 - 1e-9), 1.0, &origin),
        };
        let quad = QuadSpec { rel_tol: 1e-9, execution: Execution::Sequential, ..QuadSpec::default() };
        Ok(Evaluator { target, dim: n, k: spec.k, kernel, data, quad })
    }

    fn convolve(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(heat_convolve_estimate(&self.kernel, &self.data, x, t, &self.quad)?.value)
    }

    /// lhs/rhs at one sample.
    fn ratio(&self, pt: &SamplePoint) -> Result<f64> {
        let n = self.dim;
        let nf = n as f64;
        let r = dist(&pt.x, &vec![0.0; n]);
        let t = pt.t;
        Ok(match self.target {
            AuditTarget::KernelIdentity => {
                // Log form: both sides underflow together for small times.
                let s = pt.s.unwrap();
                let mid: Vec<f64> = (0..n).map(|i| pt.y[i] - (s / t) * pt.x[i] - ((t - s) / t) * pt.eta[i]).collect();
                let lhs = ln_gauss(n, dist(&pt.x, &pt.y), t - s) + ln_gauss(n, dist(&pt.y, &pt.eta), s);
                let rhs = ln_gauss(n, dist(&pt.x, &pt.eta), t) + ln_gauss(n, dist(&mid, &vec![0.0; n]), s * (t - s) / t);
                (lhs - rhs).exp()
            }
            AuditTarget::MidpointBound => {
                let s = pt.s.unwrap();
                let mid: Vec<f64> = (0..n).map(|i| pt.y[i] - (s / t) * pt.x[i] - ((t - s) / t) * pt.eta[i]).collect();
                let dxy = dist(&pt.x, &pt.y);
                let lhs = ln_gauss(n, dist(&mid, &vec![0.0; n]), 2.0 * s * (t - s) / t) - dxy * dxy / (8.0 * (t - s));
                let rhs = ln_add(ln_gauss(n, dist(&pt.y, &pt.eta), 35.0 * s), ln_gauss(n, dxy, 35.0 * (t - s)));
                (lhs - rhs).exp()
            }
            AuditTarget::ProductInequality => {
                let s = pt.s.unwrap();
                let g = |a: &[f64], b: &[f64], tt: f64| self.kernel.radial(dist(a, b), tt);
                let a = g(&pt.y, &pt.eta, s);
                let b = g(&pt.y, &pt.x, t - s);
                let lhs = g(&pt.x, &pt.y, t - s) * a;
                let rhs = g(&pt.x, &pt.eta, t) * (a + b);
                lhs / rhs
            }
            AuditTarget::PowerSmoothing => self.convolve(&pt.x, t)? * r.powf(self.k),
            AuditTarget::LogSmoothing => {
                let rhs = r.powf(-nf) * (std::f64::consts::E + 1.0 / r).ln().powf(-self.k);
                self.convolve(&pt.x, t)? / rhs
            }
            AuditTarget::LocalMass => {
                // φ = |y|^{−k} is radially decreasing, so the ball at the
                // origin carries the largest mass.
                let ball = sphere_area(n) * t.powf((nf - self.k) / 2.0) / (nf - self.k);
                self.convolve(&pt.x, t)? / (t.powf(-nf / 2.0) * ball)
            }
            AuditTarget::WeightSmoothing => self.convolve(&vec![0.0; n], t)? * t.powf(self.k / 2.0),
        })
    }
}

/// Sup of lhs/rhs for `target` over `spec.samples` seeded samples.
/// A non-finite ratio is an error carrying the offending sample.
pub fn audit_inequality(target: AuditTarget, spec: &SampleSpec, seed: u64) -> Result<EmpiricalConstant> {
    spec.validate(target)?;
    let ev = Evaluator::new(target, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<SamplePoint> = (0..spec.samples).map(|_| draw(target, spec, &mut rng)).collect();
    let ratios = spec.execution.map(points.len(), |i| ev.ratio(&points[i]));
    let mut best: Option<(f64, usize)> = None;
    for (i, r) in ratios.into_iter().enumerate() {
        let r = r?;
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Format(format!("{}: non-finite ratio {r} at {:?}", target.name(), points[i])));
        }
        if best.is_none_or(|(b, _)| r > b) {
            best = Some((r, i));
        }
    }
    let (sup_ratio, i) = best.expect("at least one sample");
    Ok(EmpiricalConstant {
        target,
        sample_size: spec.samples,
        sup_ratio,
        argmax: points[i].clone(),
        seed,
        sweep_metadata: spec.clone(),
    })
}

/// Sup ratios at fixed times; the spread max/min − 1 measures how far the
/// constant is from t-uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub target: AuditTarget,
    pub times: Vec<f64>,
    pub sup_ratios: Vec<f64>,
    pub spread: f64,
}

/// Run [`audit_inequality`] once per time in `times`, with the same seed.
pub fn time_bands(target: AuditTarget, spec: &SampleSpec, seed: u64, times: &[f64]) -> Result<BandReport> {
    if times.is_empty() {
        return Err(Error::param("need at least one time band"));
    }
    let mut sup = Vec::with_capacity(times.len());
    for &t in times {
        sup.push(audit_inequality(target, &spec.clone().with_t(t, t), seed)?.sup_ratio);
    }
    let hi = sup.iter().cloned().fold(f64::MIN, f64::max);
    let lo = sup.iter().cloned().fold(f64::MAX, f64::min);
    Ok(BandReport { target, times: times.to_vec(), sup_ratios: sup, spread: hi / lo - 1.0 })
}

/// Seven decades t = 10⁻³, …, 10³.
pub fn default_bands() -> Vec<f64> {
    (-3..=3).map(|j| 10f64.powi(j)).collect()
}

/// Certificate outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Certified,
    Marginal,
    Failed,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::Marginal => "marginal",
            Verdict::Failed => "failed",
        }
    }
}

/// Slack allowed above 1 for a certified verdict.
pub const CERTIFICATE_SLACK: f64 = 5e-3;
/// Allowed increase of max_ratio between refinement levels.
pub const TREND_TOLERANCE: f64 = 1e-3;
/// Refinement levels checked by [`verify_certificate`].
pub const CERTIFICATE_LEVELS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub levels: usize,
    pub outer: usize,
    pub time_nodes: usize,
    pub nodes: usize,
}

/// Nodal check of Φ[ū] ≤ ū.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub form: TemplateForm,
    pub c: f64,
    pub c0: f64,
    pub grids: Vec<GridSummary>,
    /// Sup over nodes of Φ[ū]/ū on the finest grid.
    pub max_ratio: f64,
    /// max_ratio per refinement level, coarse to fine.
    pub refinement_trend: Vec<f64>,
    /// (reduced coordinate, time) of the finest-grid maximum.
    pub argmax: (f64, f64),
    pub verdict: Verdict,
    /// Set when Φ[ū] itself diverged.
    pub divergence: Option<String>,
}

impl CertificateReport {
    /// Identifier used to tag solver runs and sweep rows.
    pub fn id(&self) -> String {
        format!("{}:c={}:c0={}", self.form.name(), self.c, self.c0)
    }

    pub fn trend_improving(&self) -> bool {
        self.refinement_trend.windows(2).all(|w| w[1] <= w[0] + TREND_TOLERANCE)
    }
}

/// Evaluate Φ[ū]/ū at every node of `grid` and [`CERTIFICATE_LEVELS`] − 1
/// refinements of it. Φ uses the problem with its data replaced by the
/// template's own datum c·weight·f + C0.
pub fn verify_certificate(template: &SupersolutionTemplate, problem: &ProblemSpec, grid: &GridSpec, q: &QuadSpec) -> Result<CertificateReport> {
    verify_certificate_levels(template, problem, grid, q, CERTIFICATE_LEVELS)
}

pub fn verify_certificate_levels(
    template: &SupersolutionTemplate,
    problem: &ProblemSpec,
    grid: &GridSpec,
    q: &QuadSpec,
    levels: usize,
) -> Result<CertificateReport> {
    if levels == 0 {
        return Err(Error::param("need at least one grid level"));
    }
    if template.dim != problem.kernel.dim || template.p != problem.p || template.gamma != problem.gamma {
        return Err(Error::param("template was built for a different problem"));
    }
    let problem = problem.with_data(template.data_profile());
    let mut report = CertificateReport {
        form: template.form,
        c: template.c,
        c0: template.c0,
        grids: Vec::new(),
        max_ratio: f64::INFINITY,
        refinement_trend: Vec::new(),
        argmax: (f64::NAN, f64::NAN),
        verdict: Verdict::Failed,
        divergence: None,
    };
    let mut spec = grid.clone();
    for _ in 0..levels {
        let g = Arc::new(SpaceTimeGrid::build(&problem, &spec)?);
        report.grids.push(GridSummary { levels: spec.levels, outer: spec.outer, time_nodes: spec.time_nodes, nodes: g.len() });
        let field = TemplateField::new(template, &problem.kernel, g.horizon)?;
        let op = PhiOperator::new(&problem, g.clone(), q)?;
        let out = match op.apply(&field) {
            Ok(o) => o,
            Err(e @ Error::Divergent { .. }) => {
                report.divergence = Some(e.to_string());
                return Ok(report);
            }
            Err(e) => return Err(e),
        };
        let (mut worst, mut at) = (0.0f64, (f64::NAN, f64::NAN));
        for (k, v) in out.values.iter().enumerate() {
            let (y, t) = g.node(k);
            let bound = field.value(y, t);
            let r = if bound > 0.0 { v / bound } else if *v > 0.0 { f64::INFINITY } else { 0.0 };
            if r > worst || at.0.is_nan() {
                worst = r;
                at = (y, t);
            }
        }
        report.refinement_trend.push(worst);
        report.max_ratio = worst;
        report.argmax = at;
        spec = spec.refined();
    }
    let ok = report.max_ratio <= 1.0 + CERTIFICATE_SLACK;
    report.verdict = if ok && report.trend_improving() {
        Verdict::Certified
    } else if ok || report.max_ratio <= 1.0 + 10.0 * CERTIFICATE_SLACK {
        Verdict::Marginal
    } else {
        Verdict::Failed
    };
    Ok(report)
}

/// Which existence statement the smallness bounds come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Singularity at z ≠ 0, Laplacian.
    OffOrigin,
    /// Singularity anywhere (the bounds do not depend on z), Laplacian.
    Origin,
    FractionalOffOrigin,
    FractionalOrigin,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "off_origin" => Regime::OffOrigin,
            "origin" => Regime::Origin,
            "fractional_off_origin" => Regime::FractionalOffOrigin,
            "fractional_origin" => Regime::FractionalOrigin,
            _ => return Err(Error::param(format!("unknown regime '{s}'"))),
        })
    }

    fn fractional(self) -> bool {
        matches!(self, Regime::FractionalOffOrigin | Regime::FractionalOrigin)
    }
}

/// Inputs of [`smallness_conditions`]; `c_star` and `big_c_star` are
/// placeholders, since the existence constants carry no known values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessInput {
    pub regime: Regime,
    pub dim: usize,
    pub p: f64,
    pub gamma: f64,
    pub theta: f64,
    pub horizon: f64,
    pub z: Vec<f64>,
    pub c_star: f64,
    pub big_c_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallnessBounds {
    pub c_max: f64,
    pub c0_max: f64,
}

/// Largest (c, C0) admitted by the existence statement for `input.regime`.
pub fn smallness_conditions(input: &SmallnessInput) -> Result<SmallnessBounds> {
    let SmallnessInput { regime, dim, p, gamma, theta, horizon: t, c_star, big_c_star, .. } = *input;
    if regime.fractional() != (theta < 2.0) || !(theta > 0.0 && theta <= 2.0) {
        return Err(Error::param("regime and theta disagree (fractional regimes need 0 < theta < 2, the others theta = 2)"));
    }
    if matches!(regime, Regime::OffOrigin | Regime::FractionalOffOrigin) && input.z.iter().all(|v| *v == 0.0) {
        return Err(Error::param("off-origin regime needs z != 0"));
    }
    if !(p > 1.0) || !(t > 0.0 && t.is_finite()) || !(c_star > 0.0 && big_c_star > 0.0) {
        return Err(Error::param("need p > 1, finite T > 0 and positive placeholder constants"));
    }
    let ce = critical_exponents(dim, gamma, theta)?;
    let nf = dim as f64;
    let inv = -1.0 / (p - 1.0);
    let c0_max = big_c_star * t.powf(-(theta - gamma) / (theta * (p - 1.0)));
    let fujita_factor = t.powf(-nf * (ce.p_f - p) / (theta * (p - 1.0)));
    let c_max = match regime {
        Regime::OffOrigin | Regime::FractionalOffOrigin => {
            if is_critical(p, ce.p_f) {
                c_star * (1.0 + t.powf(1.0 / theta) + t.powf(1.0 - gamma / theta)).powf(inv)
            } else if p < ce.p_f {
                c_star * fujita_factor * (1.0 + t.powf(1.0 - gamma / theta)).powf(inv)
            } else {
                c_star
            }
        }
        Regime::Origin | Regime::FractionalOrigin => {
            if is_critical(p, ce.p_gamma) {
                c_star * (1.0 + t.powf(1.0 / theta)).powf(inv)
            } else if p < ce.p_gamma {
                c_star * fujita_factor
            } else {
                c_star
            }
        }
    };
    Ok(SmallnessBounds { c_max, c0_max })
}

