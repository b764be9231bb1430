//! Experiment configuration, parameter sweeps, amplitude bracketing and
//! report files.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::{verify_certificate_levels, CertificateReport, Verdict};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::profile::{critical_exponents, is_critical, make_template, SingularProfile, TemplateForm, TermKind};
use crate::quad::{GridSpec, QuadSpec, SpaceTimeGrid};
use crate::solver::{de_horizon, picard_solve_with, ser_horizon, Classification, ProblemSpec, SolveReport, SolverOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Maximum number of swept axes in one run.
pub const MAX_AXES: usize = 3;

/// Shape of the initial datum of a problem family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Zero,
    Power,
    Logpower,
    Dirac,
}

/// A problem with every sweepable scalar given a base value. Unset
/// `exponent` / `log_power` select the optimal singularity for the case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySpec {
    pub dim: usize,
    /// 2 for the Laplacian.
    pub theta: f64,
    pub p: f64,
    pub gamma: f64,
    #[serde(serialize_with = "ser_horizon", deserialize_with = "de_horizon")]
    pub horizon: f64,
    pub data: DataKind,
    pub exponent: Option<f64>,
    pub log_power: Option<f64>,
    pub cutoff: f64,
    pub amplitude: f64,
    /// Distance of the data singularity from the origin, along the first axis.
    pub z: f64,
    pub c0: f64,
    pub coefficient: f64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec {
            dim: 1,
            theta: 2.0,
            p: 4.0,
            gamma: 0.5,
            horizon: 1.0,
            data: DataKind::Power,
            exponent: None,
            log_power: None,
            cutoff: 1.0,
            amplitude: 0.05,
            z: 0.0,
            c0: 0.0,
            coefficient: 1.0,
        }
    }
}

/// Values of the swept scalars for one row. `a` and `k` are resolved
/// (optimal values filled in) and absent when the datum does not use them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowParams {
    pub p: f64,
    pub gamma: f64,
    pub theta: f64,
    pub a: Option<f64>,
    pub k: Option<f64>,
    pub z: f64,
    pub c: f64,
}

impl FamilySpec {
    fn base_params(&self) -> RowParams {
        RowParams {
            p: self.p,
            gamma: self.gamma,
            theta: self.theta,
            a: self.exponent,
            k: self.log_power,
            z: self.z,
            c: self.amplitude,
        }
    }

    /// Fill in optimal exponents: θ/(p−1) off the origin and (θ−γ)/(p−1) at
    /// it; for log data a = N and k = N/θ + 1 or N/(θ−γ) + 1.
    fn resolve(&self, mut r: RowParams) -> RowParams {
        let n = self.dim as f64;
        let off = r.z != 0.0;
        match self.data {
            DataKind::Power => {
                r.a = Some(r.a.unwrap_or(if off { r.theta / (r.p - 1.0) } else { (r.theta - r.gamma) / (r.p - 1.0) }));
                r.k = None;
            }
            DataKind::Logpower => {
                r.a = Some(r.a.unwrap_or(n));
                r.k = Some(r.k.unwrap_or(if off { n / r.theta + 1.0 } else { n / (r.theta - r.gamma) + 1.0 }));
            }
            DataKind::Zero | DataKind::Dirac => {
                r.a = None;
                r.k = None;
            }
        }
        r
    }

    /// Problem for a resolved row. `kernels` caches fractional tables by θ.
    fn problem(&self, r: &RowParams, kernels: &mut HashMap<u64, KernelSpec>) -> Result<ProblemSpec> {
        let kernel = if r.theta == 2.0 {
            KernelSpec::gaussian(self.dim)
        } else if let Some(k) = kernels.get(&r.theta.to_bits()) {
            k.clone()
        } else {
            let k = KernelSpec::fractional_built(self.dim, r.theta)?;
            kernels.insert(r.theta.to_bits(), k.clone());
            k
        };
        let mut center = vec![0.0; self.dim];
        center[0] = r.z;
        let u0 = match self.data {
            DataKind::Zero => SingularProfile::zero(),
            DataKind::Power => SingularProfile::power(r.a.unwrap(), r.c, &center),
            DataKind::Logpower => SingularProfile::zero().with(
                TermKind::Logpower { a: r.a.unwrap(), k: r.k.unwrap(), cutoff: self.cutoff },
                r.c,
                &center,
            ),
            DataKind::Dirac => SingularProfile::dirac(r.c, &center),
        }
        .plus_constant(self.c0);
        let mut pr = ProblemSpec::new(kernel, r.p, r.gamma, u0, self.horizon);
        pr.coefficient = self.coefficient;
        pr.validate()?;
        Ok(pr)
    }

    /// The base problem (no axes applied).
    pub fn base_problem(&self) -> Result<ProblemSpec> {
        self.problem(&self.resolve(self.base_params()), &mut HashMap::new())
    }
}

/// Swept axes; each is a list of values. Rows are generated with the axes
/// nested in declaration order, the amplitude c varying fastest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Axes {
    pub p: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub a: Option<Vec<f64>>,
    pub k: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
}

impl Axes {
    fn list(&self) -> Vec<(&'static str, &Vec<f64>)> {
        let all = [
            ("p", &self.p),
            ("gamma", &self.gamma),
            ("theta", &self.theta),
            ("a", &self.a),
            ("k", &self.k),
            ("z", &self.z),
            ("c", &self.c),
        ];
        all.into_iter().filter_map(|(n, v)| v.as_ref().map(|v| (n, v))).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.list().into_iter().map(|(n, _)| n.to_string()).collect()
    }
}

/// Optional certificate check on converged rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateSettings {
    pub enabled: bool,
    /// Grid refinement levels per certificate.
    pub levels: usize,
    /// Template form; chosen from (p, z) when absent.
    pub form: Option<TemplateForm>,
}

impl Default for CertificateSettings {
    fn default() -> Self {
        CertificateSettings { enabled: false, levels: 1, form: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub name: String,
    /// Also write phase-boundary series when c is swept.
    pub plot: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("."), name: "sweep".into(), plot: true }
    }
}

/// Full experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    /// Concurrent rows.
    pub workers: usize,
    pub problem: FamilySpec,
    pub axes: Axes,
    pub solver: SolverOptions,
    pub quad: QuadSpec,
    pub grid: GridSpec,
    pub certificate: CertificateSettings,
    pub output: OutputSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 0,
            workers: 1,
            problem: FamilySpec::default(),
            axes: Axes::default(),
            solver: SolverOptions::default(),
            quad: QuadSpec::duhamel_default(),
            grid: GridSpec::default(),
            certificate: CertificateSettings::default(),
            output: OutputSpec::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let axes = self.axes.list();
        if axes.len() > MAX_AXES {
            return Err(Error::param(format!("at most {MAX_AXES} swept axes, got {}", axes.len())));
        }
        if let Some((n, _)) = axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::param(format!("axis '{n}' has no values")));
        }
        if self.workers == 0 {
            return Err(Error::param("workers must be at least 1"));
        }
        if !(1..=3).contains(&self.problem.dim) {
            return Err(Error::param("dim must be 1, 2 or 3"));
        }
        if self.certificate.enabled && self.certificate.levels == 0 {
            return Err(Error::param("certificate levels must be at least 1"));
        }
        self.solver.validate()?;
        self.quad.validate()
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Rows in deterministic order.
    pub fn rows(&self) -> Vec<RowParams> {
        let mut rows = vec![self.problem.base_params()];
        for (name, values) in self.axes.list() {
            let mut next = Vec::with_capacity(rows.len() * values.len());
            for r in &rows {
                for &v in values {
                    let mut r = *r;
                    match name {
                        "p" => r.p = v,
                        "gamma" => r.gamma = v,
                        "theta" => r.theta = v,
                        "a" => r.a = Some(v),
                        "k" => r.k = Some(v),
                        "z" => r.z = v,
                        _ => r.c = v,
                    }
                    next.push(r);
                }
            }
            rows = next;
        }
        rows.into_iter().map(|r| self.problem.resolve(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub index: usize,
    pub params: RowParams,
    pub classification: Classification,
    /// The classification, upgraded to "certified" when a template
    /// certificate covers the row.
    pub status: String,
    pub final_sup_ratio: Option<f64>,
    pub iterations: usize,
    pub residual: Option<f64>,
    pub divergence: Option<String>,
    pub certificate: Option<String>,
    /// Why a row is inconclusive without a solve (invalid parameters,
    /// quadrature failure), or why no certificate was attached.
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable {
    pub axes: Vec<String>,
    pub rows: Vec<PhaseRow>,
    pub provenance: Provenance,
    pub config: SweepConfig,
    /// Places where a larger amplitude converged after a smaller one diverged.
    pub monotonicity_violations: Vec<String>,
}

/// Template form matching the case of a problem: ū or w̄ off the origin
/// (p ≥ p_F or below), v̄ or w̃ at it.
pub fn matching_form(problem: &ProblemSpec) -> Result<TemplateForm> {
    let ce = critical_exponents(problem.kernel.dim, problem.gamma, problem.kernel.theta())?;
    let off = problem.u0.singular_centers().iter().any(|c| c.iter().any(|v| *v != 0.0));
    let p = problem.p;
    Ok(if off {
        if p > ce.p_f || is_critical(p, ce.p_f) {
            TemplateForm::Ubar
        } else {
            TemplateForm::Wbar
        }
    } else if p > ce.p_gamma || is_critical(p, ce.p_gamma) {
        TemplateForm::Vbar
    } else {
        TemplateForm::Wtilde
    })
}

/// Certificate for the template whose own datum equals the problem's, if
/// the shapes agree.
fn certify_row(cfg: &SweepConfig, problem: &ProblemSpec) -> Result<Option<CertificateReport>> {
    let form = match cfg.certificate.form {
        Some(f) => f,
        None => matching_form(problem)?,
    };
    let term = match problem.u0.terms.iter().find(|t| t.is_singular() && t.amplitude > 0.0) {
        Some(t) => t.clone(),
        None => return Ok(None),
    };
    let unit = make_template(problem, form, 1.0, cfg.problem.c0)?;
    let base = match unit.base_profile.terms.first() {
        Some(b) => b,
        None => return Ok(None),
    };
    let same = match (base.kind, term.kind) {
        (TermKind::Dirac, TermKind::Dirac) => true,
        (TermKind::Power { a: x }, TermKind::Power { a: y }) => (x - y).abs() <= 1e-12 * x,
        (TermKind::Logpower { a: x, k: kx, cutoff: cx }, TermKind::Logpower { a: y, k: ky, cutoff: cy }) => {
            x == y && (kx - ky).abs() <= 1e-12 * kx && cx == cy
        }
        _ => false,
    };
    if !same || !(unit.psi_value > 0.0) {
        return Ok(None);
    }
    let template = unit.with_c(term.amplitude / unit.psi_value);
    verify_certificate_levels(&template, problem, &cfg.grid, &cfg.quad, cfg.certificate.levels).map(Some)
}

fn run_row(cfg: &SweepConfig, index: usize, params: RowParams, kernels: &mut HashMap<u64, KernelSpec>) -> PhaseRow {
    let mut row = PhaseRow {
        index,
        params,
        classification: Classification::Inconclusive,
        status: Classification::Inconclusive.name().into(),
        final_sup_ratio: None,
        iterations: 0,
        residual: None,
        divergence: None,
        certificate: None,
        note: String::new(),
    };
    let problem = match cfg.problem.problem(&params, kernels) {
        Ok(p) => p,
        Err(e) => {
            row.note = format!("skipped: {e}");
            return row;
        }
    };
    let report = match solve_problem(&problem, &cfg.grid, &cfg.quad, &cfg.solver) {
        Ok(r) => r,
        Err(e) => {
            row.note = format!("solver error: {e}");
            return row;
        }
    };
    row.classification = report.classification;
    row.status = report.classification.name().into();
    row.final_sup_ratio = Some(report.final_sup_ratio());
    row.iterations = report.iterations;
    row.residual = report.residuals.last().copied();
    row.divergence = report.divergence.as_ref().map(|d| serde_json::to_string(d).expect("signature serializes"));
    if cfg.certificate.enabled && report.classification == Classification::Converged && !problem.u0.is_zero() {
        match certify_row(cfg, &problem) {
            Ok(Some(c)) if c.verdict == Verdict::Certified => {
                row.certificate = Some(c.id());
                row.status = "certified".into();
            }
            Ok(Some(c)) => row.note = format!("certificate {}: max ratio {}", c.verdict.name(), c.max_ratio),
            Ok(None) => row.note = "no matching template".into(),
            Err(e) => row.note = format!("certificate error: {e}"),
        }
    }
    row
}

/// One Picard solve on a fresh grid.
pub fn solve_problem(problem: &ProblemSpec, grid: &GridSpec, q: &QuadSpec, opts: &SolverOptions) -> Result<SolveReport> {
    let g = Arc::new(SpaceTimeGrid::build(problem, grid)?);
    picard_solve_with(problem, g, q, opts)
}

fn with_workers<T: Send, F: Fn(usize) -> T + Sync + Send>(workers: usize, n: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    if workers > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
    }
    let _ = workers;
    (0..n).map(f).collect()
}

/// One solve per row; failures are recorded in the row, never abort.
pub fn sweep(config: &SweepConfig) -> Result<PhaseTable> {
    config.validate()?;
    let rows = config.rows();
    // Fractional tables are built once, up front.
    let mut kernels = HashMap::new();
    for r in &rows {
        if r.theta != 2.0 && r.theta > 0.0 && r.theta < 2.0 && !kernels.contains_key(&r.theta.to_bits()) {
            if let Ok(k) = KernelSpec::fractional_built(config.problem.dim, r.theta) {
                kernels.insert(r.theta.to_bits(), k);
            }
        }
    }
    let out = with_workers(config.workers, rows.len(), |i| {
        let mut local = kernels.clone();
        run_row(config, i, rows[i], &mut local)
    });
    let mut table = PhaseTable {
        axes: config.axes.names(),
        rows: out,
        provenance: Provenance { config_hash: config.hash(), seed: config.seed, version: VERSION.into() },
        config: config.clone(),
        monotonicity_violations: Vec::new(),
    };
    table.monotonicity_violations = monotonicity_violations(&table.rows);
    Ok(table)
}

/// Key of a row with the amplitude removed.
fn group_key(p: &RowParams) -> [u64; 6] {
    let o = |v: Option<f64>| v.map(f64::to_bits).unwrap_or(u64::MAX);
    [p.p.to_bits(), p.gamma.to_bits(), p.theta.to_bits(), o(p.a), o(p.k), p.z.to_bits()]
}

/// Rows where some smaller amplitude with otherwise equal parameters
/// diverged while this one converged.
pub fn monotonicity_violations(rows: &[PhaseRow]) -> Vec<String> {
    let mut out = Vec::new();
    for r in rows.iter().filter(|r| r.classification == Classification::Converged) {
        for s in rows {
            if s.classification == Classification::Diverging && group_key(&s.params) == group_key(&r.params) && s.params.c < r.params.c {
                out.push(format!("row {} (c = {}) converged but row {} (c = {}) diverged", r.index, r.params.c, s.index, s.params.c));
            }
        }
    }
    out
}

/// A problem with free amplitude: the data of `problem` multiplied by c.
#[derive(Debug, Clone)]
pub struct AmplitudeFamily {
    pub problem: ProblemSpec,
    pub grid: GridSpec,
    pub quad: QuadSpec,
    pub solver: SolverOptions,
}

impl AmplitudeFamily {
    /// Family of the configuration's base problem, normalized to unit amplitude.
    pub fn from_config(cfg: &SweepConfig) -> Result<Self> {
        let mut fam = cfg.problem.clone();
        fam.amplitude = 1.0;
        fam.c0 = 0.0;
        Ok(AmplitudeFamily { problem: fam.base_problem()?, grid: cfg.grid.clone(), quad: cfg.quad.clone(), solver: cfg.solver.clone() })
    }

    pub fn at(&self, c: f64) -> ProblemSpec {
        self.problem.with_data(self.problem.u0.scaled(c))
    }

    pub fn classify(&self, c: f64) -> BracketStep {
        match solve_problem(&self.at(c), &self.grid, &self.quad, &self.solver) {
            Ok(r) => BracketStep { c, classification: r.classification, final_sup_ratio: Some(r.final_sup_ratio()), iterations: r.iterations },
            Err(_) => BracketStep { c, classification: Classification::Inconclusive, final_sup_ratio: None, iterations: 0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketStep {
    pub c: f64,
    pub classification: Classification,
    pub final_sup_ratio: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// Largest amplitude seen to converge.
    pub c_exists: f64,
    /// Smallest amplitude seen to diverge (or stay inconclusive).
    pub c_fails: f64,
    pub steps: Vec<BracketStep>,
    /// Set when an inconclusive run was met or the history is not monotone.
    pub flagged: bool,
}

impl Bracket {
    pub fn ratio(&self) -> f64 {
        self.c_fails / self.c_exists
    }
}

/// Geometric bisection on the classification in c. Inconclusive midpoints
/// count as failing and flag the bracket.
pub fn bracket_threshold(family: &AmplitudeFamily, c_low: f64, c_high: f64, steps: usize) -> Result<Bracket> {
    if !(c_low > 0.0 && c_high > c_low && c_high.is_finite()) {
        return Err(Error::param("bracket needs 0 < c_low < c_high"));
    }
    let lo_step = family.classify(c_low);
    if lo_step.classification != Classification::Converged {
        return Err(Error::param(format!("c_low = {c_low} does not converge ({})", lo_step.classification.name())));
    }
    let hi_step = family.classify(c_high);
    if hi_step.classification != Classification::Diverging {
        return Err(Error::param(format!("c_high = {c_high} does not diverge ({})", hi_step.classification.name())));
    }
    let mut b = Bracket { c_exists: c_low, c_fails: c_high, steps: vec![lo_step, hi_step], flagged: false };
    for _ in 0..steps {
        let mid = (b.c_exists * b.c_fails).sqrt();
        let s = family.classify(mid);
        match s.classification {
            Classification::Converged => b.c_exists = mid,
            Classification::Diverging => b.c_fails = mid,
            Classification::Inconclusive => {
                b.c_fails = mid;
                b.flagged = true;
            }
        }
        b.steps.push(s);
    }
    let conv_max = b.steps.iter().filter(|s| s.classification == Classification::Converged).map(|s| s.c).fold(0.0, f64::max);
    let div_min = b.steps.iter().filter(|s| s.classification == Classification::Diverging).map(|s| s.c).fold(f64::INFINITY, f64::min);
    if conv_max >= div_min {
        b.flagged = true;
    }
    Ok(b)
}

/// Report files produced by [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Plot,
}

pub const CSV_COLUMNS: [&str; 16] = [
    "index",
    "p",
    "gamma",
    "theta",
    "a",
    "k",
    "z",
    "c",
    "classification",
    "status",
    "final_sup_ratio",
    "iterations",
    "residual",
    "divergence",
    "certificate",
    "note",
];

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).quote_style(csv::QuoteStyle::Necessary).from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// The phase table as CSV bytes (RFC quoting, LF line ends).
pub fn table_csv(table: &PhaseTable) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in &table.rows {
        let p = &r.params;
        w.write_record([
            r.index.to_string(),
            num(p.p),
            num(p.gamma),
            num(p.theta),
            opt(p.a),
            opt(p.k),
            num(p.z),
            num(p.c),
            r.classification.name().to_string(),
            r.status.clone(),
            opt(r.final_sup_ratio),
            r.iterations.to_string(),
            opt(r.residual),
            r.divergence.clone().unwrap_or_default(),
            r.certificate.clone().unwrap_or_default(),
            r.note.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Per group of equal non-amplitude parameters: the largest converged and
/// the smallest diverging amplitude.
pub fn boundary_csv(table: &PhaseTable) -> Result<Vec<u8>> {
    let mut keys: Vec<[u64; 6]> = Vec::new();
    for r in &table.rows {
        let k = group_key(&r.params);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut w = csv_writer(Vec::new());
    w.write_record(["p", "gamma", "theta", "a", "k", "z", "c_converged_max", "c_diverging_min"]).map_err(csv_err)?;
    for k in keys {
        let group: Vec<&PhaseRow> = table.rows.iter().filter(|r| group_key(&r.params) == k).collect();
        let p = &group[0].params;
        let conv = group.iter().filter(|r| r.classification == Classification::Converged).map(|r| r.params.c).fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))));
        let div = group.iter().filter(|r| r.classification == Classification::Diverging).map(|r| r.params.c).fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.min(c))));
        w.write_record([num(p.p), num(p.gamma), num(p.theta), opt(p.a), opt(p.k), num(p.z), opt(conv), opt(div)]).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Write the requested files into `dir` as `<name>.csv`, `<name>.json` and
/// `<name>_boundary.csv`; returns their paths.
pub fn emit_report(table: &PhaseTable, dir: &Path, name: &str, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::param("empty phase table"));
    }
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for f in formats {
        let (path, bytes) = match f {
            ReportFormat::Csv => (dir.join(format!("{name}.csv")), table_csv(table)?),
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(table).map_err(|e| Error::Format(e.to_string()))?;
                s.push('\n');
                (dir.join(format!("{name}.json")), s.into_bytes())
            }
            ReportFormat::Plot => {
                if !table.axes.iter().any(|a| a == "c") {
                    continue;
                }
                (dir.join(format!("{name}_boundary.csv")), boundary_csv(table)?)
            }
        };
        std::fs::write(&path, bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Sweep and write every configured output.
pub fn run_sweep(config: &SweepConfig) -> Result<(PhaseTable, Vec<PathBuf>)> {
    let table = sweep(config)?;
    let mut formats = vec![ReportFormat::Csv, ReportFormat::Json];
    if config.output.plot {
        formats.push(ReportFormat::Plot);
    }
    let paths = emit_report(&table, &config.output.dir, &config.output.name, &formats)?;
    Ok((table, paths))
}
