use std::f64::consts::E;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrate::Tolerance;
use crate::kernel::KernelSpec;
use crate::profile::{SingularProfile, TermKind};

use super::convolve::{log_e_plus_exp, radial_log};
use super::tables::{CutTable, ProfileTable};

#[derive(Debug, Clone)]
enum Part {
    Constant(f64),
    Dirac { amp: f64, center: Vec<f64> },
    Power { amp: f64, a: f64, center: Vec<f64>, table: Arc<ProfileTable> },
    Log { amp: f64, center: Vec<f64>, table: Arc<CutTable> },
}

impl Part {
    fn center(&self) -> &[f64] {
        match self {
            Part::Constant(_) => &[],
            Part::Dirac { center, .. } | Part::Power { center, .. } | Part::Log { center, .. } => center,
        }
    }
}

/// Reference field E(x, t): the heat evolution of a singular profile,
/// evaluated in closed form (Dirac, constant), through the self-similar
/// profile (power terms) or a (ln r, ln t) table (log-corrected terms).
/// Strictly positive off the singular set unless the profile is zero.
#[derive(Debug, Clone)]
pub struct Envelope {
    kernel: KernelSpec,
    profile: SingularProfile,
    theta: f64,
    parts: Vec<Part>,
}

impl Envelope {
    /// `horizon` bounds the times the log-corrected tables must cover.
    pub fn new(kernel: &KernelSpec, profile: &SingularProfile, horizon: f64) -> Result<Self> {
        kernel.validate()?;
        profile.validate(kernel.dim)?;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::param("envelope horizon must be positive and finite"));
        }
        let nf = kernel.dim as f64;
        let theta = kernel.theta();
        let mut parts = Vec::new();
        let mut tables: Vec<(f64, Arc<ProfileTable>)> = Vec::new();
        for term in profile.terms.iter().filter(|t| t.amplitude > 0.0) {
            let amp = term.amplitude;
            let center = term.center.clone();
            parts.push(match term.kind {
                TermKind::Constant => Part::Constant(amp),
                TermKind::Dirac => Part::Dirac { amp, center },
                TermKind::Power { a } => {
                    let table = match tables.iter().find(|(b, _)| *b == a) {
                        Some((_, t)) => t.clone(),
                        None => {
                            let t = Arc::new(ProfileTable::new(kernel, a));
                            tables.push((a, t.clone()));
                            t
                        }
                    };
                    Part::Power { amp, a, center, table }
                }
                TermKind::Logpower { a, k, cutoff } => {
                    let tol = Tolerance::new(1e-9, 0.0, 2000);
                    let lam = move |l: f64| (-(nf - a) * l).exp() * log_e_plus_exp(l).powf(-k);
                    let phi = move |rho: f64| if rho > cutoff { 0.0 } else { rho.powf(-a) * (E + 1.0 / rho).ln().powf(-k) };
                    let decay = if a < nf { f64::INFINITY } else { k };
                    let reach = 60.0 * kernel.scale(horizon);
                    let table = CutTable::build(kernel, cutoff, reach, (horizon * 1e-14, horizon, 100), 120, |r, s| {
                        radial_log(kernel, r, s, &lam, decay, &phi, cutoff, &[], tol).value
                    });
                    Part::Log { amp, center, table: Arc::new(table) }
                }
            });
        }
        Ok(Envelope { kernel: kernel.clone(), profile: profile.clone(), theta, parts })
    }

    pub fn profile(&self) -> &SingularProfile {
        &self.profile
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    #[inline]
    fn part_value(&self, part: &Part, r: f64, s: f64) -> f64 {
        match part {
            Part::Constant(v) => *v,
            Part::Dirac { amp, .. } => amp * self.kernel.radial(r, s),
            Part::Power { amp, a, table, .. } => {
                let sc = s.powf(-1.0 / self.theta);
                amp * sc.powf(*a) * table.eval(r * sc)
            }
            Part::Log { amp, table, .. } => amp * table.eval(r, s),
        }
    }

    /// E(x, s) at a full-space point.
    pub fn value(&self, x: &[f64], s: f64) -> f64 {
        self.parts
            .iter()
            .map(|p| {
                let c = p.center();
                let r = if c.is_empty() { 0.0 } else { x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() };
                self.part_value(p, r, s)
            })
            .sum()
    }

    /// E(ys[i], s) into `out` for reduced coordinates, with the
    /// time-dependent factors computed once.
    pub fn fill_reduced(&self, s: f64, ys: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for part in &self.parts {
            let c = part.center().first().copied().unwrap_or(0.0);
            match part {
                Part::Constant(v) => out.iter_mut().for_each(|o| *o += v),
                Part::Dirac { amp, .. } if self.kernel.is_gaussian() && self.kernel.dim == 1 => {
                    let c1 = amp / (4.0 * std::f64::consts::PI * s).sqrt();
                    let c2 = 1.0 / (4.0 * s);
                    for (o, &y) in out.iter_mut().zip(ys) {
                        *o += c1 * (-(y - c) * (y - c) * c2).exp();
                    }
                }
                Part::Power { amp, a, table, .. } => {
                    let sc = s.powf(-1.0 / self.theta);
                    let pre = amp * sc.powf(*a);
                    for (o, &y) in out.iter_mut().zip(ys) {
                        *o += pre * table.eval((y - c).abs() * sc);
                    }
                }
                _ => {
                    for (o, &y) in out.iter_mut().zip(ys) {
                        *o += self.part_value(part, (y - c).abs(), s);
                    }
                }
            }
        }
    }

    /// E at a reduced coordinate: the line coordinate (N = 1) or the radius
    /// (all centers at the origin).
    #[inline]
    pub fn value_reduced(&self, y: f64, s: f64) -> f64 {
        let mut v = 0.0;
        for p in &self.parts {
            let c = p.center();
            let r = if c.is_empty() { 0.0 } else { (y - c[0]).abs() };
            v += self.part_value(p, r, s);
        }
        v
    }
}
