//! Supersolution templates as space-time fields.

use std::f64::consts::E;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrate::Tolerance;
use crate::kernel::KernelSpec;
use crate::profile::{AuxiliaryH, HCase, SupersolutionTemplate, TermKind};

use super::convolve::{log_e_plus_exp, radial_log, radial_power};
use super::field::Field;
use super::grid::Geometry;
use super::tables::{CutTable, ProfileTable};
use super::QuadSpec;

#[derive(Debug, Clone)]
enum Shape {
    /// G(r, m s).
    Bump,
    /// H^{-1} of the heat evolution of H(f) = r^{−b}, b = aα.
    PowerH { alpha: f64, b: f64, table: Arc<ProfileTable> },
    /// Tabulated H^{-1}(∫ G H(f)) for log-corrected f, in (r, m s).
    LogH { table: Arc<CutTable> },
}

/// The template value amplitude·W(x, t) + 2C0 as a [`Field`] over reduced
/// coordinates.
#[derive(Debug, Clone)]
pub struct TemplateField {
    template: SupersolutionTemplate,
    kernel: KernelSpec,
    geometry: Geometry,
    centers: Vec<f64>,
    center: f64,
    amplitude: f64,
    shift: f64,
    dilation: f64,
    shape: Shape,
}

/// Parameters of a log-corrected base profile r^{−N}(ln(e + 1/r))^{−k} on
/// the unit ball, together with H = X (ln(A + X))^β.
struct LogBase {
    n: f64,
    k: f64,
    beta: f64,
    big_a: f64,
    cutoff: f64,
}

impl LogBase {
    fn new(t: &SupersolutionTemplate) -> Result<Self> {
        let term = t.base_profile.terms.first().ok_or_else(|| Error::param("template has no base profile"))?;
        let (a, k, cutoff) = match term.kind {
            TermKind::Logpower { a, k, cutoff } => (a, k, cutoff),
            _ => return Err(Error::param("log-case H needs a log-corrected base profile")),
        };
        let (beta, big_a) = match t.h.map(|h| h.case) {
            Some(HCase::Log { beta, big_a }) => (beta, big_a),
            _ => return Err(Error::param("log-corrected base profile needs a log-case H")),
        };
        if a != t.dim as f64 || !(k - beta > 1.0) {
            return Err(Error::param("log-case H(f) must be integrable (a = N, k - beta > 1)"));
        }
        Ok(LogBase { n: a, k, beta, big_a, cutoff })
    }

    /// ln(A + f) from ln f.
    fn ln_shift(&self, lf: f64) -> f64 {
        let la = self.big_a.ln();
        la.max(lf) + (-(la - lf).abs()).exp().ln_1p()
    }

    /// ρ^N H(f(ρ)) at ρ = e^{−λ}.
    fn lam(&self, l: f64) -> f64 {
        let ll = log_e_plus_exp(l);
        let lf = self.n * l - self.k * ll.ln();
        ll.powf(-self.k) * self.ln_shift(lf).powf(self.beta)
    }

    fn phi(&self, rho: f64) -> f64 {
        if rho > self.cutoff {
            return 0.0;
        }
        let lf = -self.n * rho.ln() - self.k * (E + 1.0 / rho).ln().ln();
        lf.exp() * self.ln_shift(lf).powf(self.beta)
    }

    /// ∫ G(x − y, τ) H(f(|y − z|)) dy at distance r.
    fn convolve(&self, kernel: &KernelSpec, r: f64, tau: f64, extra: &[f64], tol: Tolerance) -> crate::integrate::Estimate {
        radial_log(kernel, r, tau, &|l| self.lam(l), self.k - self.beta, &|rho| self.phi(rho), self.cutoff, extra, tol)
    }
}

fn power_h(t: &SupersolutionTemplate) -> Result<(f64, f64)> {
    let a = crate::profile::base_power_exponent(t).ok_or_else(|| Error::param("power-case H needs a power base profile"))?;
    let alpha = match t.h.map(|h| h.case) {
        Some(HCase::Power { alpha }) => alpha,
        _ => return Err(Error::param("power base profile needs a power-case H")),
    };
    let b = a * alpha;
    if !(b < t.dim as f64) {
        return Err(Error::param(format!("H(f) = r^-{b} is not locally integrable")));
    }
    Ok((alpha, b))
}

impl TemplateField {
    /// `horizon` bounds the times at which the field will be evaluated.
    pub fn new(template: &SupersolutionTemplate, kernel: &KernelSpec, horizon: f64) -> Result<Self> {
        kernel.validate()?;
        if kernel.dim != template.dim || (kernel.theta() - template.theta).abs() > 1e-12 {
            return Err(Error::param("template and kernel disagree on N or theta"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::param("template horizon must be positive and finite"));
        }
        let z = &template.center;
        let off = z.iter().any(|v| *v != 0.0);
        let (geometry, center) = if kernel.dim == 1 {
            (Geometry::Line, z.first().copied().unwrap_or(0.0))
        } else if !off {
            (Geometry::Radial, 0.0)
        } else {
            return Err(Error::Unsupported(format!(
                "template fields in dimension {} need the singularity at the origin",
                kernel.dim
            )));
        };
        let mut centers = vec![0.0, center];
        centers.sort_by(f64::total_cmp);
        centers.dedup();
        let m = template.time_dilation;
        let shape = match template.base_profile.terms.first().map(|t| t.kind) {
            Some(TermKind::Dirac) => Shape::Bump,
            Some(TermKind::Power { .. }) => {
                let (alpha, b) = power_h(template)?;
                Shape::PowerH { alpha, b, table: Arc::new(ProfileTable::new(kernel, b)) }
            }
            Some(TermKind::Logpower { .. }) => {
                let base = LogBase::new(template)?;
                let h: AuxiliaryH = template.h.expect("checked by LogBase");
                let tol = Tolerance::new(1e-9, 0.0, 2000);
                let tau = m * horizon;
                let reach = 60.0 * kernel.scale(tau);
                let table = CutTable::build(kernel, base.cutoff, reach, (tau * 1e-14, tau, 100), 120, |r, s| {
                    h.inverse(base.convolve(kernel, r, s, &[], tol).value)
                });
                Shape::LogH { table: Arc::new(table) }
            }
            _ => return Err(Error::param("template base profile must be a Dirac, power or log-corrected power")),
        };
        Ok(TemplateField {
            template: template.clone(),
            kernel: kernel.clone(),
            geometry,
            centers,
            center,
            amplitude: template.amplitude(),
            shift: 2.0 * template.c0,
            dilation: m,
            shape,
        })
    }

    pub fn template(&self) -> &SupersolutionTemplate {
        &self.template
    }

    /// W at distance r from the singular center.
    #[inline]
    fn shape_value(&self, r: f64, s: f64) -> f64 {
        let tau = self.dilation * s;
        match &self.shape {
            Shape::Bump => self.kernel.radial(r, tau),
            Shape::PowerH { alpha, b, table } => {
                let sc = tau.powf(-1.0 / self.kernel.theta());
                (sc.powf(*b) * table.eval(r * sc)).powf(1.0 / alpha)
            }
            Shape::LogH { table } => table.eval(r, tau),
        }
    }
}

impl Field for TemplateField {
    fn value(&self, y: f64, s: f64) -> f64 {
        self.amplitude * self.shape_value((y - self.center).abs(), s) + self.shift
    }

    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn centers(&self) -> &[f64] {
        &self.centers
    }
}

/// U(x, t) = H^{-1}(∫ G(x − y, m t) H(f(y)) dy) by direct adaptive
/// quadrature; H(f) is formed in closed form before convolving.
pub fn eval_u(template: &SupersolutionTemplate, kernel: &KernelSpec, x: &[f64], t: f64, q: &QuadSpec) -> Result<f64> {
    q.validate()?;
    kernel.validate()?;
    if x.len() != kernel.dim || template.center.len() != kernel.dim {
        return Err(Error::param("point, template and kernel dimensions differ"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("time must be positive"));
    }
    let h = template.h.ok_or_else(|| Error::param(format!("template {} carries no H", template.form.name())))?;
    let r = x.iter().zip(&template.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let tau = template.time_dilation * t;
    let tol = q.tolerance();
    let extra: Vec<f64> = q
        .singular_points
        .iter()
        .filter(|p| p.len() == kernel.dim)
        .map(|p| p.iter().zip(&template.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect();
    let est = match template.base_profile.terms.first().map(|t| t.kind) {
        Some(TermKind::Power { .. }) => {
            let (_, b) = power_h(template)?;
            radial_power(kernel, r, tau, b, f64::INFINITY, &|_| 1.0, &extra, tol)
        }
        Some(TermKind::Logpower { .. }) => LogBase::new(template)?.convolve(kernel, r, tau, &extra, tol),
        _ => return Err(Error::param("template base profile must be a power or log-corrected power")),
    };
    if !est.converged {
        return Err(Error::Budget { value: h.inverse(est.value), error: est.error });
    }
    Ok(h.inverse(est.value))
}
