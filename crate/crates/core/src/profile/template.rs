use serde::{Deserialize, Serialize};

use super::aux_h::{build_aux_h, AuxiliaryH, CaseP};
use super::exponents::{critical_exponents, is_critical, psi_weight};
use super::singular::{SingularProfile, TermKind};
use crate::error::{Error, Result};
use crate::solver::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateForm {
    Ubar,
    Wbar,
    Vbar,
    Wtilde,
    UbarPlus,
    WbarPlus,
}

impl TemplateForm {
    pub fn name(self) -> &'static str {
        match self {
            TemplateForm::Ubar => "ubar",
            TemplateForm::Wbar => "wbar",
            TemplateForm::Vbar => "vbar",
            TemplateForm::Wtilde => "wtilde",
            TemplateForm::UbarPlus => "ubar_plus",
            TemplateForm::WbarPlus => "wbar_plus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ubar" => TemplateForm::Ubar,
            "wbar" => TemplateForm::Wbar,
            "vbar" => TemplateForm::Vbar,
            "wtilde" => TemplateForm::Wtilde,
            "ubar_plus" | "ubar+" => TemplateForm::UbarPlus,
            "wbar_plus" | "wbar+" => TemplateForm::WbarPlus,
            _ => return Err(Error::param(format!("unknown template form '{s}'"))),
        })
    }

    /// Forms built from a smoothed profile through H (as opposed to a kernel bump).
    pub fn uses_h(self) -> bool {
        matches!(self, TemplateForm::Ubar | TemplateForm::UbarPlus | TemplateForm::Vbar)
    }
}

/// An explicit candidate supersolution
/// `prefactor · c · weight · W(x, t) + 2 C0`, where W is either
/// H^{-1}(∫G(x−y, m t) H(f(y)) dy) or G(x − z, m t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionTemplate {
    pub form: TemplateForm,
    pub c: f64,
    pub c0: f64,
    /// ψ(z), |z|^{γ/(p−1)} for the improved variants, or 1.
    pub psi_value: f64,
    /// f, g (amplitude 1), or a unit Dirac mass for the kernel-bump forms.
    pub base_profile: SingularProfile,
    pub h: Option<AuxiliaryH>,
    pub time_dilation: f64,
    pub prefactor: f64,
    pub center: Vec<f64>,
    pub dim: usize,
    pub p: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl SupersolutionTemplate {
    /// Coefficient in front of W.
    pub fn amplitude(&self) -> f64 {
        self.prefactor * self.c * self.psi_value
    }

    /// Initial datum the template is built to dominate: c·weight·(base) + C0.
    pub fn data_profile(&self) -> SingularProfile {
        self.base_profile.scaled(self.c * self.psi_value).plus_constant(self.c0)
    }

    /// Same template with a different amplitude c.
    pub fn with_c(&self, c: f64) -> Self {
        SupersolutionTemplate { c, ..self.clone() }
    }
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Assemble the template of the requested form for `problem`.
pub fn make_template(problem: &ProblemSpec, form: TemplateForm, c: f64, c0: f64) -> Result<SupersolutionTemplate> {
    let n = problem.kernel.dim;
    let nf = n as f64;
    let theta = problem.kernel.theta();
    let (p, gamma) = (problem.p, problem.gamma);
    let ce = critical_exponents(n, gamma, theta)?;
    if !(c >= 0.0 && c0 >= 0.0) {
        return Err(Error::param("template constants must be nonnegative"));
    }
    let z = problem.u0.singular_centers().into_iter().next().unwrap_or_else(|| vec![0.0; n]);
    let rz = norm(&z);
    let horizon = problem.horizon;
    let need_offcenter = |what: &str| -> Result<()> {
        if rz == 0.0 {
            Err(Error::param(format!("{what} needs a singularity away from the origin (z != 0)")))
        } else {
            Ok(())
        }
    };
    let need_near = || -> Result<()> {
        if !(horizon <= rz.powf(theta)) {
            Err(Error::param(format!("improved variant needs T <= |z|^theta = {}", rz.powf(theta))))
        } else {
            Ok(())
        }
    };
    let fujita_prefactor = 2f64.powf(nf / theta + 1.0);
    let at_or_above = |pc: f64| p > pc || is_critical(p, pc);
    let below = |pc: f64| p < pc && !is_critical(p, pc);

    let (base, h, m, pre, weight) = match form {
        TemplateForm::Ubar | TemplateForm::UbarPlus => {
            if !at_or_above(ce.p_f) {
                return Err(Error::param(format!("{} needs p >= p_F = {}", form.name(), ce.p_f)));
            }
            need_offcenter(form.name())?;
            if form == TemplateForm::UbarPlus {
                need_near()?;
            }
            let (base, h) = if is_critical(p, ce.p_f) {
                let h = build_aux_h(n, p, gamma, theta, CaseP::CriticalFujita, None, None)?;
                (SingularProfile::logpower(nf, nf / theta + 1.0, 1.0, &z), h)
            } else {
                let h = build_aux_h(n, p, gamma, theta, CaseP::SupercriticalFujita, None, None)?;
                (SingularProfile::power(theta / (p - 1.0), 1.0, &z), h)
            };
            let w = if form == TemplateForm::Ubar {
                psi_weight(&z, n, p, gamma, theta)
            } else {
                rz.powf(gamma / (p - 1.0))
            };
            (base, Some(h), 2.0, fujita_prefactor, w)
        }
        TemplateForm::Wbar | TemplateForm::WbarPlus => {
            if !below(ce.p_f) {
                return Err(Error::param(format!("{} needs p < p_F = {}", form.name(), ce.p_f)));
            }
            need_offcenter(form.name())?;
            if form == TemplateForm::WbarPlus {
                need_near()?;
            }
            let w = if form == TemplateForm::Wbar {
                psi_weight(&z, n, p, gamma, theta)
            } else {
                rz.powf(gamma / (p - 1.0))
            };
            (SingularProfile::dirac(1.0, &z), None, 2.0, fujita_prefactor, w)
        }
        TemplateForm::Vbar => {
            if !at_or_above(ce.p_gamma) {
                return Err(Error::param(format!("vbar needs p >= p_gamma = {}", ce.p_gamma)));
            }
            if rz != 0.0 {
                return Err(Error::param("vbar is built for a singularity at the origin (z = 0)"));
            }
            let (base, h) = if is_critical(p, ce.p_gamma) {
                let h = build_aux_h(n, p, gamma, theta, CaseP::CriticalHardy, None, None)?;
                (SingularProfile::logpower(nf, nf / (theta - gamma) + 1.0, 1.0, &z), h)
            } else {
                let h = build_aux_h(n, p, gamma, theta, CaseP::SupercriticalHardy, None, None)?;
                (SingularProfile::power((theta - gamma) / (p - 1.0), 1.0, &z), h)
            };
            (base, Some(h), 1.0, 2.0, 1.0)
        }
        TemplateForm::Wtilde => {
            if !below(ce.p_gamma) {
                return Err(Error::param(format!("wtilde needs p < p_gamma = {}", ce.p_gamma)));
            }
            (SingularProfile::dirac(1.0, &z), None, 1.0, 2.0, 1.0)
        }
    };
    Ok(SupersolutionTemplate {
        form,
        c,
        c0,
        psi_value: weight,
        base_profile: base,
        h,
        time_dilation: m,
        prefactor: pre,
        center: z,
        dim: n,
        p,
        gamma,
        theta,
    })
}

/// Exponent of the power base profile, if any.
pub fn base_power_exponent(t: &SupersolutionTemplate) -> Option<f64> {
    t.base_profile.terms.first().and_then(|term| match term.kind {
        TermKind::Power { a } => Some(a),
        _ => None,
    })
}
