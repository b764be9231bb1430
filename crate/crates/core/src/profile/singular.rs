use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of one term of a singular profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TermKind {
    Dirac,
    Power {
        a: f64,
    },
    /// |x−z|^{−a} (log(e + |x−z|^{−1}))^{−k} on the ball of radius `cutoff`.
    Logpower {
        a: f64,
        k: f64,
        #[serde(default = "one")]
        cutoff: f64,
    },
    Constant,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(flatten)]
    pub kind: TermKind,
    pub amplitude: f64,
    #[serde(default)]
    pub center: Vec<f64>,
}

impl Term {
    /// Value of the term's shape (amplitude 1) at distance r from its center.
    pub fn shape(&self, r: f64) -> f64 {
        match self.kind {
            TermKind::Dirac => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            TermKind::Power { a } => r.powf(-a),
            TermKind::Logpower { a, k, cutoff } => {
                if r > cutoff {
                    0.0
                } else if r == 0.0 {
                    f64::INFINITY
                } else {
                    r.powf(-a) * (E + 1.0 / r).ln().powf(-k)
                }
            }
            TermKind::Constant => 1.0,
        }
    }

    pub fn is_singular(&self) -> bool {
        !matches!(self.kind, TermKind::Constant)
    }
}

/// Finite sum of Dirac, power, log-corrected power and constant terms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SingularProfile {
    pub terms: Vec<Term>,
}

impl SingularProfile {
    pub fn zero() -> Self {
        SingularProfile { terms: vec![] }
    }

    pub fn power(a: f64, amplitude: f64, center: &[f64]) -> Self {
        Self::zero().with(TermKind::Power { a }, amplitude, center)
    }

    pub fn logpower(a: f64, k: f64, amplitude: f64, center: &[f64]) -> Self {
        Self::zero().with(TermKind::Logpower { a, k, cutoff: 1.0 }, amplitude, center)
    }

    pub fn dirac(amplitude: f64, center: &[f64]) -> Self {
        Self::zero().with(TermKind::Dirac, amplitude, center)
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Self::zero().with(TermKind::Constant, value, &vec![0.0; dim])
    }

    /// Append a term.
    pub fn with(mut self, kind: TermKind, amplitude: f64, center: &[f64]) -> Self {
        self.terms.push(Term { kind, amplitude, center: center.to_vec() });
        self
    }

    pub fn plus_constant(self, value: f64) -> Self {
        if value == 0.0 {
            return self;
        }
        let dim = self.terms.first().map(|t| t.center.len()).unwrap_or(1);
        self.with(TermKind::Constant, value, &vec![0.0; dim])
    }

    /// All amplitudes multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        SingularProfile {
            terms: self.terms.iter().map(|t| Term { amplitude: t.amplitude * c, ..t.clone() }).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    /// Distinct centers of singular terms with nonzero amplitude.
    pub fn singular_centers(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for t in &self.terms {
            if t.is_singular() && t.amplitude != 0.0 && !out.contains(&t.center) {
                out.push(t.center.clone());
            }
        }
        out
    }

    /// Structural checks: nonnegative amplitudes, consistent dimensions,
    /// local integrability of every power term.
    pub fn validate(&self, dim: usize) -> Result<()> {
        for t in &self.terms {
            if !(t.amplitude >= 0.0) || !t.amplitude.is_finite() {
                return Err(Error::param("profile amplitudes must be finite and nonnegative"));
            }
            if t.center.len() != dim && !(matches!(t.kind, TermKind::Constant) && t.center.is_empty()) {
                return Err(Error::param(format!("term center has dimension {}, expected {dim}", t.center.len())));
            }
            match t.kind {
                TermKind::Power { a } if !(a > 0.0 && a < dim as f64) => {
                    return Err(Error::param(format!("power exponent {a} is not locally integrable in dimension {dim}")));
                }
                TermKind::Logpower { a, k, cutoff } => {
                    if !(a > 0.0 && (a < dim as f64 || a == dim as f64 && k > 1.0)) || !(cutoff > 0.0) {
                        return Err(Error::param("log-corrected term is not locally integrable"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Profile value at x; +∞ at singular centers (Dirac terms are never
/// evaluated pointwise away from their center, where they contribute 0).
pub fn eval_profile(prof: &SingularProfile, x: &[f64]) -> f64 {
    prof.terms
        .iter()
        .map(|t| {
            if t.amplitude == 0.0 {
                return 0.0;
            }
            let r = if matches!(t.kind, TermKind::Constant) {
                0.0
            } else {
                x.iter().zip(&t.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            };
            t.amplitude * t.shape(r)
        })
        .sum()
}
