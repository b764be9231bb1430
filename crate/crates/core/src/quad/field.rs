use std::sync::Arc;

use crate::error::{Error, Result};

use super::envelope::Envelope;
use super::grid::{Geometry, SpaceTimeGrid};

/// A nonnegative space-time function in reduced coordinates.
pub trait Field: Sync {
    /// u(y, s), y the line coordinate or the radius.
    fn value(&self, y: f64, s: f64) -> f64;

    /// u(ys[i], s) into `out`.
    fn fill(&self, s: f64, ys: &[f64], out: &mut [f64]) {
        for (o, &y) in out.iter_mut().zip(ys) {
            *o = self.value(y, s);
        }
    }

    fn geometry(&self) -> Geometry;

    /// Reduced coordinates around which the field has fine structure at
    /// scale s^{1/θ}.
    fn centers(&self) -> &[f64];

    /// Spatial and temporal nodes where the field has kinks.
    fn space_breaks(&self) -> &[f64] {
        &[]
    }

    fn time_breaks(&self) -> &[f64] {
        &[]
    }
}

/// A field given by a closure.
pub struct FnField<F> {
    f: F,
    geometry: Geometry,
    centers: Vec<f64>,
}

impl<F: Fn(f64, f64) -> f64 + Sync> FnField<F> {
    pub fn new(geometry: Geometry, centers: Vec<f64>, f: F) -> Self {
        FnField { f, geometry, centers }
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> Field for FnField<F> {
    fn value(&self, y: f64, s: f64) -> f64 {
        (self.f)(y, s)
    }

    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn centers(&self) -> &[f64] {
        &self.centers
    }
}

/// Nodal values stored as ratios ρ = u/E against an envelope. Between nodes
/// ln ρ is interpolated bilinearly in (y, t) (plain bilinear ρ if a ratio
/// vanishes); ρ is held constant before the first time node and beyond the
/// outermost spatial nodes.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub grid: Arc<SpaceTimeGrid>,
    pub envelope: Arc<Envelope>,
    pub ratios: Vec<f64>,
    log_ratios: Vec<f64>,
}

/// Envelope values below this are treated as zero.
const TINY: f64 = 1e-280;

impl DiscreteField {
    pub fn from_ratios(grid: Arc<SpaceTimeGrid>, envelope: Arc<Envelope>, ratios: Vec<f64>) -> Result<Self> {
        if ratios.len() != grid.len() {
            return Err(Error::param(format!("{} ratios for a grid of {} nodes", ratios.len(), grid.len())));
        }
        if ratios.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::param("ratios must be finite and nonnegative"));
        }
        let log_ratios = ratios.iter().map(|r| r.ln()).collect();
        Ok(DiscreteField { grid, envelope, ratios, log_ratios })
    }

    /// Field with nodal values `values` (time-major).
    pub fn from_values(grid: Arc<SpaceTimeGrid>, envelope: Arc<Envelope>, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        let ratios = (0..grid.len())
            .map(|k| {
                let e = Self::envelope_at(&grid, &envelope, k);
                if e > TINY {
                    values[k] / e
                } else {
                    1.0
                }
            })
            .collect();
        Self::from_ratios(grid, envelope, ratios)
    }

    /// The envelope itself (ρ ≡ 1).
    pub fn envelope_field(grid: Arc<SpaceTimeGrid>, envelope: Arc<Envelope>) -> Self {
        let n = grid.len();
        Self::from_ratios(grid, envelope, vec![1.0; n]).expect("unit ratios")
    }

    fn envelope_at(grid: &SpaceTimeGrid, env: &Envelope, k: usize) -> f64 {
        let (y, t) = grid.node(k);
        env.value_reduced(y, t)
    }

    pub fn envelope_values(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|k| Self::envelope_at(&self.grid, &self.envelope, k)).collect()
    }

    pub fn node_values(&self) -> Vec<f64> {
        self.envelope_values().iter().zip(&self.ratios).map(|(e, r)| e * r).collect()
    }

    pub fn sup_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(0.0, f64::max)
    }

    #[inline]
    fn bracket(nodes: &[f64], v: f64) -> (usize, f64) {
        let n = nodes.len();
        if v <= nodes[0] {
            return (0, 0.0);
        }
        if v >= nodes[n - 1] {
            return (n - 2, 1.0);
        }
        let i = nodes.partition_point(|x| *x <= v) - 1;
        (i, (v - nodes[i]) / (nodes[i + 1] - nodes[i]))
    }

    /// ρ at reduced coordinate y for a time bracket (j0, j1, λ).
    #[inline]
    fn ratio_in(&self, y: f64, j0: usize, j1: usize, lam: f64) -> f64 {
        let nx = self.grid.nx();
        let (i, mu) = Self::bracket(&self.grid.space, y);
        let row = |j: usize| (self.ratios[j * nx + i], self.ratios[j * nx + i + 1], self.log_ratios[j * nx + i], self.log_ratios[j * nx + i + 1]);
        let (a1, b1, la1, lb1) = row(j1);
        let (a0, b0, la0, lb0) = row(j0);
        if a0 > 0.0 && b0 > 0.0 && a1 > 0.0 && b1 > 0.0 {
            let l0 = la0 + mu * (lb0 - la0);
            let l1 = la1 + mu * (lb1 - la1);
            (l0 + lam * (l1 - l0)).exp()
        } else {
            let r0 = a0 + mu * (b0 - a0);
            let r1 = a1 + mu * (b1 - a1);
            r0 + lam * (r1 - r0)
        }
    }

    #[inline]
    fn time_bracket(&self, s: f64) -> (usize, usize, f64) {
        let t = &self.grid.time;
        if t.len() == 1 {
            return (0, 0, 0.0);
        }
        let (j, lam) = Self::bracket(t, s);
        (j, j + 1, lam)
    }
}

impl Field for DiscreteField {
    fn value(&self, y: f64, s: f64) -> f64 {
        let e = self.envelope.value_reduced(y, s);
        if e <= TINY {
            return 0.0;
        }
        let (j0, j1, lam) = self.time_bracket(s);
        e * self.ratio_in(y, j0, j1, lam)
    }

    fn fill(&self, s: f64, ys: &[f64], out: &mut [f64]) {
        let (j0, j1, lam) = self.time_bracket(s);
        self.envelope.fill_reduced(s, ys, out);
        for (o, &y) in out.iter_mut().zip(ys) {
            *o = if *o <= TINY { 0.0 } else { *o * self.ratio_in(y, j0, j1, lam) };
        }
    }

    fn geometry(&self) -> Geometry {
        self.grid.geometry
    }

    fn centers(&self) -> &[f64] {
        &self.grid.centers
    }

    fn space_breaks(&self) -> &[f64] {
        &self.grid.space
    }

    fn time_breaks(&self) -> &[f64] {
        &self.grid.time
    }
}
