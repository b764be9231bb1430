use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::TermKind;
use crate::solver::ProblemSpec;

/// How points are reduced to one coordinate: the line itself (N = 1) or the
/// radius (N ≥ 2, all singular structure at the origin).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Line,
    Radial,
}

impl Geometry {
    /// Geometry and reduced cluster centers: the Hardy point, data centers
    /// and the edges of cut-off terms.
    pub fn for_problem(problem: &ProblemSpec) -> Result<(Geometry, Vec<f64>)> {
        let n = problem.kernel.dim;
        let data = problem.u0.singular_centers();
        let cuts: Vec<(f64, f64)> = problem
            .u0
            .terms
            .iter()
            .filter(|t| t.amplitude != 0.0)
            .filter_map(|t| match t.kind {
                TermKind::Logpower { cutoff, .. } => Some((t.center.first().copied().unwrap_or(0.0), cutoff)),
                _ => None,
            })
            .collect();
        let mut c: Vec<f64> = vec![0.0];
        let geometry = if n == 1 {
            c.extend(data.iter().map(|v| v[0]));
            for &(z, r) in &cuts {
                c.push(z - r);
                c.push(z + r);
            }
            Geometry::Line
        } else {
            if data.iter().any(|v| v.iter().any(|x| *x != 0.0)) {
                return Err(Error::Unsupported(format!(
                    "space-time fields in dimension {n} need every singular center at the origin"
                )));
            }
            c.extend(cuts.iter().map(|&(_, r)| r));
            Geometry::Radial
        };
        c.sort_by(f64::total_cmp);
        c.dedup();
        Ok((geometry, c))
    }

    /// Full-space point for a reduced coordinate.
    pub fn point(self, y: f64, dim: usize) -> Vec<f64> {
        let mut p = vec![0.0; dim];
        p[0] = y;
        p
    }

    /// Reduced coordinate of a full-space point.
    pub fn reduce(self, x: &[f64]) -> f64 {
        match self {
            Geometry::Line => x[0],
            Geometry::Radial => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Resolution of a [`SpaceTimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Geometric levels (ratio 0.5) on each side of every cluster center.
    pub levels: usize,
    /// Geometrically spaced nodes beyond the outermost clusters.
    pub outer: usize,
    pub time_nodes: usize,
    /// Exponent q in t_j = T (j/M)^q.
    pub time_grading: f64,
    /// Distance covered by the outer nodes; default 8·T^{1/θ} + 2.
    pub extent: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { levels: 10, outer: 6, time_nodes: 16, time_grading: 2.0, extent: None }
    }
}

impl GridSpec {
    /// Next refinement level: two more geometric levels, one more outer
    /// node and 50% more time nodes.
    pub fn refined(&self) -> Self {
        GridSpec {
            levels: self.levels + 2,
            outer: self.outer + 1,
            time_nodes: self.time_nodes + self.time_nodes.div_ceil(2),
            ..self.clone()
        }
    }
}

/// Tensor grid of reduced spatial nodes and times in (0, T].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub geometry: Geometry,
    pub dim: usize,
    pub space: Vec<f64>,
    pub time: Vec<f64>,
    /// Cluster centers; never nodes.
    pub centers: Vec<f64>,
    pub horizon: f64,
    pub spec: GridSpec,
}

impl SpaceTimeGrid {
    pub fn build(problem: &ProblemSpec, spec: &GridSpec) -> Result<Self> {
        problem.validate()?;
        if spec.levels < 1 || spec.time_nodes < 2 || !(spec.time_grading >= 1.0) {
            return Err(Error::param("grid needs levels >= 1, time_nodes >= 2, time_grading >= 1"));
        }
        let (geometry, centers) = Geometry::for_problem(problem)?;
        let horizon = problem.effective_horizon();
        let theta = problem.kernel.theta();
        let extent = spec.extent.unwrap_or(8.0 * horizon.powf(1.0 / theta) + 2.0);
        if !(extent > 0.0) {
            return Err(Error::param("grid extent must be positive"));
        }
        let mut space = Vec::new();
        let half_gap = |i: usize| -> f64 {
            let mut d = f64::INFINITY;
            if i > 0 {
                d = d.min(0.5 * (centers[i] - centers[i - 1]));
            }
            if i + 1 < centers.len() {
                d = d.min(0.5 * (centers[i + 1] - centers[i]));
            }
            if d.is_finite() {
                d
            } else {
                1f64.min(extent)
            }
        };
        for (i, &c) in centers.iter().enumerate() {
            let d = half_gap(i);
            for j in 0..spec.levels {
                let h = d * 0.5f64.powi(j as i32);
                space.push(c + h);
                if geometry == Geometry::Line || c - h > 0.0 {
                    space.push(c - h);
                }
            }
        }
        let lo_edge = centers[0] - half_gap(0);
        let hi_edge = centers[centers.len() - 1] + half_gap(centers.len() - 1);
        let denom = 2f64.powi(spec.outer as i32) - 1.0;
        for k in 1..=spec.outer {
            let off = extent * (2f64.powi(k as i32) - 1.0) / denom;
            space.push(hi_edge + off);
            if geometry == Geometry::Line {
                space.push(lo_edge - off);
            }
        }
        space.sort_by(f64::total_cmp);
        space.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        if space.len() < 2 {
            return Err(Error::param("grid needs at least two spatial nodes"));
        }
        let m = spec.time_nodes;
        let time: Vec<f64> = if problem.horizon.is_finite() {
            (1..=m).map(|j| horizon * (j as f64 / m as f64).powf(spec.time_grading)).collect()
        } else {
            // Log-graded over six decades below the horizon.
            (1..=m).map(|j| horizon * 10f64.powf(-6.0 * (m - j) as f64 / (m - 1) as f64)).collect()
        };
        Ok(SpaceTimeGrid { geometry, dim: problem.kernel.dim, space, time, centers, horizon, spec: spec.clone() })
    }

    pub fn nx(&self) -> usize {
        self.space.len()
    }

    pub fn nt(&self) -> usize {
        self.time.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.nt()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (spatial index, time index) of flat node k (time-major).
    pub fn index(&self, k: usize) -> (usize, usize) {
        (k % self.nx(), k / self.nx())
    }

    /// Reduced coordinate and time of flat node k.
    pub fn node(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.index(k);
        (self.space[i], self.time[j])
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.geometry.point(self.space[i], self.dim)
    }
}
