//! One-dimensional quadrature primitives: cached Gauss–Legendre rules and a
//! globally adaptive Gauss–Kronrod (7/15) integrator with user breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    fn legendre(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_pair(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_pair(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Integrate `f` over [a, b].
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const MAX_CACHED: usize = 128;

/// Gauss–Legendre rule of order `n` (1..=128), computed once and cached.
pub fn gauss_legendre(n: usize) -> &'static GaussRule {
    static CACHE: OnceLock<Vec<OnceLock<GaussRule>>> = OnceLock::new();
    assert!((1..=MAX_CACHED).contains(&n), "Gauss-Legendre order out of range");
    let cache = CACHE.get_or_init(|| (0..=MAX_CACHED).map(|_| OnceLock::new()).collect());
    cache[n].get_or_init(|| GaussRule::legendre(n))
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 7/15 panel: (kronrod value, |kronrod - gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-10, abs: 1e-300, max_intervals: 2000 }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64, max_intervals: usize) -> Self {
        Tolerance { rel, abs, max_intervals }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

impl Estimate {
    pub fn zero() -> Self {
        Estimate { value: 0.0, error: 0.0, evals: 0, converged: true }
    }

    pub fn add(self, other: Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            evals: self.evals + other.evals,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(self, s: f64) -> Estimate {
        Estimate { value: self.value * s, error: self.error * s.abs(), ..self }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error.total_cmp(&o.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive integration of `f` over the piecewise interval defined
/// by the sorted `points` (at least two). Interior points act as breakpoints.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], tol: Tolerance) -> Estimate {
    let mut pts: Vec<f64> = points.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return Estimate::zero();
    }
    let mut heap = BinaryHeap::new();
    let (mut total, mut err, mut evals) = (0.0, 0.0, 0usize);
    for w in pts.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        total += v;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    let mut count = heap.len();
    loop {
        if !total.is_finite() {
            return Estimate { value: total, error: f64::INFINITY, evals, converged: false };
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if count >= tol.max_intervals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(Panel { error: 0.0, ..worst });
            err = heap.iter().map(|p| p.error).sum();
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, error: e2 });
        count += 1;
        if count % 64 == 0 {
            // Re-sum to keep running totals honest.
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
    total = heap.iter().map(|p| p.value).sum();
    err = heap.iter().map(|p| p.error).sum();
    Estimate {
        value: total,
        error: err,
        evals,
        converged: err <= tol.abs.max(tol.rel * total.abs()),
    }
}

/// Integrate over [a, ∞) through the map x = a + u/(1-u).
pub fn adaptive_to_infinity<F: FnMut(f64) -> f64>(f: F, a: f64, points: &[f64], tol: Tolerance) -> Estimate {
    adaptive_to_infinity_graded(f, a, 1.0, 1.0, points, tol)
}

/// Integrate over [a, ∞) through x = a + L·u/(1-u)^q. For integrands decaying
/// like x^{-1-δ}, q ≥ 1/δ keeps the mapped integrand bounded at u = 1.
pub fn adaptive_to_infinity_graded<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    q: f64,
    points: &[f64],
    tol: Tolerance,
) -> Estimate {
    let map = |u: f64| -> (f64, f64) {
        let v = 1.0 - u;
        let x = a + scale * u * v.powf(-q);
        let dx = scale * (v.powf(-q) + q * u * v.powf(-q - 1.0));
        (x, dx)
    };
    let mut us: Vec<f64> = vec![0.0, 1.0];
    for &x in points {
        if x > a && x.is_finite() {
            // Invert the map by bisection; it is monotone in u.
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if map(m).0 < x {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            us.push(0.5 * (lo + hi));
        }
    }
    adaptive(
        |u| {
            let (x, dx) = map(u);
            if !x.is_finite() || !dx.is_finite() {
                return 0.0;
            }
            let y = f(x);
            if y == 0.0 {
                0.0
            } else {
                y * dx
            }
        },
        &us,
        tol,
    )
}
