//! `P₂(ℝ)` in quantile coordinates with the Boltzmann entropy.
//!
//! A measure is represented by its quantile function sampled at the
//! midpoints `s_i = (i − ½)/m`, so a point is a nondecreasing vector
//! `X ∈ ℝ^m` and `d²(X, Y) = Σ Δs (X_i − Y_i)²` with `Δs = 1/m`. The
//! entropy is discretized on the `m − 1` increments,
//!
//! ```text
//! H(X) = −Σ_{i<m} Δs · log((X_{i+1} − X_i) / Δs),
//! ```
//!
//! which is a sum of `−log` of affine maps and hence convex in `X`.
//! Increments below `γ_min` give `H = +∞`.
//!
//! The flow is the minimizing-movement scheme
//! `X ← argmin_Y H(Y) + d²(X, Y)/(2τ)` solved by damped Newton on the
//! tridiagonal Hessian.

use rand::Rng;

use super::{
    check_time, check_weights, weighted_mean, weighted_sq_dist, EnergySpace, FlowAccuracy,
    FlowResult, LowerBound, Slope,
};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

pub const DEFAULT_TAU: f64 = 1e-3;
pub const DEFAULT_GAMMA_MIN: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 200;
const NEWTON_GRAD_TOL: f64 = 1e-10;

/// Iteration statistics of one proximal step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximalStats<T> {
    pub iterations: usize,
    /// Upper bound on the metric distance between the returned iterate and
    /// the exact resolvent, from strong convexity of the step objective.
    pub residual_distance: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileEntropy<T> {
    m: usize,
    tau: T,
    gamma_min: T,
}

impl<T: Real> QuantileEntropy<T> {
    pub fn new(m: usize, tau: T) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("need m >= 2 samples, got {m}")));
        }
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("proximal step {tau} must be positive")));
        }
        Ok(Self {
            m,
            tau,
            gamma_min: T::lit(DEFAULT_GAMMA_MIN),
        })
    }

    pub fn with_gamma_min(mut self, gamma_min: T) -> Self {
        self.gamma_min = gamma_min;
        self
    }

    pub fn samples(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn gamma_min(&self) -> T {
        self.gamma_min
    }

    /// Same plugin with a different proximal step.
    pub fn with_tau(&self, tau: T) -> Result<Self> {
        Ok(Self::new(self.m, tau)?.with_gamma_min(self.gamma_min))
    }

    /// `Δs = 1/m`.
    pub fn ds(&self) -> T {
        T::one() / T::from_usize_exact(self.m)
    }

    /// Quantile samples of `Uniform[a, b]`: `a + (b − a)(i − ½)/m`.
    pub fn uniform_sample(&self, a: T, b: T) -> Vec<T> {
        let m = T::from_usize_exact(self.m);
        (0..self.m)
            .map(|i| a + (b - a) * (T::from_usize_exact(i) + T::lit(0.5)) / m)
            .collect()
    }

    /// Quantile samples of `Uniform[0, 1]`, the zero of the entropy.
    pub fn identity_sample(&self) -> Vec<T> {
        self.uniform_sample(T::zero(), T::one())
    }

    /// Metric gradient `1/δ_j − 1/δ_{j−1}` (missing terms are zero), or
    /// `None` outside the open monotone cone.
    fn metric_gradient(&self, x: &[T]) -> Option<Vec<T>> {
        let inv: Vec<T> = x.windows(2).map(|w| T::one() / (w[1] - w[0])).collect();
        if inv.iter().any(|v| !(v.is_finite() && *v > T::zero())) {
            return None;
        }
        Some(
            (0..self.m)
                .map(|j| {
                    let right = if j + 1 < self.m { inv[j] } else { T::zero() };
                    let left = if j > 0 { inv[j - 1] } else { T::zero() };
                    right - left
                })
                .collect(),
        )
    }

    /// Step objective `|Y − X|²/(2τ) − Σ log δ_i(Y)` (the entropy divided by
    /// `Δs`, constants dropped). `None` if `Y` leaves the open cone.
    #[cfg(test)]
    fn step_objective(x: &[T], y: &[T], tau: T) -> Option<T> {
        let mut f = weighted_sq_dist(x, y, T::one()) / (T::lit(2.0) * tau);
        for w in y.windows(2) {
            let d = w[1] - w[0];
            if !(d > T::zero()) {
                return None;
            }
            f = f - d.ln();
        }
        Some(f)
    }

    /// One resolvent step `argmin_Y H(Y) + d²(X, Y)/(2τ)`.
    ///
    /// The step objective is a quadratic plus a sum of `−log` of affine maps,
    /// hence standard self-concordant: the damped Newton step `1/(1 + λ)`
    /// (with `λ` the Newton decrement) keeps every iterate inside the open
    /// cone and needs no line search. Full steps are taken once `λ < ¼`.
    pub fn proximal_step(&self, x: &[T], tau: T) -> Result<(Vec<T>, ProximalStats<T>)> {
        let m = self.m;
        let mut y = x.to_vec();
        if y.windows(2).any(|w| !(w[1] - w[0] > T::zero())) {
            // Start from a strictly increasing neighbour of a degenerate input.
            let c = (T::lit(2.0) * tau).sqrt() / T::from_usize_exact(m);
            let mid = T::from_usize_exact(m - 1) * T::lit(0.5);
            for (j, v) in y.iter_mut().enumerate() {
                *v = *v + c * (T::from_usize_exact(j) - mid);
            }
        }
        let inv_tau = T::one() / tau;
        let mut inv = vec![T::zero(); m - 1];
        let mut grad = vec![T::zero(); m];
        let mut diag = vec![T::zero(); m];
        let mut off = vec![T::zero(); m - 1];
        let mut step = vec![T::zero(); m];
        let mut scratch = vec![T::zero(); 2 * m];
        let mut grad_norm = T::infinity();
        for it in 0..NEWTON_MAX_ITER {
            for (v, w) in inv.iter_mut().zip(y.windows(2)) {
                *v = T::one() / (w[1] - w[0]);
            }
            let mut scale = T::one();
            let mut grad_max = T::zero();
            for j in 0..m {
                let right = if j + 1 < m { inv[j] } else { T::zero() };
                let left = if j > 0 { inv[j - 1] } else { T::zero() };
                let fid = (y[j] - x[j]) * inv_tau;
                grad[j] = fid + right - left;
                scale = scale.max(fid.abs()).max(right).max(left);
                grad_max = grad_max.max(grad[j].abs());
                diag[j] = inv_tau + right * right + left * left;
            }
            for (o, v) in off.iter_mut().zip(&inv) {
                *o = -(*v * *v);
            }
            grad_norm = grad.iter().map(|g| *g * *g).sum::<T>().sqrt();
            if grad_max <= T::lit(NEWTON_GRAD_TOL) * scale {
                let residual = self.ds().sqrt() * tau * grad_norm;
                return Ok((
                    y,
                    ProximalStats {
                        iterations: it,
                        residual_distance: residual,
                    },
                ));
            }
            solve_tridiagonal(&diag, &off, &grad, &mut step, &mut scratch);
            let decrement = grad
                .iter()
                .zip(&step)
                .map(|(g, s)| *g * *s)
                .sum::<T>()
                .max(T::zero())
                .sqrt();
            let alpha = if decrement < T::lit(0.25) {
                T::one()
            } else {
                T::one() / (T::one() + decrement)
            };
            for (yj, sj) in y.iter_mut().zip(&step) {
                *yj = *yj - alpha * *sj;
            }
        }
        Err(Error::ProximalNonConvergence {
            iterations: NEWTON_MAX_ITER,
            gradient: grad_norm.as_f64(),
        })
    }
}

/// Solves the symmetric tridiagonal system with diagonal `diag` and
/// off-diagonal `off` (Thomas algorithm; the matrix is diagonally dominant).
fn solve_tridiagonal<T: Real>(diag: &[T], off: &[T], rhs: &[T], out: &mut [T], scratch: &mut [T]) {
    let n = diag.len();
    let (c, d) = scratch.split_at_mut(n);
    let mut denom = diag[0];
    if n > 1 {
        c[0] = off[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    out[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
}

impl<T: Real> EnergySpace<T> for QuantileEntropy<T> {
    type Point = Vec<T>;

    fn id(&self) -> &'static str {
        "quantile-entropy"
    }

    fn validate(&self, p: &Vec<T>) -> Result<()> {
        if p.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint("non-finite quantile sample".into()));
        }
        if p.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidPoint("quantile samples must be nondecreasing".into()));
        }
        Ok(())
    }

    fn distance(&self, p: &Vec<T>, q: &Vec<T>) -> Result<T> {
        self.validate(p)?;
        self.validate(q)?;
        Ok(weighted_sq_dist(p, q, self.ds()).sqrt())
    }

    fn energy(&self, p: &Vec<T>) -> Result<T> {
        self.validate(p)?;
        let ds = self.ds();
        let mut h = T::zero();
        for w in p.windows(2) {
            let inc = w[1] - w[0];
            if inc < self.gamma_min {
                return Ok(T::infinity());
            }
            h = h - ds * (inc / ds).ln();
        }
        Ok(h)
    }

    fn slope(&self, p: &Vec<T>) -> Result<Slope<T>> {
        if !self.energy(p)?.is_finite() {
            return Err(Error::OutsideDomain);
        }
        let g = self.metric_gradient(p).ok_or(Error::OutsideDomain)?;
        Ok(Slope {
            value: weighted_sq_dist(&g, &vec![T::zero(); self.m], self.ds()).sqrt(),
            exact: true,
        })
    }

    fn flow(&self, p: &Vec<T>, t: T) -> Result<FlowResult<T, Vec<T>>> {
        self.validate(p)?;
        check_time(t)?;
        if t == T::zero() {
            return Ok(FlowResult {
                endpoint: p.clone(),
                elapsed: t,
                substeps: 0,
                accuracy_bound: T::zero(),
            });
        }
        let k = (t / self.tau).ceil().to_usize().unwrap_or(1).max(1);
        let step = t / T::from_usize_exact(k);
        // Optimal minimizing-movement estimate for λ = 0 convex energies:
        // d(X_τ(t), S_t X) ≤ τ |∂E|(X) / √2.
        let mut bound = match self.slope(p) {
            Ok(s) => step * s.value / T::lit(2.0).sqrt(),
            Err(_) => T::infinity(),
        };
        let mut x = p.clone();
        for _ in 0..k {
            let (y, stats) = self.proximal_step(&x, step)?;
            bound = bound + stats.residual_distance;
            x = y;
        }
        Ok(FlowResult {
            endpoint: x,
            elapsed: t,
            substeps: k,
            accuracy_bound: bound,
        })
    }

    fn barycenter(&self, points: &[Vec<T>], weights: &[T]) -> Result<Vec<T>> {
        check_weights(points.len(), weights)?;
        for p in points {
            self.validate(p)?;
        }
        Ok(weighted_mean(points, weights))
    }

    fn lower_bound_witness(&self) -> LowerBound<T, Vec<T>> {
        LowerBound {
            alpha: T::zero(),
            beta: T::lit(2.0) / self.ds().sqrt(),
            anchor: self.identity_sample(),
        }
    }

    fn linear_barycenter(&self) -> bool {
        true
    }

    fn flow_accuracy(&self) -> FlowAccuracy<T> {
        FlowAccuracy::Proximal { tau: self.tau }
    }

    /// Offset uniform on `[−1, 1]`, increments `Δs·U[0.2, 2]`.
    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let ds = 1.0 / self.m as f64;
        let mut x = rng::uniform(rng, -1.0, 1.0);
        let mut out = Vec::with_capacity(self.m);
        out.push(T::lit(x));
        for _ in 1..self.m {
            x += ds * rng::uniform(rng, 0.2, 2.0);
            out.push(T::lit(x));
        }
        out
    }

    /// Random metric-sphere displacement, re-sorted to stay monotone.
    fn perturb<R: Rng + ?Sized>(&self, p: &Vec<T>, radius: T, rng: &mut R) -> Vec<T> {
        let dir: Vec<f64> = (0..self.m).map(|_| rng::uniform(rng, -1.0, 1.0)).collect();
        let len = (dir.iter().map(|x| x * x).sum::<f64>() / self.m as f64)
            .sqrt()
            .max(1e-300);
        let mut q: Vec<T> = p
            .iter()
            .zip(&dir)
            .map(|(x, d)| *x + radius * T::lit(d / len))
            .collect();
        q.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        q
    }
}
