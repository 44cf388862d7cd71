//! Convergence of the nonlocal bilinear form
//! `ε^{−(d+2)} ∬_{|x−y|≤ε} (f(y) − f(x))(g(y) − g(x))` to `C_d ∫ ∇f·∇g`.

use serde_json::json;

use super::InequalityReport;
use crate::dirichlet::c_d;
use crate::error::{Error, Result};
use crate::field::GridDomain;
use crate::parallel;
use crate::scalar::Real;

fn offsets_within(reach: f64, dim: usize) -> (isize, isize, f64) {
    let r = (reach + 1e-9).floor() as isize;
    let rj = if dim == 2 { r } else { 0 };
    (r, rj, reach * reach * (1.0 + 1e-12))
}

/// Ratio `C_d / M_h(ε)`, where `M_h(ε) = ε^{−(d+2)} Σ_{|z|≤ε} h^d z₁²` is the
/// lattice second moment of the kernel. Scaling the form by it makes the
/// lattice sum integrate `(a·z)²` over the ball exactly, removing the
/// lattice-point error of the indicator while leaving the boundary layer.
pub fn moment_correction<T: Real>(domain: &GridDomain<T>, eps: T) -> f64 {
    let h = domain.h().as_f64();
    let e = eps.as_f64();
    let (r, rj, r2) = offsets_within(e / h, domain.dim());
    let mut m = 0.0;
    for dj in -rj..=rj {
        for di in -r..=r {
            if ((di * di + dj * dj) as f64) <= r2 {
                m += (di as f64 * h).powi(2);
            }
        }
    }
    m *= h.powi(domain.dim() as i32) / e.powi(domain.dim() as i32 + 2);
    c_d(domain.dim()) / m
}

/// The nonlocal form at radius `eps` by trapezoidal quadrature over node
/// pairs with the raw indicator kernel, summed in node order.
pub fn ipp_form<T: Real>(domain: &GridDomain<T>, f: &[T], g: &[T], eps: T) -> T {
    let d = domain;
    let (r, rj, r2) = offsets_within((eps / d.h()).as_f64(), d.dim());
    let n = d.n() as isize;
    let weights: Vec<T> = (0..d.len()).map(|k| d.volume_weight(k)).collect();
    let rows = parallel::map_indexed(d.len(), |k| {
        let [i, j] = d.multi_index(k);
        let (i, j) = (i as isize, j as isize);
        let mut acc = T::zero();
        for dj in -rj..=rj {
            let b = j + dj;
            if b < 0 || b >= n {
                continue;
            }
            for di in -r..=r {
                let a = i + di;
                if a < 0 || a >= n || ((di * di + dj * dj) as f64) > r2 {
                    continue;
                }
                let y = d.node(a as usize, b as usize);
                acc = acc + weights[y] * (f[y] - f[k]) * (g[y] - g[k]);
            }
        }
        acc * weights[k]
    });
    let total: T = rows.into_iter().sum();
    total / eps.powi(d.dim() as i32 + 2)
}

/// Second-order finite-difference gradient: central inside, one-sided
/// `(−3f₀ + 4f₁ − f₂)/(2h)` on the boundary. Exact for quadratics.
fn fd_gradient<T: Real>(d: &GridDomain<T>, f: &[T], k: usize, axis: usize) -> T {
    let idx = d.multi_index(k);
    let at = |s: isize| {
        let mut m = idx;
        m[axis] = (m[axis] as isize + s) as usize;
        f[d.node(m[0], m[1])]
    };
    let two_h = T::lit(2.0) * d.h();
    let last = d.n() - 1;
    if idx[axis] == 0 {
        (T::lit(-3.0) * at(0) + T::lit(4.0) * at(1) - at(2)) / two_h
    } else if idx[axis] == last {
        (T::lit(3.0) * at(0) - T::lit(4.0) * at(-1) + at(-2)) / two_h
    } else {
        (at(1) - at(-1)) / two_h
    }
}

/// `C_d ∫ ∇f·∇g` by trapezoidal quadrature with second-order differences.
pub fn ipp_target<T: Real>(domain: &GridDomain<T>, f: &[T], g: &[T]) -> T {
    let d = domain;
    let mut acc = T::zero();
    for k in 0..d.len() {
        let dot: T = (0..d.dim()).map(|a| fd_gradient(d, f, k, a) * fd_gradient(d, g, k, a)).sum();
        acc = acc + d.volume_weight(k) * dot;
    }
    T::lit(c_d(d.dim())) * acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct IppStudy {
    /// Decreasing.
    pub eps: Vec<f64>,
    /// Moment-corrected form values, compared with the target.
    pub values: Vec<f64>,
    /// Raw indicator-kernel values, for reference.
    pub raw_values: Vec<f64>,
    pub target: f64,
    pub errors: Vec<f64>,
    /// `log(e_i/e_{i+1}) / log(ε_i/ε_{i+1})` for consecutive radii.
    pub orders: Vec<f64>,
}

impl IppStudy {
    pub fn monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `lhs` is the error at the smallest radius, `rhs` at the largest;
    /// passes when errors decrease strictly.
    pub fn report(&self, name: &str) -> InequalityReport {
        let mut r = InequalityReport::new(
            "ipp_convergence",
            *self.errors.last().unwrap_or(&0.0),
            *self.errors.first().unwrap_or(&0.0),
            0.0,
        );
        r.passed = self.monotone();
        r.meta("pair", json!(name));
        r.meta("eps", json!(self.eps));
        r.meta("values", json!(self.values));
        r.meta("raw_values", json!(self.raw_values));
        r.meta("target", json!(self.target));
        r.meta("errors", json!(self.errors));
        r.meta("orders", json!(self.orders));
        r
    }

    /// `(ε, |error|)` rows, ε descending.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        self.eps.iter().copied().zip(self.errors.iter().copied()).collect()
    }
}

/// Evaluates the moment-corrected form for each radius in `eps_list`
/// (decreasing, each `≥ 4h`) against the quadrature target.
pub fn check_ipp_convergence<T: Real>(
    domain: &GridDomain<T>,
    f: impl Fn([T; 2]) -> T,
    g: impl Fn([T; 2]) -> T,
    eps_list: &[f64],
) -> Result<IppStudy> {
    let h = domain.h().as_f64();
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("eps list must be non-empty and decreasing".into()));
    }
    if let Some(&e) = eps_list.iter().find(|&&e| e < 4.0 * h * (1.0 - 1e-12)) {
        return Err(Error::InvalidParameter(format!("eps = {e} is below 4h = {}", 4.0 * h)));
    }
    let fv: Vec<T> = (0..domain.len()).map(|k| f(domain.coords(k))).collect();
    let gv: Vec<T> = (0..domain.len()).map(|k| g(domain.coords(k))).collect();
    let target = ipp_target(domain, &fv, &gv).as_f64();
    let raw_values: Vec<f64> = eps_list
        .iter()
        .map(|&e| ipp_form(domain, &fv, &gv, T::lit(e)).as_f64())
        .collect();
    let values: Vec<f64> = eps_list
        .iter()
        .zip(&raw_values)
        .map(|(&e, v)| v * moment_correction(domain, T::lit(e)))
        .collect();
    let errors: Vec<f64> = values.iter().map(|v| (v - target).abs()).collect();
    let orders = (1..errors.len())
        .map(|i| (errors[i - 1] / errors[i]).ln() / (eps_list[i - 1] / eps_list[i]).ln())
        .collect();
    Ok(IppStudy {
        eps: eps_list.to_vec(),
        values,
        raw_values,
        target,
        errors,
        orders,
    })
}
