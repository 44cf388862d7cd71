//! The Poisson dual `−Δψ = 1, ψ|∂Ω = 0` and the integrability bounds built
//! on it.

use serde_json::json;

use super::{grid_meta, harmonic_meta, pullback, InequalityReport, ScalarField, C_QUAD};
use crate::error::{Error, Result};
use crate::field::{Field, GridDomain};
use crate::scalar::Real;
use crate::space::EnergySpace;

/// Relative residual at which conjugate gradients stops. Tighter than needed
/// for 1e-10 so that the one-dimensional solve is exact to rounding.
pub const CG_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution<T> {
    pub psi: ScalarField<T>,
    /// `(node, −∂ψ/∂𝗇)` at boundary nodes that carry a normal.
    pub flux: Vec<(usize, T)>,
    pub iterations: usize,
    pub relative_residual: f64,
}

impl<T: Real> PoissonSolution<T> {
    /// `C_Ω = max −∂ψ/∂𝗇`.
    pub fn c_omega(&self) -> T {
        self.flux.iter().map(|f| f.1).fold(T::neg_infinity(), T::max)
    }

    /// `∫_{∂Ω} −∂ψ/∂𝗇 dσ`, equal to `|Ω|` up to O(h).
    pub fn flux_integral(&self) -> T {
        let d = &self.psi.domain;
        self.flux.iter().map(|&(k, g)| d.boundary_weight(k) * g).sum()
    }
}

/// `x ↦ h²·(−Δ_h x)` on interior unknowns, boundary values zero.
fn apply<T: Real>(d: &GridDomain<T>, pos: &[Option<usize>], interior: &[usize], x: &[T], out: &mut [T]) {
    let two_d = T::from_usize_exact(2 * d.dim());
    for (row, &k) in interior.iter().enumerate() {
        let mut acc = two_d * x[row];
        for y in d.neighbors(k) {
            if let Some(col) = pos[y] {
                acc = acc - x[col];
            }
        }
        out[row] = acc;
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Conjugate gradients on the 5-point (3-point) Laplace system, then the
/// one-sided second-order normal derivative `−∂ψ/∂𝗇 ≈ (4ψ₁ − ψ₂)/(2h)`.
pub fn solve_poisson_unit<T: Real>(domain: &GridDomain<T>) -> Result<PoissonSolution<T>> {
    let d = domain;
    let interior = d.interior();
    let mut pos = vec![None; d.len()];
    for (row, &k) in interior.iter().enumerate() {
        pos[k] = Some(row);
    }
    let m = interior.len();
    let h2 = d.h() * d.h();
    let b = vec![h2; m];
    let mut x = vec![T::zero(); m];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![T::zero(); m];
    let b_norm = dot(&b, &b).sqrt();
    let mut rr = dot(&r, &r);
    let max_iter = 10 * m + 10;
    let mut it = 0;
    while rr.sqrt() > T::lit(CG_TOL) * b_norm {
        if it >= max_iter {
            return Err(Error::CgNonConvergence {
                iterations: it,
                residual: (rr.sqrt() / b_norm).as_f64(),
            });
        }
        apply(d, &pos, &interior, &p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..m {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for i in 0..m {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
        it += 1;
    }
    let mut psi = vec![T::zero(); d.len()];
    for (row, &k) in interior.iter().enumerate() {
        psi[k] = x[row];
    }
    let mut flux = Vec::new();
    for k in d.boundary() {
        let Some(nrm) = d.normal(k) else { continue };
        let [i, j] = d.multi_index(k);
        // Step one and two nodes inward along the normal axis.
        let step = |s: usize| {
            let mut idx = [i, j];
            idx[nrm.axis] = if nrm.sign < 0 { idx[nrm.axis] + s } else { idx[nrm.axis] - s };
            d.node(idx[0], idx[1])
        };
        let g = (T::lit(4.0) * psi[step(1)] - psi[step(2)]) / (T::lit(2.0) * d.h());
        flux.push((k, g));
    }
    debug_assert!(psi.iter().all(|v| *v >= T::lit(-1e-12)));
    debug_assert!(flux.iter().all(|f| f.1 >= T::lit(-1e-8)));
    Ok(PoissonSolution {
        psi: ScalarField {
            domain: *d,
            values: psi,
        },
        flux,
        iterations: it,
        relative_residual: (rr.sqrt() / b_norm).as_f64(),
    })
}

/// `∫_Ω E(u) ≤ C_Ω·∫_{∂Ω} E(u^b)⁺ dσ` with `C_Ω = max −∂ψ/∂𝗇`. Tolerance
/// `C_QUAD·h` relative to the size of both sides.
pub fn check_l1_bound<T: Real, S: EnergySpace<T>>(space: &S, f: &Field<T, S::Point>) -> Result<InequalityReport> {
    let d = f.domain;
    let e = pullback(space, f)?.values;
    let poisson = solve_poisson_unit(&d)?;
    let c = poisson.c_omega().as_f64();
    let lhs: f64 = e.iter().enumerate().map(|(k, v)| (d.volume_weight(k) * *v).as_f64()).sum();
    let boundary: f64 = d
        .boundary()
        .into_iter()
        .map(|k| (d.boundary_weight(k) * e[k].max(T::zero())).as_f64())
        .sum();
    let rhs = c * boundary;
    let mut r = if lhs.is_finite() && rhs.is_finite() {
        InequalityReport::new("l1_bound", lhs, rhs, C_QUAD * d.h().as_f64() * (lhs.abs() + rhs.abs()))
    } else {
        InequalityReport::not_applicable("l1_bound", lhs, rhs, "infinite energy")
    };
    grid_meta(&mut r, &d);
    harmonic_meta(&mut r, space, f)?;
    r.meta("c_omega", json!(c));
    r.meta("flux_integral", json!(poisson.flux_integral().as_f64()));
    Ok(r)
}

/// `‖E(u)⁺‖_{L^p(Ω)}` against `‖E(u^b)⁺‖_{L^q(∂Ω)}` with `p = dq/(d−1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpRatio {
    pub p: f64,
    pub q: f64,
    pub interior_norm: f64,
    pub boundary_norm: f64,
    pub ratio: f64,
}

pub fn lp_ratio<T: Real, S: EnergySpace<T>>(space: &S, f: &Field<T, S::Point>, q: f64) -> Result<LpRatio> {
    let d = f.domain;
    if d.dim() < 2 {
        return Err(Error::UnsupportedDimension(d.dim()));
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("q = {q} must be at least 1")));
    }
    let dim = d.dim() as f64;
    let p = dim * q / (dim - 1.0);
    let e = pullback(space, f)?.values;
    let pos = |k: usize| e[k].as_f64().max(0.0);
    let interior: f64 = (0..d.len()).map(|k| d.volume_weight(k).as_f64() * pos(k).powf(p)).sum();
    let boundary: f64 = d.boundary().into_iter().map(|k| d.boundary_weight(k).as_f64() * pos(k).powf(q)).sum();
    let (a, b) = (interior.powf(1.0 / p), boundary.powf(1.0 / q));
    Ok(LpRatio {
        p,
        q,
        interior_norm: a,
        boundary_norm: b,
        ratio: a / b,
    })
}

/// The Lᵖ gain at one resolution: `lhs = ‖E(u)⁺‖_p`, `rhs = ‖E(u^b)⁺‖_q`.
/// The constant is not explicit, so the report is indicative; stability under
/// refinement is checked by [`check_lp_stability`].
pub fn check_lp_gain<T: Real, S: EnergySpace<T>>(space: &S, f: &Field<T, S::Point>, q: f64) -> Result<InequalityReport> {
    let lp = lp_ratio(space, f, q)?;
    let mut r = InequalityReport::new("lp_gain", lp.interior_norm, lp.boundary_norm, 0.0);
    r.indicative = true;
    grid_meta(&mut r, &f.domain);
    harmonic_meta(&mut r, space, f)?;
    r.meta("p", json!(lp.p));
    r.meta("q", json!(lp.q));
    r.meta("ratio", json!(lp.ratio));
    Ok(r)
}

/// Ratios at two resolutions differ by less than 20% of the coarse one:
/// `lhs = |r_fine − r_coarse|/r_coarse`, `rhs = 0.2`.
pub fn check_lp_stability(coarse: &LpRatio, fine: &LpRatio, n_coarse: usize, n_fine: usize) -> InequalityReport {
    let rel = (fine.ratio - coarse.ratio).abs() / coarse.ratio;
    InequalityReport::new("lp_stability", rel, 0.2, 0.0)
        .with_meta("q", json!(coarse.q))
        .with_meta("p", json!(coarse.p))
        .with_meta("ratios", json!([coarse.ratio, fine.ratio]))
        .with_meta("n", json!([n_coarse, n_fine]))
}

/// Truncated double sine series for `ψ(½, ½)`: odd `j, k ≤ terms`.
pub fn poisson_oracle_center(terms: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let mut acc = 0.0;
    for j in (1..=terms).step_by(2) {
        for k in (1..=terms).step_by(2) {
            let sign = if ((j + k) / 2) % 2 == 1 { 1.0 } else { -1.0 };
            let (jf, kf) = (j as f64, k as f64);
            acc += sign * 16.0 / (pi.powi(4) * jf * kf * (jf * jf + kf * kf));
        }
    }
    acc
}
