//! The δ-level inequality for `ũ^δ(x) = S_{δ+φ(x)} u(x)`:
//! `Dir(ũ^δ) + ∫(−Δφ)E(ũ^δ) ≤ Dir(u) + ∫_{∂Ω}(−∂φ/∂𝗇)E(S_δ u^b)`.

use serde_json::json;

use super::{grid_meta, harmonic_meta, pullback, weak_sides, InequalityReport, C_QUAD};
use crate::dirichlet::{default_eps, dirichlet_eps, graph_dirichlet, perturb_field, PerturbedField};
use crate::error::{Error, Result};
use crate::evi::PROXIMAL_FACTOR;
use crate::field::{validate_test_function, Field, GridDomain, TestFunction};
use crate::scalar::Real;
use crate::space::EnergySpace;

/// First-order bound on how far the computed inequality terms can be from
/// those of the exact flow, given a uniform per-node accuracy bound `acc`.
fn proximal_propagation<T: Real, S: EnergySpace<T>, F: TestFunction<T> + ?Sized>(
    space: &S,
    pert: &PerturbedField<T, S::Point>,
    phi: &F,
) -> Result<f64> {
    let acc = pert.accuracy_bound;
    if acc == T::zero() {
        return Ok(0.0);
    }
    if !acc.is_finite() {
        return Ok(f64::INFINITY);
    }
    let f = &pert.field;
    let d = &f.domain;
    let dim = d.dim();
    let slopes: Vec<T> = f
        .values
        .iter()
        .map(|p| space.slope(p).map(|s| s.value))
        .collect::<Result<_>>()?;
    let scale = d.h().powi(dim as i32 - 2);
    let two = T::lit(2.0);
    let mut total = T::zero();
    for (a, b) in d.edges() {
        let dist = space.distance(&f.values[a], &f.values[b])?;
        let dphi = (phi.value(d.coords(a), dim) - phi.value(d.coords(b), dim)).abs();
        total = total + scale * ((dist + two * acc) * two * acc + dphi * (slopes[a] + slopes[b]) * acc);
    }
    #[allow(clippy::needless_range_loop)]
    for k in 0..d.len() {
        let x = d.coords(k);
        total = total + d.volume_weight(k) * phi.laplacian(x, dim).abs() * slopes[k] * acc;
        if let Some(nrm) = d.normal(k) {
            total = total + d.boundary_weight(k) * phi.normal_derivative(x, dim, nrm).abs() * slopes[k] * acc;
        }
    }
    Ok(PROXIMAL_FACTOR * total.as_f64())
}

fn perturbed<T: Real, S: EnergySpace<T>, F: TestFunction<T> + ?Sized>(
    space: &S,
    f: &Field<T, S::Point>,
    phi: &F,
    delta: T,
    lambda: T,
) -> Result<PerturbedField<T, S::Point>> {
    validate_test_function(phi, &f.domain)?;
    perturb_field(space, f, phi, delta, lambda)
}

/// Both energy notions for the δ-level inequality, `[graph, eps]`. The
/// integrals use analytic derivatives of `φ` and grid quadrature; tolerance
/// is `C_QUAD·h` relative to the size of the terms, plus the propagated
/// proximal error.
pub fn check_perturbation_inequality<T: Real, S: EnergySpace<T>, F: TestFunction<T> + ?Sized>(
    space: &S,
    f: &Field<T, S::Point>,
    phi: &F,
    delta: T,
) -> Result<[InequalityReport; 2]> {
    if !(delta > T::zero()) {
        return Err(Error::NegativeTime(delta.as_f64()));
    }
    let pert = perturbed(space, f, phi, delta, T::one())?;
    let prox = proximal_propagation(space, &pert, phi)?;
    let eps = default_eps(&f.domain);
    let graph = (graph_dirichlet(space, &pert.field)?, graph_dirichlet(space, f)?);
    let kernel = (dirichlet_eps(space, &pert.field, eps)?, dirichlet_eps(space, f, eps)?);
    let mut out = Vec::with_capacity(2);
    for (notion, (dir_new, dir_old)) in [("graph", graph), ("eps", kernel)] {
        let mut r = perturbation_report(space, f, &pert, phi, dir_new, dir_old, prox)?;
        r.meta("energy", json!(notion));
        r.meta("delta", json!(delta.as_f64()));
        if notion == "eps" {
            r.meta("eps", json!(eps.as_f64()));
        }
        out.push(r);
    }
    Ok(out.try_into().expect("two reports"))
}

fn perturbation_report<T: Real, S: EnergySpace<T>, F: TestFunction<T> + ?Sized>(
    space: &S,
    f: &Field<T, S::Point>,
    pert: &PerturbedField<T, S::Point>,
    phi: &F,
    dir_new: T,
    dir_old: T,
    prox: f64,
) -> Result<InequalityReport> {
    let d = f.domain;
    let e = pullback(space, &pert.field)?.values;
    let (vol, bdry) = weak_sides(&d, &e, phi);
    let mut r = match (vol, bdry) {
        (Some(v), Some(b)) => {
            let lhs = (dir_new + v).as_f64();
            let rhs = (dir_old + b).as_f64();
            let scale = dir_new.abs() + v.abs() + dir_old.abs() + b.abs();
            InequalityReport::new("perturbation", lhs, rhs, C_QUAD * d.h().as_f64() * scale.as_f64() + prox)
        }
        _ => InequalityReport::not_applicable("perturbation", f64::INFINITY, f64::INFINITY, "infinite energy on a positive-weight node"),
    };
    grid_meta(&mut r, &d);
    harmonic_meta(&mut r, space, f)?;
    r.meta("test_function", json!(phi.id()));
    r.meta("flow_accuracy_bound", json!(pert.accuracy_bound.as_f64()));
    Ok(r)
}

/// Discrete `φ`-terms of the summed per-edge two-point estimate:
/// `Σ_interior h^d (−Δ_hφ) g` and `Σ_boundary h^{d−1} (φ_in/h) g`, where
/// `φ_in` is `φ` at the inward neighbour. With these, the graph form of the
/// δ-level inequality is an exact consequence of the two-point estimate.
fn discrete_sides<T: Real, F: TestFunction<T> + ?Sized>(d: &GridDomain<T>, e: &[T], phi: &F) -> (Option<T>, Option<T>) {
    let dim = d.dim();
    let p: Vec<T> = (0..d.len()).map(|k| phi.value(d.coords(k), dim)).collect();
    let h = d.h();
    let hd = h.powi(dim as i32);
    let mut vol = Some(T::zero());
    for k in d.interior() {
        let lap: T = d.neighbors(k).iter().map(|&y| p[y] - p[k]).sum::<T>() / (h * h);
        if lap == T::zero() {
            continue;
        }
        vol = match vol {
            Some(acc) if e[k].is_finite() => Some(acc - hd * lap * e[k]),
            _ => None,
        };
    }
    let mut bdry = Some(T::zero());
    for k in d.boundary() {
        let inward: T = d
            .neighbors(k)
            .iter()
            .filter(|&&y| !d.is_boundary(y))
            .map(|&y| p[y])
            .sum();
        if inward == T::zero() {
            continue;
        }
        bdry = match bdry {
            Some(acc) if e[k].is_finite() => Some(acc + h.powi(dim as i32 - 1) * inward / h * e[k]),
            _ => None,
        };
    }
    (vol, bdry)
}

/// Grid-exact δ-level inequality with `graph_dirichlet` and the discrete
/// `φ`-terms; for closed-form flows it holds to rounding error.
pub fn check_perturbation_discrete<T: Real, S: EnergySpace<T>, F: TestFunction<T> + ?Sized>(
    space: &S,
    f: &Field<T, S::Point>,
    phi: &F,
    delta: T,
) -> Result<InequalityReport> {
    if !(delta >= T::zero()) {
        return Err(Error::NegativeTime(delta.as_f64()));
    }
    let pert = perturbed(space, f, phi, delta, T::one())?;
    let prox = proximal_propagation(space, &pert, phi)?;
    let d = f.domain;
    let e = pullback(space, &pert.field)?.values;
    let dir_new = graph_dirichlet(space, &pert.field)?;
    let dir_old = graph_dirichlet(space, f)?;
    let mut r = match discrete_sides(&d, &e, phi) {
        (Some(v), Some(b)) => {
            let scale = (dir_new.abs() + v.abs() + dir_old.abs() + b.abs()).as_f64();
            InequalityReport::new("perturbation", (dir_new + v).as_f64(), (dir_old + b).as_f64(), 1e-12 * scale.max(1.0) + prox)
        }
        _ => InequalityReport::not_applicable("perturbation", f64::INFINITY, f64::INFINITY, "infinite energy on a positive-weight node"),
    };
    grid_meta(&mut r, &d);
    harmonic_meta(&mut r, space, f)?;
    r.meta("energy", json!("graph-discrete"));
    r.meta("delta", json!(delta.as_f64()));
    r.meta("test_function", json!(phi.id()));
    r.meta("flow_accuracy_bound", json!(pert.accuracy_bound.as_f64()));
    Ok(r)
}

/// `slack(λ)/λ` of the graph-energy inequality with `δ = 0` and `φ` replaced
/// by `λφ`, against the weak-inequality slack it converges to as `λ ↓ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTrend {
    /// Decreasing.
    pub lambdas: Vec<f64>,
    pub scaled_slacks: Vec<f64>,
    pub weak_slack: f64,
    pub errors: Vec<f64>,
    /// Richardson extrapolation `2s(λ/2) − s(λ)` from the two smallest λ,
    /// when they halve.
    pub extrapolated: Option<f64>,
}

impl LambdaTrend {
    pub fn monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn report(&self) -> InequalityReport {
        let first = self.errors.first().copied().unwrap_or(0.0);
        let last = self.errors.last().copied().unwrap_or(0.0);
        let mut r = InequalityReport::new("lambda_trend", last, first, 0.0);
        r.passed = self.monotone();
        r.meta("lambdas", json!(self.lambdas));
        r.meta("scaled_slacks", json!(self.scaled_slacks));
        r.meta("weak_slack", json!(self.weak_slack));
        r.meta("errors", json!(self.errors));
        r.meta("extrapolated", json!(self.extrapolated));
        r
    }

    /// `(λ, slack/λ)` rows, λ descending.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        self.lambdas.iter().copied().zip(self.scaled_slacks.iter().copied()).collect()
    }
}

pub fn lambda_trend<T: Real, S: EnergySpace<T>, F: TestFunction<T> + ?Sized>(
    space: &S,
    f: &Field<T, S::Point>,
    phi: &F,
    lambdas: &[f64],
) -> Result<LambdaTrend> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| !(w[1] < w[0])) || lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidParameter("lambdas must be positive and decreasing".into()));
    }
    let weak = super::check_weak_inequality(space, f, phi)?;
    let dir_old = graph_dirichlet(space, f)?;
    let mut scaled = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let pert = perturbed(space, f, phi, T::zero(), T::lit(lambda))?;
        let e = pullback(space, &pert.field)?.values;
        let (Some(v), Some(b)) = weak_sides(&f.domain, &e, phi) else {
            return Err(Error::InfiniteEnergy);
        };
        let dir_new = graph_dirichlet(space, &pert.field)?;
        let slack = (dir_old - dir_new).as_f64() + lambda * (b - v).as_f64();
        scaled.push(slack / lambda);
    }
    let errors = scaled.iter().map(|s| (s - weak.slack).abs()).collect();
    let k = lambdas.len();
    let extrapolated = (k >= 2 && (lambdas[k - 2] - 2.0 * lambdas[k - 1]).abs() < 1e-12 * lambdas[k - 2])
        .then(|| 2.0 * scaled[k - 1] - scaled[k - 2]);
    Ok(LambdaTrend {
        lambdas: lambdas.to_vec(),
        scaled_slacks: scaled,
        weak_slack: weak.slack,
        errors,
        extrapolated,
    })
}
