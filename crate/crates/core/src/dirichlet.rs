//! Dirichlet energies of grid fields, the barycentric Gauss–Seidel harmonic
//! solver, and the gradient-flow perturbation of a field.

use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, Field, GridDomain, TestFunction};
use crate::parallel;
use crate::scalar::Real;
use crate::space::EnergySpace;

/// `C_d = (1/d)∫_{B₁}|z|² = σ_{d−1}/(d(d+2))`, with `σ_{d−1}` the area of the
/// unit sphere in `ℝ^d`.
pub fn c_d(dim: usize) -> f64 {
    assert!(dim >= 1, "dimension must be positive");
    let d = dim as f64;
    sphere_area(dim) / (d * (d + 2.0))
}

/// Area of the unit sphere in `ℝ^d`, by `σ_{d−1} = 2π/(d−2)·σ_{d−3}`.
fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        d => 2.0 * std::f64::consts::PI / (d as f64 - 2.0) * sphere_area(d - 2),
    }
}

/// Default kernel radius `8h`.
pub fn default_eps<T: Real>(domain: &GridDomain<T>) -> T {
    T::lit(8.0) * domain.h()
}

/// Integer offsets `(di, dj)` with `|offset|·h ≤ ε`, in lexicographic node
/// order (`dj` major).
fn kernel_offsets<T: Real>(domain: &GridDomain<T>, eps: T) -> Vec<(isize, isize)> {
    let reach = (eps / domain.h()).to_f64().unwrap_or(0.0);
    let r = (reach + 1e-9).floor() as isize;
    let r2 = reach * reach * (1.0 + 1e-12);
    let rj = if domain.dim() == 2 { r } else { 0 };
    let mut out = Vec::new();
    for dj in -rj..=rj {
        for di in -r..=r {
            if ((di * di + dj * dj) as f64) <= r2 {
                out.push((di, dj));
            }
        }
    }
    out
}

/// ε-approximate Dirichlet energy
/// `(1/(2C_d ε^{d+2})) Σ_x Σ_{|y−x|≤ε} w_x w_y d²(f(x), f(y))`
/// over all node pairs with the trapezoidal volume weights.
///
/// Each outer node's inner sum runs in node order; outer partial sums are
/// added in node order, so the result does not depend on the thread count.
pub fn dirichlet_eps<T: Real, S: EnergySpace<T>>(space: &S, f: &Field<T, S::Point>, eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter(format!("kernel radius {eps} must be positive")));
    }
    let domain = &f.domain;
    let offsets = kernel_offsets(domain, eps);
    let n = domain.n() as isize;
    let partial = parallel::map_indexed(domain.len(), |k| -> Result<T> {
        let [i, j] = domain.multi_index(k);
        let (i, j) = (i as isize, j as isize);
        let mut acc = T::zero();
        for &(di, dj) in &offsets {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= n || b >= n || (di == 0 && dj == 0) {
                continue;
            }
            let y = domain.node(a as usize, b as usize);
            let d = space.distance(&f.values[k], &f.values[y])?;
            acc = acc + domain.volume_weight(y) * d * d;
        }
        Ok(acc * domain.volume_weight(k))
    });
    let mut total = T::zero();
    for p in partial {
        total = total + p?;
    }
    let d = domain.dim() as i32;
    Ok(total / (T::lit(2.0 * c_d(domain.dim())) * eps.powi(d + 2)))
}

/// Graph Dirichlet energy `½ Σ_edges h^{d−2} d²(f(x), f(y))`.
pub fn graph_dirichlet<T: Real, S: EnergySpace<T>>(space: &S, f: &Field<T, S::Point>) -> Result<T> {
    graph_energy(space, &f.domain, &f.values)
}

fn graph_energy<T: Real, S: EnergySpace<T>>(space: &S, domain: &GridDomain<T>, values: &[S::Point]) -> Result<T> {
    let scale = domain.h().powi(domain.dim() as i32 - 2);
    let mut acc = T::zero();
    for (a, b) in domain.edges() {
        let d = space.distance(&values[a], &values[b])?;
        acc = acc + d * d;
    }
    Ok(T::lit(0.5) * scale * acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_sweeps: usize,
    /// Stop once the largest per-node update of a sweep is below this distance.
    pub fixed_point_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200_000,
            fixed_point_tol: 1e-13,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.fixed_point_tol > 0.0) {
            return Err(Error::InvalidParameter("fixed_point_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HarmonicSolution<T, P> {
    pub field: Field<T, P>,
    pub sweeps: usize,
    pub converged: bool,
    /// Largest per-node update of the last sweep.
    pub last_update: f64,
    /// Largest increase of `graph_dirichlet` over one sweep (≤ 0 means monotone
    /// descent).
    pub max_energy_increase: f64,
}

/// Harmonic map with the given boundary values: Gauss–Seidel sweeps in node
/// order, each interior node replaced by the equal-weight barycenter of its
/// axis neighbours. Interior nodes start at the barycenter of all boundary
/// values.
pub fn solve_harmonic<T: Real, S: EnergySpace<T>>(
    domain: GridDomain<T>,
    space: &S,
    boundary: &BoundaryTrace<S::Point>,
    opts: SolverOptions,
) -> Result<HarmonicSolution<T, S::Point>> {
    if boundary.nodes != domain.boundary() || boundary.values.len() != boundary.nodes.len() {
        return Err(Error::FieldMismatch("boundary data must cover exactly the boundary nodes".into()));
    }
    let w = T::one() / T::from_usize_exact(boundary.values.len());
    let start = space.barycenter(&boundary.values, &vec![w; boundary.values.len()])?;
    let mut values = vec![start; domain.len()];
    for (&k, v) in boundary.nodes.iter().zip(&boundary.values) {
        values[k] = v.clone();
    }
    let initial = Field::new(domain, space, values)?;
    solve_harmonic_from(space, initial, opts)
}

/// Gauss–Seidel from an explicit initial field; boundary values are kept.
pub fn solve_harmonic_from<T: Real, S: EnergySpace<T>>(
    space: &S,
    initial: Field<T, S::Point>,
    opts: SolverOptions,
) -> Result<HarmonicSolution<T, S::Point>> {
    opts.validate()?;
    let domain = initial.domain;
    let mut values = initial.values;
    let interior = domain.interior();
    let stencils: Vec<Vec<usize>> = interior.iter().map(|&k| domain.neighbors(k)).collect();
    let mut energy = graph_energy(space, &domain, &values)?;
    let mut max_increase = f64::NEG_INFINITY;
    let mut last_update = 0.0;
    let mut converged = interior.is_empty();
    let mut sweeps = 0;
    let mut nbrs = Vec::with_capacity(4);
    while !converged && sweeps < opts.max_sweeps {
        last_update = 0.0f64;
        for (&k, stencil) in interior.iter().zip(&stencils) {
            nbrs.clear();
            nbrs.extend(stencil.iter().map(|&y| values[y].clone()));
            let wt = T::one() / T::from_usize_exact(nbrs.len());
            let next = space.barycenter(&nbrs, &vec![wt; nbrs.len()])?;
            let moved = space.distance(&values[k], &next)?.as_f64();
            last_update = last_update.max(moved);
            values[k] = next;
        }
        sweeps += 1;
        let e = graph_energy(space, &domain, &values)?;
        max_increase = max_increase.max((e - energy).as_f64());
        energy = e;
        converged = last_update < opts.fixed_point_tol;
    }
    debug_assert!(max_increase <= 1e-12 * (1.0 + energy.as_f64().abs()) || sweeps == 0);
    Ok(HarmonicSolution {
        field: Field {
            domain,
            values,
            space_id: initial.space_id,
        },
        sweeps,
        converged,
        last_update,
        max_energy_increase: max_increase,
    })
}

/// Largest distance between an interior value and the barycenter of its
/// neighbours; zero exactly at a barycentric fixed point.
pub fn fixed_point_residual<T: Real, S: EnergySpace<T>>(space: &S, f: &Field<T, S::Point>) -> Result<T> {
    let mut worst = T::zero();
    for k in f.domain.interior() {
        let nbrs: Vec<_> = f.domain.neighbors(k).into_iter().map(|y| f.values[y].clone()).collect();
        let w = T::one() / T::from_usize_exact(nbrs.len());
        let b = space.barycenter(&nbrs, &vec![w; nbrs.len()])?;
        worst = worst.max(space.distance(&f.values[k], &b)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct PerturbedField<T, P> {
    pub field: Field<T, P>,
    /// Largest flow accuracy bound over the nodes.
    pub accuracy_bound: T,
}

/// `x ↦ S_{δ+λφ(x)} f(x)`.
pub fn perturb_field<T: Real, S: EnergySpace<T>, F: TestFunction<T> + ?Sized>(
    space: &S,
    f: &Field<T, S::Point>,
    phi: &F,
    delta: T,
    lambda: T,
) -> Result<PerturbedField<T, S::Point>> {
    if !(delta >= T::zero()) || !(lambda >= T::zero()) {
        return Err(Error::NegativeTime(delta.min(lambda).as_f64()));
    }
    let dim = f.domain.dim();
    let flows = parallel::map_indexed(f.domain.len(), |k| {
        let t = delta + lambda * phi.value(f.domain.coords(k), dim);
        if t == T::zero() {
            return Ok((f.values[k].clone(), T::zero()));
        }
        space.flow(&f.values[k], t).map(|r| (r.endpoint, r.accuracy_bound))
    });
    let mut values = Vec::with_capacity(flows.len());
    let mut bound = T::zero();
    for r in flows {
        let (p, b) = r?;
        values.push(p);
        bound = bound.max(b);
    }
    Ok(PerturbedField {
        field: Field {
            domain: f.domain,
            values,
            space_id: f.space_id.clone(),
        },
        accuracy_bound: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{lerp, Bump, ZeroFunction};
    use crate::space::{EuclidQuadratic, QuantileEntropy, TripodPoint, TripodQuadratic};

    fn euclid(dim: usize) -> EuclidQuadratic<f64> {
        EuclidQuadratic::origin(dim).unwrap()
    }

    #[test]
    fn c_d_matches_quadrature_oracles() {
        // d = 1: ∫_{−1}^{1} z² dz by Simpson (exact for cubics).
        let simpson = (1.0 / 3.0) * (1.0 + 0.0 * 4.0 + 1.0);
        assert!((c_d(1) - simpson).abs() < 1e-12);
        // d = 2: polar midpoint rule for 2π∫₀¹ r³ dr.
        let k = 100_000;
        let polar: f64 = (0..k)
            .map(|i| {
                let r = (i as f64 + 0.5) / k as f64;
                r.powi(3) / k as f64
            })
            .sum::<f64>()
            * 2.0
            * std::f64::consts::PI;
        assert!((c_d(2) - polar / 2.0).abs() < 1e-6);
        // d = 3: σ₂∫₀¹ r⁴ dr with σ₂ = 4π.
        let radial: f64 = (0..k)
            .map(|i| {
                let r = (i as f64 + 0.5) / k as f64;
                r.powi(4) / k as f64
            })
            .sum::<f64>()
            * 4.0
            * std::f64::consts::PI;
        assert!((c_d(3) - radial / 3.0).abs() < 1e-6);
        assert!((c_d(2) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((c_d(3) - 4.0 * std::f64::consts::PI / 15.0).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_eps_of_linear_field() {
        let s = euclid(1);
        let d = GridDomain::new(2, 129).unwrap();
        let a = [1.0, 2.0];
        let f = Field::from_fn(d, &s, |x| vec![a[0] * x[0] + a[1] * x[1]]).unwrap();
        let target = 0.5 * (a[0] * a[0] + a[1] * a[1]);
        let errs: Vec<f64> = [16.0, 8.0, 4.0]
            .iter()
            .map(|m| (dirichlet_eps(&s, &f, m * d.h()).unwrap() - target).abs())
            .collect();
        assert!(errs[1] < 0.1 * target, "{errs:?}");
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        let c = Field::from_fn(d, &s, |_| vec![3.0]).unwrap();
        assert_eq!(dirichlet_eps(&s, &c, default_eps(&d)).unwrap(), 0.0);
        assert!(dirichlet_eps(&s, &c, 0.0).is_err());
    }

    #[test]
    fn graph_dirichlet_examples() {
        let s = euclid(1);
        let d = GridDomain::new(1, 11).unwrap();
        let f = Field::from_fn(d, &s, |x| vec![3.0 * x[0]]).unwrap();
        assert!((graph_dirichlet(&s, &f).unwrap() - 4.5).abs() < 1e-12);
        let c = Field::from_fn(d, &s, |_| vec![1.0]).unwrap();
        assert_eq!(graph_dirichlet(&s, &c).unwrap(), 0.0);
    }

    #[test]
    fn graph_dirichlet_is_laplacian_quadratic_form() {
        let s = euclid(1);
        let d = GridDomain::new(2, 6).unwrap();
        let mut r = crate::rng::seeded(3);
        let f = Field::from_fn(d, &s, |_| vec![crate::rng::uniform(&mut r, -1.0, 1.0)]).unwrap();
        // ½ uᵀ L u with L the graph Laplacian (degree minus adjacency).
        let u: Vec<f64> = f.values.iter().map(|v| v[0]).collect();
        let mut form = 0.0;
        for k in 0..d.len() {
            let nb = d.neighbors(k);
            let lu = nb.len() as f64 * u[k] - nb.iter().map(|&y| u[y]).sum::<f64>();
            form += u[k] * lu;
        }
        form *= 0.5;
        assert!((graph_dirichlet(&s, &f).unwrap() - form).abs() < 1e-12);
    }

    #[test]
    fn solver_trivial_cases() {
        let s = euclid(1);
        let d = GridDomain::new(1, 3).unwrap();
        let bd = BoundaryTrace {
            nodes: vec![0, 2],
            values: vec![vec![0.0], vec![4.0]],
        };
        let sol = solve_harmonic(d, &s, &bd, SolverOptions::default()).unwrap();
        assert_eq!(sol.field.values[1], vec![2.0]);
        assert!(sol.converged);

        let d = GridDomain::new(2, 3).unwrap();
        let lin = Field::from_fn(d, &s, |x| vec![x[0] + x[1]]).unwrap();
        let sol = solve_harmonic(d, &s, &lin.boundary_trace(), SolverOptions::default()).unwrap();
        assert_eq!(sol.field.values[4], vec![1.0]);
        assert_eq!(sol.field.boundary_trace(), lin.boundary_trace());
    }

    /// Dense Gaussian elimination of the 5-point Laplace system.
    fn direct_laplace(d: &GridDomain<f64>, g: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let interior = d.interior();
        let pos: std::collections::HashMap<usize, usize> =
            interior.iter().enumerate().map(|(a, &k)| (k, a)).collect();
        let m = interior.len();
        let mut a = vec![vec![0.0; m + 1]; m];
        for (row, &k) in interior.iter().enumerate() {
            a[row][row] = 4.0;
            for y in d.neighbors(k) {
                match pos.get(&y) {
                    Some(&col) => a[row][col] -= 1.0,
                    None => a[row][m] += g(d.coords(y)),
                }
            }
        }
        for c in 0..m {
            let p = (c..m).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
            a.swap(c, p);
            for r in 0..m {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    if f != 0.0 {
                        for k in c..=m {
                            a[r][k] -= f * a[c][k];
                        }
                    }
                }
            }
        }
        let mut out = vec![0.0; d.len()];
        for k in d.boundary() {
            out[k] = g(d.coords(k));
        }
        for (row, &k) in interior.iter().enumerate() {
            out[k] = a[row][m] / a[row][row];
        }
        out
    }

    #[test]
    fn solver_matches_direct_solve() {
        let s = euclid(2);
        let d = GridDomain::new(2, 17).unwrap();
        let g0 = |x: [f64; 2]| (3.0 * x[0]).sin() * x[1] + x[0] * x[0];
        let g1 = |x: [f64; 2]| (x[0] - x[1]).exp();
        let bd = Field::from_fn(d, &s, |x| vec![g0(x), g1(x)]).unwrap();
        let sol = solve_harmonic(d, &s, &bd.boundary_trace(), SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.max_energy_increase <= 1e-12);
        let (o0, o1) = (direct_laplace(&d, g0), direct_laplace(&d, g1));
        for k in 0..d.len() {
            assert!((sol.field.values[k][0] - o0[k]).abs() < 1e-8);
            assert!((sol.field.values[k][1] - o1[k]).abs() < 1e-8);
        }
        assert!(fixed_point_residual(&s, &sol.field).unwrap() < 1e-12);
    }

    #[test]
    fn quantile_plates_solution_is_linear_in_x1() {
        let s = QuantileEntropy::<f64>::new(8, 1e-3).unwrap();
        let (a, b) = (s.uniform_sample(0.0, 0.5), s.uniform_sample(0.0, 1.0));
        let d = GridDomain::new(2, 9).unwrap();
        let plates = Field::from_fn(d, &s, |x| lerp(&a, &b, x[0])).unwrap();
        let sol = solve_harmonic(d, &s, &plates.boundary_trace(), SolverOptions::default()).unwrap();
        assert!(sol.converged);
        for (v, w) in sol.field.values.iter().zip(&plates.values) {
            assert!(s.distance(v, w).unwrap() < 1e-11);
        }
    }

    #[test]
    fn tripod_solver_descends_and_converges() {
        let s = TripodQuadratic::new(TripodPoint::new(1, 0.5)).unwrap();
        let d = GridDomain::new(2, 7).unwrap();
        let f = Field::from_fn(d, &s, |x| {
            let b = if x[0] < 0.5 { 1 } else if x[1] < 0.5 { 2 } else { 3 };
            TripodPoint::new(b, x[0] + x[1])
        })
        .unwrap();
        let sol = solve_harmonic(d, &s, &f.boundary_trace(), SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.max_energy_increase <= 1e-12);
        assert_eq!(sol.field.boundary_trace(), f.boundary_trace());
    }

    #[test]
    fn nonconvergence_is_flagged() {
        let s = euclid(1);
        let d = GridDomain::new(2, 9).unwrap();
        let bd = Field::from_fn(d, &s, |x| vec![x[0] * x[1]]).unwrap();
        let opts = SolverOptions {
            max_sweeps: 2,
            ..Default::default()
        };
        let sol = solve_harmonic(d, &s, &bd.boundary_trace(), opts).unwrap();
        assert!(!sol.converged && sol.sweeps == 2);
        let bad = SolverOptions {
            fixed_point_tol: 0.0,
            ..Default::default()
        };
        assert!(solve_harmonic(d, &s, &bd.boundary_trace(), bad).is_err());
    }

    #[test]
    fn perturb_field_examples() {
        let s = euclid(1);
        let d = GridDomain::new(1, 17).unwrap();
        let f = Field::from_fn(d, &s, |x| vec![x[0]]).unwrap();
        let same = perturb_field(&s, &f, &Bump, 0.0, 0.0).unwrap();
        assert_eq!(same.field, f);
        let p = perturb_field(&s, &f, &Bump, 0.0, 1.0).unwrap();
        assert_eq!(p.field.boundary_trace(), f.boundary_trace());
        for k in 0..d.len() {
            let x = d.coords(k)[0];
            assert!((p.field.values[k][0] - (-x * (1.0 - x)).exp() * x).abs() < 1e-15);
        }
        let z = perturb_field(&s, &f, &ZeroFunction, 0.5, 1.0).unwrap();
        assert!((z.field.values[16][0] - (-0.5f64).exp()).abs() < 1e-15);
        assert!(perturb_field(&s, &f, &Bump, -0.1, 1.0).is_err());
    }

    #[test]
    fn harmonic_minimizes_eps_energy_against_small_perturbations() {
        let s = euclid(1);
        let d = GridDomain::new(2, 17).unwrap();
        let bd = Field::from_fn(d, &s, |x| vec![x[0] + 2.0 * x[1]]).unwrap();
        let sol = solve_harmonic(d, &s, &bd.boundary_trace(), SolverOptions::default()).unwrap();
        let eps = default_eps(&d);
        let base = dirichlet_eps(&s, &sol.field, eps).unwrap();
        let graph = graph_dirichlet(&s, &sol.field).unwrap();
        for lambda in [0.01, 0.05] {
            let p = perturb_field(&s, &sol.field, &crate::field::ProductBump, 0.0, lambda).unwrap();
            // Exact for the solver's own objective; the ε-energy carries an
            // O(h) boundary-layer bias the solver does not see.
            assert!(graph_dirichlet(&s, &p.field).unwrap() >= graph - 1e-12);
            assert!(dirichlet_eps(&s, &p.field, eps).unwrap() >= base - d.h() * base);
        }
    }
}
