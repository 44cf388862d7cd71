//! Uniform tensor grids on the unit interval and unit square, fields of
//! space-valued samples on them, and analytic test functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::EnergySpace;

/// Outward unit normal of a boundary node: `axis` (0 for x₁, 1 for x₂) and
/// sign `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Normal {
    pub axis: usize,
    pub sign: i8,
}

/// `n` nodes per axis on `[0, 1]^dim`, node index `k = j·n + i` with `i` the
/// x₁ index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDomain<T> {
    dim: usize,
    n: usize,
    h: T,
}

impl<T: Real> GridDomain<T> {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if n < 3 {
            return Err(Error::GridTooSmall(n));
        }
        Ok(Self {
            dim,
            n,
            h: T::one() / T::from_usize_exact(n - 1),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of node `k`; the second is 0 in one dimension.
    pub fn multi_index(&self, k: usize) -> [usize; 2] {
        [k % self.n, k / self.n]
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Coordinates of node `k`; the second is 0 in one dimension.
    pub fn coords(&self, k: usize) -> [T; 2] {
        let [i, j] = self.multi_index(k);
        [
            T::from_usize_exact(i) * self.h,
            T::from_usize_exact(j) * self.h,
        ]
    }

    fn on_edge(&self, idx: usize) -> bool {
        idx == 0 || idx == self.n - 1
    }

    /// Number of axes along which node `k` lies on the boundary.
    fn boundary_axes(&self, k: usize) -> usize {
        let m = self.multi_index(k);
        (0..self.dim).filter(|&a| self.on_edge(m[a])).count()
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary_axes(k) > 0
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.is_boundary(k)).collect()
    }

    pub fn boundary(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_boundary(k)).collect()
    }

    /// Outward normal at a boundary node; `None` at interior nodes and at the
    /// corners of the square.
    pub fn normal(&self, k: usize) -> Option<Normal> {
        if self.boundary_axes(k) != 1 {
            return None;
        }
        let m = self.multi_index(k);
        (0..self.dim).find(|&a| self.on_edge(m[a])).map(|axis| Normal {
            axis,
            sign: if m[axis] == 0 { -1 } else { 1 },
        })
    }

    /// Trapezoidal volume weight: `h^d` at interior nodes, halved once per
    /// boundary axis. The weights sum to `|Ω| = 1` exactly.
    pub fn volume_weight(&self, k: usize) -> T {
        let mut w = self.h.powi(self.dim as i32);
        for _ in 0..self.boundary_axes(k) {
            w = w * T::lit(0.5);
        }
        w
    }

    /// Boundary quadrature weight `h^{d−1}`; zero at interior nodes. A corner
    /// of the square carries weight ½h on each of its two edges, `h` in total,
    /// so the weights sum to the perimeter exactly. In one dimension both
    /// endpoints carry weight 1.
    pub fn boundary_weight(&self, k: usize) -> T {
        match self.boundary_axes(k) {
            0 => T::zero(),
            _ => self.h.powi(self.dim as i32 - 1),
        }
    }

    /// Axis-adjacent neighbours of node `k`, in increasing index order.
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        let [i, j] = self.multi_index(k);
        let mut out = Vec::with_capacity(2 * self.dim);
        if self.dim == 2 && j > 0 {
            out.push(k - self.n);
        }
        if i > 0 {
            out.push(k - 1);
        }
        if i + 1 < self.n {
            out.push(k + 1);
        }
        if self.dim == 2 && j + 1 < self.n {
            out.push(k + self.n);
        }
        out
    }

    /// Each axis-adjacent pair `(a, b)` once, `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            for nb in self.neighbors(k) {
                if nb > k {
                    out.push((k, nb));
                }
            }
        }
        out
    }
}

/// Space-valued samples at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T, P> {
    pub domain: GridDomain<T>,
    pub values: Vec<P>,
    pub space_id: String,
}

/// Values at boundary nodes, in increasing node order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace<P> {
    pub nodes: Vec<usize>,
    pub values: Vec<P>,
}

impl<T: Real, P: Clone> Field<T, P> {
    /// Validated field from one value per node, in node order.
    pub fn new<S>(domain: GridDomain<T>, space: &S, values: Vec<P>) -> Result<Self>
    where
        S: EnergySpace<T, Point = P>,
    {
        if values.len() != domain.len() {
            return Err(Error::FieldMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                domain.len()
            )));
        }
        for v in &values {
            space.validate(v)?;
        }
        Ok(Self {
            domain,
            values,
            space_id: space.id().to_string(),
        })
    }

    /// Field with value `assign(x)` at every node `x`.
    pub fn from_fn<S, F>(domain: GridDomain<T>, space: &S, assign: F) -> Result<Self>
    where
        S: EnergySpace<T, Point = P>,
        F: FnMut([T; 2]) -> P,
    {
        let values = (0..domain.len()).map(|k| domain.coords(k)).map(assign).collect();
        Self::new(domain, space, values)
    }

    pub fn boundary_trace(&self) -> BoundaryTrace<P> {
        let nodes = self.domain.boundary();
        let values = nodes.iter().map(|&k| self.values[k].clone()).collect();
        BoundaryTrace { nodes, values }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain || self.space_id != other.space_id {
            return Err(Error::FieldMismatch("fields live on different domains or spaces".into()));
        }
        Ok(())
    }
}

/// `(Σ_x w_x d²(f(x), g(x)))^{1/2}` with the trapezoidal volume weights.
pub fn l2_field_distance<T: Real, S: EnergySpace<T>>(
    space: &S,
    f: &Field<T, S::Point>,
    g: &Field<T, S::Point>,
) -> Result<T> {
    f.check_compatible(g)?;
    let mut acc = T::zero();
    for (k, (a, b)) in f.values.iter().zip(&g.values).enumerate() {
        let d = space.distance(a, b)?;
        acc = acc + f.domain.volume_weight(k) * d * d;
    }
    Ok(acc.sqrt())
}

#[derive(Serialize, Deserialize)]
struct FieldJson<P> {
    space: String,
    dim: usize,
    n: usize,
    values: Vec<P>,
}

impl<T: Real, P: Clone + Serialize> Field<T, P> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FieldJson {
            space: self.space_id.clone(),
            dim: self.domain.dim(),
            n: self.domain.n(),
            values: self.values.clone(),
        })
        .expect("field values serialize")
    }
}

impl<T: Real, P: Clone + serde::de::DeserializeOwned> Field<T, P> {
    pub fn from_json<S>(space: &S, value: serde_json::Value) -> Result<Self>
    where
        S: EnergySpace<T, Point = P>,
    {
        let raw: FieldJson<P> = serde_json::from_value(value)
            .map_err(|e| Error::FieldMismatch(format!("bad field json: {e}")))?;
        if raw.space != space.id() {
            return Err(Error::FieldMismatch(format!(
                "field is for {}, not {}",
                raw.space,
                space.id()
            )));
        }
        Self::new(GridDomain::new(raw.dim, raw.n)?, space, raw.values)
    }
}

/// A smooth `φ ≥ 0` vanishing on `∂Ω`, with its derivatives in closed form.
pub trait TestFunction<T: Real>: Send + Sync {
    fn id(&self) -> &'static str;
    fn value(&self, x: [T; 2], dim: usize) -> T;
    fn gradient(&self, x: [T; 2], dim: usize) -> [T; 2];
    fn laplacian(&self, x: [T; 2], dim: usize) -> T;
    /// Whether `−Δφ ≥ 0` on `Ω`.
    fn superharmonic(&self) -> bool;

    /// `∂φ/∂𝗇` at a boundary node with outward normal `normal`.
    fn normal_derivative(&self, x: [T; 2], dim: usize, normal: Normal) -> T {
        let g = self.gradient(x, dim)[normal.axis];
        if normal.sign < 0 {
            -g
        } else {
            g
        }
    }
}

/// Checks the test-function invariants on the grid: `φ ≥ 0`, `φ = 0` on the
/// boundary to 1e-12 and, if flagged, `−Δφ ≥ 0` at interior nodes.
pub fn validate_test_function<T: Real, F: TestFunction<T> + ?Sized>(phi: &F, domain: &GridDomain<T>) -> Result<()> {
    let d = domain.dim();
    for k in 0..domain.len() {
        let x = domain.coords(k);
        let v = phi.value(x, d);
        if !(v >= T::zero()) {
            return Err(Error::InvalidTestFunction(format!("{} is negative at node {k}", phi.id())));
        }
        if domain.is_boundary(k) && v.abs() > T::lit(1e-12) {
            return Err(Error::InvalidTestFunction(format!("{} does not vanish at boundary node {k}", phi.id())));
        }
        if phi.superharmonic() && !domain.is_boundary(k) && phi.laplacian(x, d) > T::zero() {
            return Err(Error::InvalidTestFunction(format!("{} is flagged superharmonic but Δφ > 0 at node {k}", phi.id())));
        }
    }
    Ok(())
}

/// `x₁(1 − x₁)`; a valid test function in one dimension only.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bump;

impl<T: Real> TestFunction<T> for Bump {
    fn id(&self) -> &'static str {
        "bump"
    }
    fn value(&self, x: [T; 2], _: usize) -> T {
        x[0] * (T::one() - x[0])
    }
    fn gradient(&self, x: [T; 2], _: usize) -> [T; 2] {
        [T::one() - T::lit(2.0) * x[0], T::zero()]
    }
    fn laplacian(&self, _: [T; 2], _: usize) -> T {
        T::lit(-2.0)
    }
    fn superharmonic(&self) -> bool {
        true
    }
}

/// `Π x_i(1 − x_i)` over the active axes.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProductBump;

fn bump1<T: Real>(x: T) -> (T, T) {
    (x * (T::one() - x), T::one() - T::lit(2.0) * x)
}

impl<T: Real> TestFunction<T> for ProductBump {
    fn id(&self) -> &'static str {
        "product-bump"
    }
    fn value(&self, x: [T; 2], dim: usize) -> T {
        (0..dim).map(|a| bump1(x[a]).0).fold(T::one(), |p, v| p * v)
    }
    fn gradient(&self, x: [T; 2], dim: usize) -> [T; 2] {
        let (v0, g0) = bump1(x[0]);
        if dim == 1 {
            return [g0, T::zero()];
        }
        let (v1, g1) = bump1(x[1]);
        [g0 * v1, v0 * g1]
    }
    fn laplacian(&self, x: [T; 2], dim: usize) -> T {
        let two = T::lit(2.0);
        if dim == 1 {
            return -two;
        }
        -two * (bump1(x[0]).0 + bump1(x[1]).0)
    }
    fn superharmonic(&self) -> bool {
        true
    }
}

/// `φ ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFunction;

impl<T: Real> TestFunction<T> for ZeroFunction {
    fn id(&self) -> &'static str {
        "zero"
    }
    fn value(&self, _: [T; 2], _: usize) -> T {
        T::zero()
    }
    fn gradient(&self, _: [T; 2], _: usize) -> [T; 2] {
        [T::zero(); 2]
    }
    fn laplacian(&self, _: [T; 2], _: usize) -> T {
        T::zero()
    }
    fn superharmonic(&self) -> bool {
        true
    }
}

/// `Π sin(π x_i)`, the first Dirichlet eigenfunction.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineBump;

impl<T: Real> TestFunction<T> for SineBump {
    fn id(&self) -> &'static str {
        "sine"
    }
    fn value(&self, x: [T; 2], dim: usize) -> T {
        let pi = T::lit(std::f64::consts::PI);
        // sin(π) is not exactly zero in floating point; clamp boundary nodes.
        (0..dim)
            .map(|a| {
                if x[a] <= T::zero() || x[a] >= T::one() {
                    T::zero()
                } else {
                    (pi * x[a]).sin()
                }
            })
            .fold(T::one(), |p, v| p * v)
    }
    fn gradient(&self, x: [T; 2], dim: usize) -> [T; 2] {
        let pi = T::lit(std::f64::consts::PI);
        let (s0, c0) = ((pi * x[0]).sin(), pi * (pi * x[0]).cos());
        if dim == 1 {
            return [c0, T::zero()];
        }
        let (s1, c1) = ((pi * x[1]).sin(), pi * (pi * x[1]).cos());
        [c0 * s1, s0 * c1]
    }
    fn laplacian(&self, x: [T; 2], dim: usize) -> T {
        let pi = T::lit(std::f64::consts::PI);
        -T::from_usize_exact(dim) * pi * pi * self.value(x, dim)
    }
    fn superharmonic(&self) -> bool {
        true
    }
}

/// Shipped test function by id: `bump`, `product-bump`, `zero`, `sine`.
pub fn test_function_by_id<T: Real>(id: &str) -> Result<Box<dyn TestFunction<T>>> {
    Ok(match id {
        "bump" => Box::new(Bump),
        "product-bump" => Box::new(ProductBump),
        "zero" => Box::new(ZeroFunction),
        "sine" => Box::new(SineBump),
        other => return Err(Error::InvalidTestFunction(format!("unknown test function {other:?}"))),
    })
}

/// Componentwise `(1 − s)a + s·b`; monotone vectors stay monotone.
pub fn lerp<T: Real>(a: &[T], b: &[T], s: T) -> Vec<T> {
    a.iter()
        .zip(b)
        .map(|(x, y)| (T::one() - s) * *x + s * *y)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{EuclidQuadratic, QuantileEntropy};

    #[test]
    fn small_domains() {
        let d = GridDomain::<f64>::new(1, 3).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.interior(), vec![1]);
        assert_eq!(d.coords(1)[0], 0.5);
        let d = GridDomain::<f64>::new(2, 3).unwrap();
        assert_eq!(d.len(), 9);
        assert_eq!(d.interior(), vec![4]);
        assert!(matches!(GridDomain::<f64>::new(2, 2), Err(Error::GridTooSmall(2))));
        assert!(matches!(GridDomain::<f64>::new(3, 5), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn quadrature_weight_sums() {
        let d = GridDomain::<f64>::new(2, 65).unwrap();
        let perimeter: f64 = (0..d.len()).map(|k| d.boundary_weight(k)).sum();
        assert!((perimeter - 4.0).abs() < 1e-12);
        let area: f64 = (0..d.len()).map(|k| d.volume_weight(k)).sum();
        assert!((area - 1.0).abs() < 1e-12);
        let interior: f64 = d.interior().iter().map(|&k| d.volume_weight(k)).sum();
        assert!(interior < 1.0 && interior > 1.0 - 4.0 * d.h());
        let d1 = GridDomain::<f64>::new(1, 9).unwrap();
        let ends: f64 = (0..d1.len()).map(|k| d1.boundary_weight(k)).sum();
        assert_eq!(ends, 2.0);
    }

    #[test]
    fn interior_and_boundary_partition_nodes() {
        for (dim, n) in [(1, 5), (2, 4), (2, 7)] {
            let d = GridDomain::<f64>::new(dim, n).unwrap();
            let mut all = d.interior();
            all.extend(d.boundary());
            all.sort_unstable();
            assert_eq!(all, (0..d.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn normals_point_outward_and_skip_corners() {
        let d = GridDomain::<f64>::new(2, 5).unwrap();
        assert_eq!(d.normal(d.node(0, 2)), Some(Normal { axis: 0, sign: -1 }));
        assert_eq!(d.normal(d.node(4, 2)), Some(Normal { axis: 0, sign: 1 }));
        assert_eq!(d.normal(d.node(2, 0)), Some(Normal { axis: 1, sign: -1 }));
        assert_eq!(d.normal(d.node(2, 4)), Some(Normal { axis: 1, sign: 1 }));
        assert_eq!(d.normal(d.node(0, 0)), None);
        assert_eq!(d.normal(d.node(2, 2)), None);
        let d1 = GridDomain::<f64>::new(1, 5).unwrap();
        assert_eq!(d1.normal(0), Some(Normal { axis: 0, sign: -1 }));
    }

    #[test]
    fn edges_count() {
        let d = GridDomain::<f64>::new(2, 4).unwrap();
        assert_eq!(d.edges().len(), 2 * 4 * 3);
        let d = GridDomain::<f64>::new(1, 6).unwrap();
        assert_eq!(d.edges().len(), 5);
    }

    #[test]
    fn trace_of_linear_field() {
        let s = EuclidQuadratic::<f64>::origin(1).unwrap();
        let d = GridDomain::new(2, 5).unwrap();
        let f = Field::from_fn(d, &s, |x| vec![2.0 * x[0] - x[1]]).unwrap();
        let tr = f.boundary_trace();
        assert_eq!(tr.nodes.len(), 16);
        for (&k, v) in tr.nodes.iter().zip(&tr.values) {
            let x = d.coords(k);
            assert_eq!(v[0], 2.0 * x[0] - x[1]);
        }
    }

    #[test]
    fn field_rejects_missing_and_invalid_values() {
        let s = EuclidQuadratic::<f64>::origin(2).unwrap();
        let d = GridDomain::new(1, 4).unwrap();
        assert!(Field::new(d, &s, vec![vec![0.0, 0.0]; 3]).is_err());
        assert!(Field::new(d, &s, vec![vec![0.0]; 4]).is_err());
    }

    #[test]
    fn l2_distance_of_constant_fields() {
        let s = EuclidQuadratic::<f64>::origin(2).unwrap();
        let d = GridDomain::new(2, 9).unwrap();
        let f = Field::from_fn(d, &s, |_| vec![0.0, 0.0]).unwrap();
        let g = Field::from_fn(d, &s, |_| vec![3.0, 4.0]).unwrap();
        assert!((l2_field_distance(&s, &f, &g).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(l2_field_distance(&s, &f, &f).unwrap(), 0.0);
        let g = Field::from_fn(d, &s, |x| vec![x[0], x[1]]).unwrap();
        let direct: f64 = (0..d.len())
            .map(|k| {
                let x = d.coords(k);
                d.volume_weight(k) * (x[0] * x[0] + x[1] * x[1])
            })
            .sum::<f64>()
            .sqrt();
        assert!((l2_field_distance(&s, &f, &g).unwrap() - direct).abs() < 1e-12);
        let other = Field::from_fn(GridDomain::new(2, 5).unwrap(), &s, |_| vec![0.0, 0.0]).unwrap();
        assert!(l2_field_distance(&s, &f, &other).is_err());
    }

    #[test]
    fn quantile_interpolated_field_is_monotone() {
        let s = QuantileEntropy::<f64>::new(16, 1e-3).unwrap();
        let a = s.uniform_sample(0.0, 0.5);
        let b = s.uniform_sample(0.0, 1.0);
        let d = GridDomain::new(2, 9).unwrap();
        let f = Field::from_fn(d, &s, |x| lerp(&a, &b, x[0])).unwrap();
        for v in &f.values {
            assert!(v.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn json_round_trip() {
        let s = QuantileEntropy::<f64>::new(4, 1e-3).unwrap();
        let d = GridDomain::new(1, 3).unwrap();
        let f = Field::from_fn(d, &s, |x| s.uniform_sample(0.0, 1.0 + x[0])).unwrap();
        let v = f.to_json();
        assert_eq!(v["space"], "quantile-entropy");
        assert_eq!(v["values"].as_array().unwrap().len(), 3);
        assert_eq!(Field::from_json(&s, v).unwrap(), f);
    }

    #[test]
    fn shipped_test_functions() {
        let d1 = GridDomain::<f64>::new(1, 17).unwrap();
        let d2 = GridDomain::<f64>::new(2, 17).unwrap();
        validate_test_function(&Bump, &d1).unwrap();
        assert!(validate_test_function(&Bump, &d2).is_err());
        for id in ["product-bump", "zero", "sine"] {
            let phi = test_function_by_id::<f64>(id).unwrap();
            validate_test_function(phi.as_ref(), &d1).unwrap();
            validate_test_function(phi.as_ref(), &d2).unwrap();
        }
        assert!(test_function_by_id::<f64>("nope").is_err());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let h = 1e-5;
        for id in ["product-bump", "sine"] {
            let phi = test_function_by_id::<f64>(id).unwrap();
            let x = [0.3, 0.65];
            let g = phi.gradient(x, 2);
            let gx = (phi.value([x[0] + h, x[1]], 2) - phi.value([x[0] - h, x[1]], 2)) / (2.0 * h);
            let gy = (phi.value([x[0], x[1] + h], 2) - phi.value([x[0], x[1] - h], 2)) / (2.0 * h);
            assert!((g[0] - gx).abs() < 1e-8 && (g[1] - gy).abs() < 1e-8, "{id}");
            let hh = 1e-4;
            let lap = (phi.value([x[0] + hh, x[1]], 2) + phi.value([x[0] - hh, x[1]], 2)
                + phi.value([x[0], x[1] + hh], 2)
                + phi.value([x[0], x[1] - hh], 2)
                - 4.0 * phi.value(x, 2))
                / (hh * hh);
            assert!((phi.laplacian(x, 2) - lap).abs() < 1e-5, "{id}");
        }
        // ∂φ/∂𝗇 of the 1-D bump: −φ′(0) = −1 and φ′(1) = −1.
        let n0 = Normal { axis: 0, sign: -1 };
        let n1 = Normal { axis: 0, sign: 1 };
        assert_eq!(TestFunction::<f64>::normal_derivative(&Bump, [0.0, 0.0], 1, n0), -1.0);
        assert_eq!(TestFunction::<f64>::normal_derivative(&Bump, [1.0, 0.0], 1, n1), -1.0);
    }
}
