//! Target metric spaces carrying an EVI₀ gradient flow.
//!
//! A plugin bundles a metric, an energy with values in `ℝ ∪ {+∞}`, its
//! metric slope, the gradient-flow semigroup, a weighted barycenter solver
//! and a witness of the linear lower bound `E(p) ≥ α − β·d(p, v)`.

mod euclid;
mod quantile;
mod tripod;

pub use euclid::{EuclidLinear, EuclidQuadratic};
pub use quantile::{ProximalStats, QuantileEntropy, DEFAULT_GAMMA_MIN, DEFAULT_TAU};
pub use tripod::{TripodPoint, TripodQuadratic};

use rand::Rng;
use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{positive_part, Real};

/// How faithfully a plugin evaluates `S_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowAccuracy<T> {
    /// Closed-form semigroup.
    Exact,
    /// Minimizing-movement approximation with maximal step `tau`.
    Proximal { tau: T },
}

impl<T: Real> FlowAccuracy<T> {
    pub fn is_exact(&self) -> bool {
        matches!(self, FlowAccuracy::Exact)
    }
}

/// Result of evaluating `S_t p`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult<T, P> {
    pub endpoint: P,
    pub elapsed: T,
    pub substeps: usize,
    /// Upper bound on `d(endpoint, S_t p)`; zero for closed-form flows.
    pub accuracy_bound: T,
}

/// Slope value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slope<T> {
    pub value: T,
    /// `false` when `value` is a sampled lower estimate of the supremum.
    pub exact: bool,
}

/// Witness `(α, β, v)` of `E(p) ≥ α − β·d(p, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound<T, P> {
    pub alpha: T,
    pub beta: T,
    pub anchor: P,
}

/// Contract every target-space plugin implements.
///
/// Implementations are immutable once built; all methods are pure.
pub trait EnergySpace<T: Real>: Send + Sync {
    type Point: Clone + std::fmt::Debug + PartialEq + Send + Sync + Serialize + DeserializeOwned;

    /// Plugin identifier used by configuration files.
    fn id(&self) -> &'static str;

    /// Checks that `p` is a valid element of the space (not necessarily of `D(E)`).
    fn validate(&self, p: &Self::Point) -> Result<()>;

    fn distance(&self, p: &Self::Point, q: &Self::Point) -> Result<T>;

    /// `E(p)`; `+∞` outside the domain.
    fn energy(&self, p: &Self::Point) -> Result<T>;

    /// `|∂E|(p)` for `p ∈ D(E)`.
    ///
    /// The default is the sampled lower estimate of [`sampled_slope`].
    fn slope(&self, p: &Self::Point) -> Result<Slope<T>> {
        sampled_slope(self, p, SLOPE_SAMPLE_SEED)
    }

    /// `S_t p`.
    fn flow(&self, p: &Self::Point, t: T) -> Result<FlowResult<T, Self::Point>>;

    /// Minimizer of `Σ wᵢ d²(·, pᵢ)`.
    fn barycenter(&self, points: &[Self::Point], weights: &[T]) -> Result<Self::Point>;

    fn lower_bound_witness(&self) -> LowerBound<T, Self::Point>;

    fn flow_accuracy(&self) -> FlowAccuracy<T>;

    /// Whether barycenters are linear means in some coordinates in which `E`
    /// is convex, so that Jensen's inequality holds node by node on grids.
    fn linear_barycenter(&self) -> bool {
        false
    }

    /// Random point from the plugin's documented sampling law, used by the
    /// property harness.
    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;

    /// Random point at distance roughly `radius` from `p`, used by the
    /// slope fallback.
    fn perturb<R: Rng + ?Sized>(&self, p: &Self::Point, radius: T, rng: &mut R) -> Self::Point;
}

/// Fixed seed of the slope fallback so that repeated calls agree.
pub const SLOPE_SAMPLE_SEED: u64 = 0x5107_E5A3;
/// Number of competitors drawn by the slope fallback.
pub const SLOPE_SAMPLES: usize = 1000;
/// Perturbation radii of the slope fallback.
pub const SLOPE_RADII: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];

/// Lower estimate of `sup_q (E(p) − E(q))⁺ / d(p, q)` over
/// [`SLOPE_SAMPLES`] perturbations of `p` spread evenly over [`SLOPE_RADII`].
pub fn sampled_slope<T: Real, S: EnergySpace<T> + ?Sized>(
    space: &S,
    p: &S::Point,
    seed: u64,
) -> Result<Slope<T>> {
    let e_p = space.energy(p)?;
    if !e_p.is_finite() {
        return Err(Error::OutsideDomain);
    }
    let mut rng = rng::seeded(seed);
    let mut best = T::zero();
    for k in 0..SLOPE_SAMPLES {
        let radius = T::lit(SLOPE_RADII[k % SLOPE_RADII.len()]);
        let q = space.perturb(p, radius, &mut rng);
        let d = space.distance(p, &q)?;
        if d <= T::zero() {
            continue;
        }
        let e_q = space.energy(&q)?;
        if !e_q.is_finite() {
            continue;
        }
        let ratio = positive_part(e_p - e_q) / d;
        if ratio > best {
            best = ratio;
        }
    }
    Ok(Slope {
        value: best,
        exact: false,
    })
}

/// `Σ wᵢ d²(c, pᵢ)`, the barycenter objective.
pub fn barycenter_objective<T: Real, S: EnergySpace<T> + ?Sized>(
    space: &S,
    c: &S::Point,
    points: &[S::Point],
    weights: &[T],
) -> Result<T> {
    let mut acc = T::zero();
    for (p, &w) in points.iter().zip(weights) {
        let d = space.distance(c, p)?;
        acc = acc + w * d * d;
    }
    Ok(acc)
}

/// Shared precondition checks for barycenter inputs.
pub(crate) fn check_weights<T: Real>(n_points: usize, weights: &[T]) -> Result<()> {
    if n_points == 0 {
        return Err(Error::EmptyInput);
    }
    if weights.len() != n_points {
        return Err(Error::WeightMismatch(format!(
            "{} weights for {} points",
            weights.len(),
            n_points
        )));
    }
    if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
        return Err(Error::WeightMismatch("negative or non-finite weight".into()));
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::WeightMismatch(format!("weights sum to {total}")));
    }
    Ok(())
}

pub(crate) fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::NegativeTime(t.as_f64()));
    }
    Ok(())
}

/// Squared distance in the Hilbert space `ℝⁿ` with the uniform weight `w`.
pub(crate) fn weighted_sq_dist<T: Real>(a: &[T], b: &[T], w: T) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .sum::<T>()
        * w
}

/// Weighted coordinatewise mean of equally sized vectors.
pub(crate) fn weighted_mean<T: Real>(points: &[Vec<T>], weights: &[T]) -> Vec<T> {
    let dim = points[0].len();
    let mut out = vec![T::zero(); dim];
    for (p, &w) in points.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(p) {
            *o = *o + w * *x;
        }
    }
    out
}
