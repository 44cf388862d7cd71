//! The tripod: three half-lines glued at their origin, with the energy
//! `E = ½ d²(·, z₀)`. It is the smallest NPC space that is not Hilbert.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    barycenter_objective, check_time, check_weights, EnergySpace, FlowAccuracy, FlowResult,
    LowerBound, Slope,
};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

/// A point `(branch, radius)`; all `(b, 0)` are the same origin.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TripodPoint<T> {
    pub branch: u8,
    pub radius: T,
}

impl<T: Real> TripodPoint<T> {
    pub fn new(branch: u8, radius: T) -> Self {
        Self { branch, radius }
    }

    pub fn origin() -> Self {
        Self {
            branch: 1,
            radius: T::zero(),
        }
    }

    pub fn is_origin(&self) -> bool {
        self.radius == T::zero()
    }
}

impl<T: Real> PartialEq for TripodPoint<T> {
    fn eq(&self, other: &Self) -> bool {
        (self.is_origin() && other.is_origin())
            || (self.branch == other.branch && self.radius == other.radius)
    }
}

fn tripod_distance<T: Real>(p: &TripodPoint<T>, q: &TripodPoint<T>) -> T {
    if p.branch == q.branch || p.is_origin() || q.is_origin() {
        (p.radius - q.radius).abs()
    } else {
        p.radius + q.radius
    }
}

/// Point at distance `s ∈ [0, d(p, q)]` from `p` on the geodesic `[p, q]`.
pub(crate) fn geodesic_point<T: Real>(p: &TripodPoint<T>, q: &TripodPoint<T>, s: T) -> TripodPoint<T> {
    if q.is_origin() {
        return TripodPoint::new(p.branch, (p.radius - s).max(T::zero()));
    }
    if p.is_origin() || p.branch == q.branch {
        let r = if q.radius >= p.radius {
            p.radius + s
        } else {
            p.radius - s
        };
        return TripodPoint::new(q.branch, r.max(T::zero()));
    }
    if s <= p.radius {
        TripodPoint::new(p.branch, p.radius - s)
    } else {
        TripodPoint::new(q.branch, (s - p.radius).min(q.radius))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripodQuadratic<T: Real> {
    target: TripodPoint<T>,
}

impl<T: Real> TripodQuadratic<T> {
    pub fn new(target: TripodPoint<T>) -> Result<Self> {
        validate_point(&target)?;
        Ok(Self { target })
    }

    pub fn target(&self) -> &TripodPoint<T> {
        &self.target
    }
}

fn validate_point<T: Real>(p: &TripodPoint<T>) -> Result<()> {
    if !(1..=3).contains(&p.branch) {
        return Err(Error::InvalidPoint(format!("tripod branch {} not in 1..=3", p.branch)));
    }
    if !(p.radius >= T::zero()) || !p.radius.is_finite() {
        return Err(Error::InvalidPoint(format!("tripod radius {} must be >= 0", p.radius)));
    }
    Ok(())
}

impl<T: Real> EnergySpace<T> for TripodQuadratic<T> {
    type Point = TripodPoint<T>;

    fn id(&self) -> &'static str {
        "tripod-quadratic"
    }

    fn validate(&self, p: &TripodPoint<T>) -> Result<()> {
        validate_point(p)
    }

    fn distance(&self, p: &TripodPoint<T>, q: &TripodPoint<T>) -> Result<T> {
        validate_point(p)?;
        validate_point(q)?;
        Ok(tripod_distance(p, q))
    }

    fn energy(&self, p: &TripodPoint<T>) -> Result<T> {
        let d = self.distance(p, &self.target)?;
        Ok(T::lit(0.5) * d * d)
    }

    fn slope(&self, p: &TripodPoint<T>) -> Result<Slope<T>> {
        Ok(Slope {
            value: self.distance(p, &self.target)?,
            exact: true,
        })
    }

    fn flow(&self, p: &TripodPoint<T>, t: T) -> Result<FlowResult<T, TripodPoint<T>>> {
        check_time(t)?;
        let d = self.distance(p, &self.target)?;
        let travelled = d * (T::one() - (-t).exp());
        Ok(FlowResult {
            endpoint: geodesic_point(p, &self.target, travelled),
            elapsed: t,
            substeps: 0,
            accuracy_bound: T::zero(),
        })
    }

    /// Minimizes the branchwise quadratic on each half-line, compares with the
    /// origin, and keeps the origin unless a branch candidate is strictly better.
    fn barycenter(&self, points: &[TripodPoint<T>], weights: &[T]) -> Result<TripodPoint<T>> {
        check_weights(points.len(), weights)?;
        for p in points {
            validate_point(p)?;
        }
        let mut best = TripodPoint::origin();
        let mut best_value = barycenter_objective(self, &best, points, weights)?;
        for branch in 1..=3u8 {
            let mut r = T::zero();
            for (p, &w) in points.iter().zip(weights) {
                if p.is_origin() {
                    continue;
                }
                if p.branch == branch {
                    r = r + w * p.radius;
                } else {
                    r = r - w * p.radius;
                }
            }
            if r > T::zero() {
                let cand = TripodPoint::new(branch, r);
                let value = barycenter_objective(self, &cand, points, weights)?;
                if value < best_value {
                    best = cand;
                    best_value = value;
                }
            }
        }
        Ok(best)
    }

    fn lower_bound_witness(&self) -> LowerBound<T, TripodPoint<T>> {
        LowerBound {
            alpha: T::zero(),
            beta: T::zero(),
            anchor: self.target,
        }
    }

    fn flow_accuracy(&self) -> FlowAccuracy<T> {
        FlowAccuracy::Exact
    }

    /// Uniform branch, radius uniform on `[0, 3]`.
    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> TripodPoint<T> {
        let branch = 1 + rng::index(rng, 3) as u8;
        TripodPoint::new(branch, T::lit(rng::uniform(rng, 0.0, 3.0)))
    }

    /// Point at distance exactly `radius` in a random direction.
    fn perturb<R: Rng + ?Sized>(&self, p: &TripodPoint<T>, radius: T, rng: &mut R) -> TripodPoint<T> {
        let branch = 1 + rng::index(rng, 3) as u8;
        if p.is_origin() {
            return TripodPoint::new(branch, radius);
        }
        if branch == p.branch {
            if rng::uniform(rng, 0.0, 1.0) < 0.5 {
                return TripodPoint::new(branch, p.radius + radius);
            }
            if radius <= p.radius {
                return TripodPoint::new(branch, p.radius - radius);
            }
            return TripodPoint::new(p.branch % 3 + 1, radius - p.radius);
        }
        if radius <= p.radius {
            TripodPoint::new(p.branch, p.radius - radius)
        } else {
            TripodPoint::new(branch, radius - p.radius)
        }
    }
}
