use rand::Rng;

use super::{
    check_time, check_weights, weighted_mean, weighted_sq_dist, EnergySpace, FlowAccuracy,
    FlowResult, LowerBound, Slope,
};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

fn check_dim<T>(expected: usize, p: &[T]) -> Result<()> {
    if p.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: p.len(),
        });
    }
    Ok(())
}

fn check_finite<T: Real>(p: &[T]) -> Result<()> {
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidPoint("non-finite coordinate".into()));
    }
    Ok(())
}

fn norm<T: Real>(v: &[T]) -> T {
    weighted_sq_dist(v, &vec![T::zero(); v.len()], T::one()).sqrt()
}

fn random_vector<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<T> {
    (0..dim).map(|_| T::lit(rng::uniform(rng, -3.0, 3.0))).collect()
}

fn perturb_vector<T: Real, R: Rng + ?Sized>(p: &[T], radius: T, rng: &mut R) -> Vec<T> {
    let dir: Vec<f64> = (0..p.len()).map(|_| rng::uniform(rng, -1.0, 1.0)).collect();
    let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    p.iter()
        .zip(&dir)
        .map(|(x, d)| *x + radius * T::lit(d / len))
        .collect()
}

/// `ℝⁿ` with `E(u) = ½|u − a|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclidQuadratic<T> {
    center: Vec<T>,
}

impl<T: Real> EuclidQuadratic<T> {
    pub fn new(center: Vec<T>) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidParameter("empty center".into()));
        }
        check_finite(&center)?;
        Ok(Self { center })
    }

    /// `E(u) = ½|u|²` on `ℝⁿ`.
    pub fn origin(dim: usize) -> Result<Self> {
        Self::new(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }
}

impl<T: Real> EnergySpace<T> for EuclidQuadratic<T> {
    type Point = Vec<T>;

    fn id(&self) -> &'static str {
        "euclid-quadratic"
    }

    fn validate(&self, p: &Vec<T>) -> Result<()> {
        check_dim(self.dim(), p)?;
        check_finite(p)
    }

    fn distance(&self, p: &Vec<T>, q: &Vec<T>) -> Result<T> {
        self.validate(p)?;
        self.validate(q)?;
        Ok(weighted_sq_dist(p, q, T::one()).sqrt())
    }

    fn energy(&self, p: &Vec<T>) -> Result<T> {
        self.validate(p)?;
        Ok(T::lit(0.5) * weighted_sq_dist(p, &self.center, T::one()))
    }

    fn slope(&self, p: &Vec<T>) -> Result<Slope<T>> {
        self.validate(p)?;
        Ok(Slope {
            value: weighted_sq_dist(p, &self.center, T::one()).sqrt(),
            exact: true,
        })
    }

    fn flow(&self, p: &Vec<T>, t: T) -> Result<FlowResult<T, Vec<T>>> {
        self.validate(p)?;
        check_time(t)?;
        let decay = (-t).exp();
        let endpoint = p
            .iter()
            .zip(&self.center)
            .map(|(x, a)| *a + decay * (*x - *a))
            .collect();
        Ok(FlowResult {
            endpoint,
            elapsed: t,
            substeps: 0,
            accuracy_bound: T::zero(),
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
            beta: T::zero(),
            anchor: self.center.clone(),
        }
    }

    fn linear_barycenter(&self) -> bool {
        true
    }

    fn flow_accuracy(&self) -> FlowAccuracy<T> {
        FlowAccuracy::Exact
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        random_vector(self.dim(), rng)
    }

    fn perturb<R: Rng + ?Sized>(&self, p: &Vec<T>, radius: T, rng: &mut R) -> Vec<T> {
        perturb_vector(p, radius, rng)
    }
}

/// `ℝⁿ` with `E(u) = ⟨b, u⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclidLinear<T> {
    direction: Vec<T>,
}

impl<T: Real> EuclidLinear<T> {
    pub fn new(direction: Vec<T>) -> Result<Self> {
        if direction.is_empty() {
            return Err(Error::InvalidParameter("empty direction".into()));
        }
        check_finite(&direction)?;
        Ok(Self { direction })
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn direction(&self) -> &[T] {
        &self.direction
    }
}

impl<T: Real> EnergySpace<T> for EuclidLinear<T> {
    type Point = Vec<T>;

    fn id(&self) -> &'static str {
        "euclid-linear"
    }

    fn validate(&self, p: &Vec<T>) -> Result<()> {
        check_dim(self.dim(), p)?;
        check_finite(p)
    }

    fn distance(&self, p: &Vec<T>, q: &Vec<T>) -> Result<T> {
        self.validate(p)?;
        self.validate(q)?;
        Ok(weighted_sq_dist(p, q, T::one()).sqrt())
    }

    fn energy(&self, p: &Vec<T>) -> Result<T> {
        self.validate(p)?;
        Ok(p.iter().zip(&self.direction).map(|(x, b)| *x * *b).sum())
    }

    fn slope(&self, p: &Vec<T>) -> Result<Slope<T>> {
        self.validate(p)?;
        Ok(Slope {
            value: norm(&self.direction),
            exact: true,
        })
    }

    fn flow(&self, p: &Vec<T>, t: T) -> Result<FlowResult<T, Vec<T>>> {
        self.validate(p)?;
        check_time(t)?;
        let endpoint = p
            .iter()
            .zip(&self.direction)
            .map(|(x, b)| *x - t * *b)
            .collect();
        Ok(FlowResult {
            endpoint,
            elapsed: t,
            substeps: 0,
            accuracy_bound: T::zero(),
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
            beta: norm(&self.direction),
            anchor: vec![T::zero(); self.dim()],
        }
    }

    fn linear_barycenter(&self) -> bool {
        true
    }

    fn flow_accuracy(&self) -> FlowAccuracy<T> {
        FlowAccuracy::Exact
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        random_vector(self.dim(), rng)
    }

    fn perturb<R: Rng + ?Sized>(&self, p: &Vec<T>, radius: T, rng: &mut R) -> Vec<T> {
        perturb_vector(p, radius, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::sampled_slope;

    #[test]
    fn distance_is_pythagorean() {
        let s = EuclidQuadratic::<f64>::origin(2).unwrap();
        assert_eq!(s.distance(&vec![0.0, 0.0], &vec![3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn quadratic_energy_and_slope() {
        let s = EuclidQuadratic::<f64>::origin(2).unwrap();
        let u = vec![3.0, 4.0];
        assert_eq!(s.energy(&u).unwrap(), 12.5);
        let sl = s.slope(&u).unwrap();
        assert_eq!(sl.value, 5.0);
        assert!(sl.exact);
    }

    #[test]
    fn linear_slope_is_norm_of_direction() {
        let s = EuclidLinear::new(vec![3.0_f64, -4.0]).unwrap();
        for u in [vec![0.0, 0.0], vec![10.0, -2.0]] {
            assert_eq!(s.slope(&u).unwrap().value, 5.0);
        }
    }

    #[test]
    fn closed_form_flows() {
        let q = EuclidQuadratic::<f64>::origin(1).unwrap();
        let r = q.flow(&vec![4.0], 2f64.ln()).unwrap();
        assert!((r.endpoint[0] - 2.0).abs() < 1e-15);
        assert_eq!(r.accuracy_bound, 0.0);
        let l = EuclidLinear::new(vec![1.0_f64]).unwrap();
        assert_eq!(l.flow(&vec![5.0], 2.0).unwrap().endpoint, vec![3.0]);
    }

    #[test]
    fn shifted_center_flow_fixes_center() {
        let q = EuclidQuadratic::new(vec![1.0_f64, -2.0]).unwrap();
        let r = q.flow(&vec![1.0, -2.0], 3.0).unwrap();
        assert_eq!(r.endpoint, vec![1.0, -2.0]);
    }

    #[test]
    fn negative_time_is_rejected() {
        let q = EuclidQuadratic::<f64>::origin(1).unwrap();
        assert!(matches!(q.flow(&vec![1.0], -0.1), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let q = EuclidQuadratic::<f64>::origin(2).unwrap();
        assert!(matches!(
            q.distance(&vec![0.0], &vec![0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn barycenter_of_square_corners() {
        let q = EuclidQuadratic::<f64>::origin(2).unwrap();
        let pts = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 2.0],
            vec![2.0, 2.0],
        ];
        let b = q.barycenter(&pts, &[0.25; 4]).unwrap();
        assert_eq!(b, vec![1.0, 1.0]);
        assert!(matches!(q.barycenter(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(
            q.barycenter(&pts, &[0.5, 0.5]),
            Err(Error::WeightMismatch(_))
        ));
    }

    #[test]
    fn witnesses() {
        let q = EuclidQuadratic::<f64>::origin(3).unwrap();
        let w = q.lower_bound_witness();
        assert_eq!((w.alpha, w.beta), (0.0, 0.0));
        assert_eq!(w.anchor, vec![0.0; 3]);
        let l = EuclidLinear::new(vec![3.0_f64, 4.0]).unwrap();
        let w = l.lower_bound_witness();
        assert_eq!((w.alpha, w.beta), (0.0, 5.0));
    }

    #[test]
    fn sampled_slope_is_lower_estimate_close_to_exact() {
        let q = EuclidQuadratic::<f64>::origin(2).unwrap();
        let u = vec![3.0, 4.0];
        let est = sampled_slope(&q, &u, 11).unwrap();
        assert!(!est.exact);
        assert!(est.value <= 5.0 + 1e-12);
        assert!(est.value > 4.9);
    }

    #[test]
    fn f32_instantiation() {
        let q = EuclidQuadratic::<f32>::origin(2).unwrap();
        assert_eq!(q.distance(&vec![0.0, 0.0], &vec![3.0, 4.0]).unwrap(), 5.0f32);
    }
}
