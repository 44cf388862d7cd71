//! Falsification harness for the EVI₀ axioms and the standard estimates they
//! imply: contraction, monotonicity of energy and slope, the regularizing
//! effects, speed control, the two-point estimate and the doubled-slope bound.
//!
//! Every check reduces to a family of scalar inequalities `lhs ≤ rhs`. A
//! sample's slack is `rhs − lhs` (negative means violated) and its tolerance
//! is [`EXACT_TOLERANCE`] plus, for proximal flows, ten times the flow
//! accuracy bounds propagated to first order into the checked quantity.

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::parallel;
use crate::rng;
use crate::scalar::Real;
use crate::space::{EnergySpace, FlowResult};

/// Absolute tolerance of checks against closed-form flows.
pub const EXACT_TOLERANCE: f64 = 1e-9;
/// Multiplier applied to propagated proximal accuracy bounds.
pub const PROXIMAL_FACTOR: f64 = 10.0;
/// Multiplier applied to propagated accuracy bounds inside `check_evi`.
pub const EVI_ACCURACY_FACTOR: f64 = 3.0;

/// The nine checks, in report order.
pub const CHECK_NAMES: [&str; 9] = [
    "evi",
    "contraction",
    "monotone_energy",
    "monotone_slope",
    "regularization_energy",
    "regularization_slope",
    "speed",
    "two_point",
    "doubled_slope",
];

/// Outcome of one check over one or more samples. Describes the worst sample,
/// the one with the smallest `slack + tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check_name: String,
    pub samples: usize,
    pub worst_slack: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// `true` when a slope entering the check is only a sampled lower
    /// estimate; such checks never count as failures.
    pub indicative: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub worst_case: Value,
}

impl CheckReport {
    fn empty(name: &str) -> Self {
        Self {
            check_name: name.to_string(),
            samples: 0,
            worst_slack: f64::INFINITY,
            tolerance: 0.0,
            passed: true,
            indicative: false,
            lhs: f64::NAN,
            rhs: f64::NAN,
            worst_case: Value::Null,
        }
    }

    fn push(&mut self, s: Sample) {
        let slack = s.rhs - s.lhs;
        let margin = slack + s.tolerance;
        let worst_margin = self.worst_slack + self.tolerance;
        if self.samples == 0 || margin < worst_margin || margin.is_nan() {
            self.worst_slack = slack;
            self.tolerance = s.tolerance;
            self.lhs = s.lhs;
            self.rhs = s.rhs;
            self.worst_case = s.inputs;
        }
        self.indicative |= s.indicative;
        self.samples += 1;
        self.passed = self.worst_slack >= -self.tolerance;
    }

    /// Folds `other` into `self`, keeping the worse sample. Ties keep `self`.
    pub fn merge(&mut self, other: CheckReport) {
        if other.samples == 0 {
            return;
        }
        let total = self.samples + other.samples;
        let indicative = self.indicative || other.indicative;
        if self.samples == 0
            || other.worst_slack + other.tolerance < self.worst_slack + self.tolerance
        {
            *self = other;
        }
        self.samples = total;
        self.indicative = indicative;
        self.passed = self.worst_slack >= -self.tolerance;
    }

    /// Whether the report counts against the run (failed and not indicative).
    pub fn is_failure(&self) -> bool {
        !self.passed && !self.indicative
    }
}

struct Sample {
    lhs: f64,
    rhs: f64,
    tolerance: f64,
    indicative: bool,
    inputs: Value,
}

fn sample<T: Real>(lhs: T, rhs: T, propagated: T, factor: f64, indicative: bool, inputs: Value) -> Sample {
    let prop = propagated.as_f64();
    Sample {
        lhs: lhs.as_f64(),
        rhs: rhs.as_f64(),
        tolerance: EXACT_TOLERANCE + factor * if prop.is_nan() { f64::INFINITY } else { prop },
        indicative,
        inputs,
    }
}

fn to_json<P: Serialize>(p: &P) -> Value {
    serde_json::to_value(p).unwrap_or(Value::Null)
}

fn finite_energy<T: Real, S: EnergySpace<T>>(space: &S, p: &S::Point) -> Result<T> {
    let e = space.energy(p)?;
    if !e.is_finite() {
        return Err(Error::InfiniteEnergy);
    }
    Ok(e)
}

/// Evaluated flow point with the quantities the checks need.
struct Evaluated<T, P> {
    point: P,
    energy: T,
    slope: T,
    slope_exact: bool,
    accuracy: T,
}

fn evaluate<T: Real, S: EnergySpace<T>>(space: &S, u: &S::Point, t: T) -> Result<Evaluated<T, S::Point>> {
    let FlowResult {
        endpoint,
        accuracy_bound,
        ..
    } = space.flow(u, t)?;
    let energy = space.energy(&endpoint)?;
    let (slope, slope_exact) = if energy.is_finite() {
        let s = space.slope(&endpoint)?;
        (s.value, s.exact)
    } else {
        (T::infinity(), true)
    };
    Ok(Evaluated {
        point: endpoint,
        energy,
        slope,
        slope_exact,
        accuracy: accuracy_bound,
    })
}

fn check_sorted<T: Real>(grid: &[T], strict_positive: bool) -> Result<()> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time grid must be increasing".into()));
    }
    if let Some(&first) = grid.first() {
        if first < T::zero() || (strict_positive && first <= T::zero()) {
            return Err(Error::NegativeTime(first.as_f64()));
        }
    }
    Ok(())
}

/// Integrated EVI between consecutive grid times:
/// `½d²(S_{t₂}u, v) − ½d²(S_{t₁}u, v) + ∫_{t₁}^{t₂} (E(S_t u) − E(v)) dt ≤ 0`,
/// the integral by the trapezoidal rule. `t ↦ E(S_t u)` is nonincreasing, so
/// the trapezoidal error on `[t₁, t₂]` is at most `(t₂ − t₁)|E₁ − E₂|/2`,
/// which is added to the tolerance.
pub fn check_evi<T: Real, S: EnergySpace<T>>(space: &S, u: &S::Point, v: &S::Point, t_grid: &[T]) -> Result<CheckReport> {
    check_sorted(t_grid, false)?;
    let e_v = finite_energy(space, v)?;
    let mut report = CheckReport::empty("evi");
    let states: Vec<_> = t_grid.iter().map(|&t| evaluate(space, u, t)).collect::<Result<_>>()?;
    let half = T::lit(0.5);
    for k in 0..states.len().saturating_sub(1) {
        let (a, b) = (&states[k], &states[k + 1]);
        let dt = t_grid[k + 1] - t_grid[k];
        let da = space.distance(&a.point, v)?;
        let db = space.distance(&b.point, v)?;
        let integral = dt * half * ((a.energy - e_v) + (b.energy - e_v));
        let lhs = half * db * db - half * da * da + integral;
        let quadrature = dt * half * (a.energy - b.energy).abs();
        let propagated = (db + b.accuracy) * b.accuracy
            + (da + a.accuracy) * a.accuracy
            + dt * half * (a.slope * a.accuracy + b.slope * b.accuracy);
        let mut s = sample(lhs, T::zero(), propagated, EVI_ACCURACY_FACTOR, false, json!({
            "u": to_json(u), "v": to_json(v), "t1": t_grid[k].as_f64(), "t2": t_grid[k + 1].as_f64()
        }));
        s.tolerance += quadrature.as_f64();
        report.push(s);
    }
    Ok(report)
}

/// Contraction `d(S_t u, S_t v) ≤ d(u, v)`, checked in the squared form
/// `½d²(S_t u, S_t v) ≤ ½d²(u, v)`, which coincides with the two-point
/// estimate at equal times.
pub fn check_contraction<T: Real, S: EnergySpace<T>>(space: &S, u: &S::Point, v: &S::Point, t_samples: &[T]) -> Result<CheckReport> {
    let mut report = CheckReport::empty("contraction");
    let d0 = space.distance(u, v)?;
    let half = T::lit(0.5);
    for &t in t_samples {
        let a = space.flow(u, t)?;
        let b = space.flow(v, t)?;
        let d = space.distance(&a.endpoint, &b.endpoint)?;
        let e = a.accuracy_bound + b.accuracy_bound;
        report.push(sample(half * d * d, half * d0 * d0, (d + e) * e, PROXIMAL_FACTOR, false, json!({
            "u": to_json(u), "v": to_json(v), "t": t.as_f64()
        })));
    }
    Ok(report)
}

/// `t ↦ E(S_t u)` is nonincreasing along the grid.
pub fn check_monotone_energy<T: Real, S: EnergySpace<T>>(space: &S, u: &S::Point, t_grid: &[T]) -> Result<CheckReport> {
    check_sorted(t_grid, false)?;
    let mut report = CheckReport::empty("monotone_energy");
    let states: Vec<_> = t_grid.iter().map(|&t| evaluate(space, u, t)).collect::<Result<_>>()?;
    let two = T::lit(2.0);
    for k in 0..states.len().saturating_sub(1) {
        let (a, b) = (&states[k], &states[k + 1]);
        if !a.energy.is_finite() {
            continue;
        }
        let propagated = two * (a.slope * a.accuracy + b.slope * b.accuracy);
        report.push(sample(b.energy, a.energy, propagated, PROXIMAL_FACTOR, false, json!({
            "u": to_json(u), "t1": t_grid[k].as_f64(), "t2": t_grid[k + 1].as_f64()
        })));
    }
    Ok(report)
}

/// `t ↦ |∂E|(S_t u)` is nonincreasing along the grid.
///
/// For proximal flows the slope error is propagated through a finite
/// difference of the slope along the computed trajectory.
pub fn check_monotone_slope<T: Real, S: EnergySpace<T>>(space: &S, u: &S::Point, t_grid: &[T]) -> Result<CheckReport> {
    check_sorted(t_grid, false)?;
    let mut report = CheckReport::empty("monotone_slope");
    let states: Vec<_> = t_grid.iter().map(|&t| evaluate(space, u, t)).collect::<Result<_>>()?;
    for k in 0..states.len().saturating_sub(1) {
        let (a, b) = (&states[k], &states[k + 1]);
        if !a.slope.is_finite() {
            continue;
        }
        let propagated = slope_sensitivity(space, a)? * a.accuracy + slope_sensitivity(space, b)? * b.accuracy;
        report.push(sample(b.slope, a.slope, propagated, PROXIMAL_FACTOR, !(a.slope_exact && b.slope_exact), json!({
            "u": to_json(u), "t1": t_grid[k].as_f64(), "t2": t_grid[k + 1].as_f64()
        })));
    }
    Ok(report)
}

/// Local Lipschitz estimate of the slope at an evaluated point: the change in
/// slope over one short flow step divided by the distance travelled. Zero for
/// exact flows (no propagation needed).
fn slope_sensitivity<T: Real, S: EnergySpace<T>>(space: &S, at: &Evaluated<T, S::Point>) -> Result<T> {
    if at.accuracy == T::zero() {
        return Ok(T::zero());
    }
    if !at.accuracy.is_finite() {
        return Ok(T::infinity());
    }
    let probe = space.flow(&at.point, at.accuracy.max(T::lit(1e-6)))?;
    let d = space.distance(&at.point, &probe.endpoint)?;
    if d <= T::zero() {
        return Ok(T::zero());
    }
    let s = space.slope(&probe.endpoint)?.value;
    Ok(((at.slope - s).abs() / d).max(at.slope))
}

/// `E(S_t u) ≤ E(v) + d²(u, v)/(2t)` for `t > 0`.
pub fn check_regularization_energy<T: Real, S: EnergySpace<T>>(space: &S, u: &S::Point, v: &S::Point, t_samples: &[T]) -> Result<CheckReport> {
    let e_v = finite_energy(space, v)?;
    let d = space.distance(u, v)?;
    let mut report = CheckReport::empty("regularization_energy");
    for &t in t_samples {
        if !(t > T::zero()) {
            return Err(Error::NegativeTime(t.as_f64()));
        }
        let a = evaluate(space, u, t)?;
        let rhs = e_v + d * d / (T::lit(2.0) * t);
        report.push(sample(a.energy, rhs, T::lit(2.0) * a.slope * a.accuracy, PROXIMAL_FACTOR, false, json!({
            "u": to_json(u), "v": to_json(v), "t": t.as_f64()
        })));
    }
    Ok(report)
}

/// `|∂E|²(S_t u) ≤ |∂E|²(v) + d²(u, v)/t²` for `t > 0`.
pub fn check_regularization_slope<T: Real, S: EnergySpace<T>>(space: &S, u: &S::Point, v: &S::Point, t_samples: &[T]) -> Result<CheckReport> {
    finite_energy(space, v)?;
    let sv = space.slope(v)?;
    let d = space.distance(u, v)?;
    let mut report = CheckReport::empty("regularization_slope");
    for &t in t_samples {
        if !(t > T::zero()) {
            return Err(Error::NegativeTime(t.as_f64()));
        }
        let a = evaluate(space, u, t)?;
        let rhs = sv.value * sv.value + d * d / (t * t);
        let propagated = T::lit(2.0) * a.slope * slope_sensitivity(space, &a)? * a.accuracy;
        report.push(sample(a.slope * a.slope, rhs, propagated, PROXIMAL_FACTOR, !(sv.exact && a.slope_exact), json!({
            "u": to_json(u), "v": to_json(v), "t": t.as_f64()
        })));
    }
    Ok(report)
}

/// `d(S_{t₁}u, S_{t₂}u) ≤ |t₁ − t₂|(|∂E|(S_{t₁}u) + |∂E|(S_{t₂}u))`.
pub fn check_speed<T: Real, S: EnergySpace<T>>(space: &S, u: &S::Point, t1: T, t2: T) -> Result<CheckReport> {
    let a = evaluate(space, u, t1)?;
    let b = evaluate(space, u, t2)?;
    let lhs = space.distance(&a.point, &b.point)?;
    let gap = (t1 - t2).abs();
    let rhs = gap * (a.slope + b.slope);
    let propagated = a.accuracy + b.accuracy
        + gap * (slope_sensitivity(space, &a)? * a.accuracy + slope_sensitivity(space, &b)? * b.accuracy);
    let mut report = CheckReport::empty("speed");
    report.push(sample(lhs, rhs, propagated, PROXIMAL_FACTOR, !(a.slope_exact && b.slope_exact), json!({
        "u": to_json(u), "t1": t1.as_f64(), "t2": t2.as_f64()
    })));
    Ok(report)
}

/// Two-point estimate with `vᵢ = S_{tᵢ}uᵢ`:
/// `½d²(v₁, v₂) + (t₁ − t₂)(E(v₁) − E(v₂)) ≤ ½d²(u₁, u₂)`.
pub fn check_two_point<T: Real, S: EnergySpace<T>>(space: &S, u1: &S::Point, u2: &S::Point, t1: T, t2: T) -> Result<CheckReport> {
    if !(t1 > T::zero()) || !(t2 > T::zero()) {
        return Err(Error::NegativeTime(t1.min(t2).as_f64()));
    }
    let mut report = CheckReport::empty("two_point");
    report.push(two_point_sample(space, u1, u2, t1, t2)?);
    Ok(report)
}

fn two_point_sample<T: Real, S: EnergySpace<T>>(space: &S, u1: &S::Point, u2: &S::Point, t1: T, t2: T) -> Result<Sample> {
    let a = evaluate(space, u1, t1)?;
    let b = evaluate(space, u2, t2)?;
    let half = T::lit(0.5);
    let d0 = space.distance(u1, u2)?;
    let d = space.distance(&a.point, &b.point)?;
    let gap = t1 - t2;
    let lhs = if gap == T::zero() {
        half * d * d
    } else {
        half * d * d + gap * (a.energy - b.energy)
    };
    let e = a.accuracy + b.accuracy;
    let propagated = (d + e) * e + gap.abs() * T::lit(2.0) * (a.slope * a.accuracy + b.slope * b.accuracy);
    Ok(sample(lhs, half * d0 * d0, propagated, PROXIMAL_FACTOR, false, json!({
        "u1": to_json(u1), "u2": to_json(u2), "t1": t1.as_f64(), "t2": t2.as_f64()
    })))
}

/// `|E(u) − E(v)| ≤ (|∂E|(u) + |∂E|(v))·d(u, v)`; indicative when either
/// slope is a sampled lower estimate.
pub fn check_doubled_slope<T: Real, S: EnergySpace<T>>(space: &S, u: &S::Point, v: &S::Point) -> Result<CheckReport> {
    let eu = finite_energy(space, u)?;
    let ev = finite_energy(space, v)?;
    let su = space.slope(u)?;
    let sv = space.slope(v)?;
    let d = space.distance(u, v)?;
    let mut report = CheckReport::empty("doubled_slope");
    report.push(sample((eu - ev).abs(), (su.value + sv.value) * d, T::zero(), 0.0, !(su.exact && sv.exact), json!({
        "u": to_json(u), "v": to_json(v)
    })));
    Ok(report)
}

/// Random inputs shared by all nine checks for one sample index.
#[derive(Debug, Clone)]
pub struct SuiteInputs<T, P> {
    pub u: P,
    pub v: P,
    /// `0` followed by five sorted uniform times in `(0, t_max]`.
    pub t_grid: Vec<T>,
    /// Four uniform times in `[t_min, t_max]`.
    pub t_samples: Vec<T>,
    pub t1: T,
    pub t2: T,
}

/// Time window of the random suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for TimeWindow {
    fn default() -> Self {
        Self {
            t_min: 0.05,
            t_max: 2.0,
        }
    }
}

pub fn draw_inputs<T: Real, S: EnergySpace<T>, R: Rng + ?Sized>(space: &S, window: TimeWindow, rng: &mut R) -> SuiteInputs<T, S::Point> {
    let u = space.random_point(rng);
    let v = space.random_point(rng);
    let mut times: Vec<f64> = (0..5).map(|_| rng::uniform(rng, window.t_min, window.t_max)).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    times.dedup();
    let mut t_grid = vec![T::zero()];
    t_grid.extend(times.into_iter().map(T::lit));
    let t_samples = (0..4).map(|_| T::lit(rng::uniform(rng, window.t_min, window.t_max))).collect();
    let t1 = T::lit(rng::uniform(rng, window.t_min, window.t_max));
    let t2 = T::lit(rng::uniform(rng, window.t_min, window.t_max));
    SuiteInputs {
        u,
        v,
        t_grid,
        t_samples,
        t1,
        t2,
    }
}

/// Runs all nine checks on one input set, in [`CHECK_NAMES`] order.
pub fn run_all<T: Real, S: EnergySpace<T>>(space: &S, inp: &SuiteInputs<T, S::Point>) -> Result<[CheckReport; 9]> {
    Ok([
        check_evi(space, &inp.u, &inp.v, &inp.t_grid)?,
        check_contraction(space, &inp.u, &inp.v, &inp.t_samples)?,
        check_monotone_energy(space, &inp.u, &inp.t_grid)?,
        check_monotone_slope(space, &inp.u, &inp.t_grid)?,
        check_regularization_energy(space, &inp.u, &inp.v, &inp.t_samples)?,
        check_regularization_slope(space, &inp.u, &inp.v, &inp.t_samples)?,
        check_speed(space, &inp.u, inp.t1, inp.t2)?,
        check_two_point(space, &inp.u, &inp.v, inp.t1, inp.t2)?,
        check_doubled_slope(space, &inp.u, &inp.v)?,
    ])
}

/// Seeded random suite: `samples` independent input sets, sample `i` drawn
/// from stream `i` of `seed`. Samples run in parallel and are folded in index
/// order.
pub fn run_suite<T: Real, S: EnergySpace<T>>(space: &S, seed: u64, samples: usize, window: TimeWindow) -> Result<Vec<CheckReport>> {
    let per_sample = parallel::map_indexed(samples, |i| {
        let mut r = rng::stream(seed, i as u64);
        let inputs = draw_inputs(space, window, &mut r);
        run_all(space, &inputs)
    });
    let mut out: Vec<CheckReport> = CHECK_NAMES.iter().map(|n| CheckReport::empty(n)).collect();
    for reports in per_sample {
        for (acc, r) in out.iter_mut().zip(reports?) {
            acc.merge(r);
        }
    }
    Ok(out)
}

/// Inputs `(u₁, u₂, t₁, t₂)` of sample `index` of the two-point study.
pub fn two_point_inputs<T: Real, S: EnergySpace<T>>(space: &S, seed: u64, index: usize, window: TimeWindow) -> (S::Point, S::Point, T, T) {
    let mut r = rng::stream(seed, index as u64);
    let u1 = space.random_point(&mut r);
    let u2 = space.random_point(&mut r);
    let t1 = T::lit(rng::uniform(&mut r, window.t_min, window.t_max));
    let t2 = T::lit(rng::uniform(&mut r, window.t_min, window.t_max));
    (u1, u2, t1, t2)
}

/// Seeded two-point study: `samples` random `(u₁, u₂, t₁, t₂)` from
/// [`two_point_inputs`].
pub fn run_two_point_study<T: Real, S: EnergySpace<T>>(space: &S, seed: u64, samples: usize, window: TimeWindow) -> Result<CheckReport> {
    let per_sample = parallel::map_indexed(samples, |i| {
        let (u1, u2, t1, t2) = two_point_inputs(space, seed, i, window);
        two_point_sample(space, &u1, &u2, t1, t2)
    });
    let mut report = CheckReport::empty("two_point");
    for s in per_sample {
        report.push(s?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{EuclidLinear, EuclidQuadratic, TripodPoint, TripodQuadratic};

    fn quad() -> EuclidQuadratic<f64> {
        EuclidQuadratic::origin(1).unwrap()
    }

    #[test]
    fn evi_closed_form_single_interval() {
        // ½e⁻² − ½ + ∫₀¹ ½e⁻²ᵗ dt = −¼(1 − e⁻²) exactly; the trapezoid
        // overestimates the integral of the convex energy, so its slack is a
        // lower bound for 0.216.
        let r = check_evi(&quad(), &vec![1.0], &vec![0.0], &[0.0, 1.0]).unwrap();
        let exact = 0.25 * (1.0 - (-2.0f64).exp());
        assert!((exact - 0.2162).abs() < 1e-4);
        let trap = 0.5 - 0.5 * (-2.0f64).exp() - 0.5 * (0.5 + 0.5 * (-2.0f64).exp());
        assert!((r.worst_slack - trap).abs() < 1e-14);
        assert!(r.worst_slack > 0.0 && r.worst_slack <= exact);
        assert!(r.passed);
    }

    #[test]
    fn evi_linear_energy_is_equality() {
        let s = EuclidLinear::new(vec![1.0]).unwrap();
        let grid = [0.0, 0.25, 0.5, 1.0, 2.0];
        let r = check_evi(&s, &vec![0.0], &vec![0.0], &grid).unwrap();
        assert_eq!(r.samples, 4);
        assert!(r.worst_slack.abs() < 1e-14);
        assert!(r.passed);
    }

    #[test]
    fn evi_at_fixed_point_has_zero_slack() {
        let s = EuclidQuadratic::new(vec![2.0]).unwrap();
        let r = check_evi(&s, &vec![2.0], &vec![2.0], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(r.worst_slack, 0.0);
    }

    #[test]
    fn evi_rejects_infinite_reference_energy() {
        let s = crate::space::QuantileEntropy::new(3, 1e-3).unwrap();
        let err = check_evi(&s, &vec![0.0, 0.5, 1.0], &vec![0.0, 0.0, 1.0], &[0.0, 0.1]);
        assert!(matches!(err, Err(Error::InfiniteEnergy)));
    }

    #[test]
    fn contraction_closed_form() {
        let r = check_contraction(&quad(), &vec![1.0], &vec![-0.5], &[0.0, 0.3, 1.0]).unwrap();
        // Worst sample is t = 0 (equality).
        assert_eq!(r.worst_slack, 0.0);
        let r = check_contraction(&quad(), &vec![1.0], &vec![-0.5], &[1.0]).unwrap();
        let expect = 0.5 * 1.5f64.powi(2) * (1.0 - (-2.0f64).exp());
        assert!((r.worst_slack - expect).abs() < 1e-14);
    }

    #[test]
    fn contraction_on_target_branch_of_tripod() {
        let s = TripodQuadratic::new(TripodPoint::new(1, 1.0)).unwrap();
        let (u, v) = (TripodPoint::new(1, 3.0), TripodPoint::new(1, 2.0));
        let t = 0.7;
        let a = s.flow(&u, t).unwrap().endpoint;
        let b = s.flow(&v, t).unwrap().endpoint;
        assert!((s.distance(&a, &b).unwrap() - f64::exp(-t)).abs() < 1e-14);
        assert!(check_contraction(&s, &u, &v, &[t]).unwrap().passed);
    }

    #[test]
    fn monotone_energy_and_slope() {
        let grid = [0.0, 0.1, 0.5, 2.0];
        let r = check_monotone_energy(&quad(), &vec![2.0], &grid).unwrap();
        assert!(r.passed && r.worst_slack > 0.0);
        let r = check_monotone_energy(&quad(), &vec![0.0], &grid).unwrap();
        assert_eq!(r.worst_slack, 0.0);
        let r = check_monotone_slope(&quad(), &vec![2.0], &grid).unwrap();
        assert!(r.passed && r.worst_slack > 0.0);
        let lin = EuclidLinear::new(vec![3.0, 4.0]).unwrap();
        let r = check_monotone_slope(&lin, &vec![1.0, 1.0], &grid).unwrap();
        assert_eq!(r.worst_slack, 0.0);
    }

    #[test]
    fn regularization_examples() {
        let r = check_regularization_energy(&quad(), &vec![1.0], &vec![0.0], &[1.0]).unwrap();
        assert!((r.lhs - 0.5 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((r.lhs - 0.0677).abs() < 1e-4);
        assert_eq!(r.rhs, 0.5);
        let r = check_regularization_slope(&quad(), &vec![1.0], &vec![0.0], &[1.0]).unwrap();
        assert!((r.lhs - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(r.rhs, 1.0);
        let lin = EuclidLinear::new(vec![1.0, 2.0]).unwrap();
        let r = check_regularization_slope(&lin, &vec![0.0, 0.0], &vec![3.0, 4.0], &[0.5]).unwrap();
        assert!((r.worst_slack - 25.0 / 0.25).abs() < 1e-12);
    }

    #[test]
    fn speed_examples() {
        let r = check_speed(&quad(), &vec![1.0], 0.5, 1.0).unwrap();
        assert!((r.lhs - 0.2387).abs() < 1e-4);
        assert!((r.rhs - 0.4872).abs() < 1e-4);
        let r = check_speed(&quad(), &vec![1.0], 0.7, 0.7).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        let lin = EuclidLinear::new(vec![3.0, 4.0]).unwrap();
        let r = check_speed(&lin, &vec![0.0, 0.0], 0.2, 1.2).unwrap();
        assert!((r.lhs - 5.0).abs() < 1e-14 && (r.rhs - 10.0).abs() < 1e-14);
    }

    #[test]
    fn two_point_example() {
        let r = check_two_point(&quad(), &vec![1.0], &vec![0.0], 1.0, 0.5).unwrap();
        assert!((r.lhs - 0.75 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((r.lhs - 0.1015).abs() < 1e-4);
        assert_eq!(r.rhs, 0.5);
        assert!(check_two_point(&quad(), &vec![1.0], &vec![0.0], 0.0, 0.5).is_err());
    }

    #[test]
    fn two_point_at_equal_times_matches_contraction() {
        let s = EuclidQuadratic::origin(3).unwrap();
        let mut r = rng::seeded(4);
        for _ in 0..100 {
            let u = s.random_point(&mut r);
            let v = s.random_point(&mut r);
            let t = rng::uniform(&mut r, 0.05, 2.0);
            let a = check_two_point(&s, &u, &v, t, t).unwrap();
            let b = check_contraction(&s, &u, &v, &[t]).unwrap();
            assert_eq!(a.worst_slack, b.worst_slack);
        }
    }

    #[test]
    fn doubled_slope_examples() {
        let r = check_doubled_slope(&quad(), &vec![3.0], &vec![1.0]).unwrap();
        assert_eq!((r.lhs, r.rhs), (4.0, 8.0));
        let r = check_doubled_slope(&quad(), &vec![3.0], &vec![3.0]).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        let lin = EuclidLinear::new(vec![1.0, -1.0]).unwrap();
        let r = check_doubled_slope(&lin, &vec![1.0, 0.0], &vec![0.0, 0.0]).unwrap();
        assert!((r.rhs - 2.0 * 2f64.sqrt()).abs() < 1e-15 && r.lhs == 1.0);
    }

    #[test]
    fn violation_is_detected() {
        // A fake "flow" that moves uphill must fail monotonicity.
        #[derive(Clone)]
        struct Uphill(EuclidQuadratic<f64>);
        impl EnergySpace<f64> for Uphill {
            type Point = Vec<f64>;
            fn id(&self) -> &'static str {
                "uphill"
            }
            fn validate(&self, p: &Vec<f64>) -> Result<()> {
                self.0.validate(p)
            }
            fn distance(&self, p: &Vec<f64>, q: &Vec<f64>) -> Result<f64> {
                self.0.distance(p, q)
            }
            fn energy(&self, p: &Vec<f64>) -> Result<f64> {
                self.0.energy(p)
            }
            fn flow(&self, p: &Vec<f64>, t: f64) -> Result<FlowResult<f64, Vec<f64>>> {
                let mut r = self.0.flow(p, t)?;
                r.endpoint = p.iter().map(|x| x * t.exp()).collect();
                Ok(r)
            }
            fn barycenter(&self, points: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
                self.0.barycenter(points, weights)
            }
            fn lower_bound_witness(&self) -> crate::space::LowerBound<f64, Vec<f64>> {
                self.0.lower_bound_witness()
            }
            fn flow_accuracy(&self) -> crate::space::FlowAccuracy<f64> {
                self.0.flow_accuracy()
            }
            fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
                self.0.random_point(rng)
            }
            fn perturb<R: Rng + ?Sized>(&self, p: &Vec<f64>, radius: f64, rng: &mut R) -> Vec<f64> {
                self.0.perturb(p, radius, rng)
            }
        }
        let s = Uphill(quad());
        let r = check_monotone_energy(&s, &vec![1.0], &[0.0, 1.0]).unwrap();
        assert!(!r.passed && r.is_failure());
        // Default slope is the sampled estimate, so the doubled-slope check is
        // only indicative.
        let r = check_doubled_slope(&s, &vec![1.0], &vec![-2.0]).unwrap();
        assert!(r.indicative);
        assert!(!r.is_failure());
    }

    #[test]
    fn merge_keeps_worst() {
        let mut a = CheckReport::empty("x");
        a.push(Sample { lhs: 0.0, rhs: 1.0, tolerance: 0.0, indicative: false, inputs: json!(1) });
        let mut b = CheckReport::empty("x");
        b.push(Sample { lhs: 0.0, rhs: 0.5, tolerance: 0.0, indicative: false, inputs: json!(2) });
        a.merge(b);
        assert_eq!(a.samples, 2);
        assert_eq!(a.worst_slack, 0.5);
        assert_eq!(a.worst_case, json!(2));
    }
}
