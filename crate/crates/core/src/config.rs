//! Domain types and derived solver constants.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::oracle::ProblemSpec;
use crate::projection::Domain;
use crate::solver::DualCapEstimate;

/// Primal iterate `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint(Vec<f64>);

impl DecisionPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        DecisionPoint(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        DecisionPoint(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn norm(&self) -> f64 {
        math::norm(&self.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for DecisionPoint {
    fn from(v: Vec<f64>) -> Self {
        DecisionPoint(v)
    }
}

/// Lagrange multipliers, one per constraint, each kept in `[0, cap_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub fn new(coords: Vec<f64>) -> Self {
        DualVector(coords)
    }

    pub fn zeros(m: usize) -> Self {
        DualVector(vec![0.0; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn within_caps(&self, caps: &[f64]) -> bool {
        self.0.len() == caps.len() && self.0.iter().zip(caps).all(|(&l, &c)| (0.0..=c).contains(&l))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Constraint levels `gamma`, optionally with the tightened levels used by the
/// exact-feasibility variant.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    gamma: Vec<f64>,
    tightened: Option<Vec<f64>>,
}

impl Thresholds {
    pub fn new(gamma: Vec<f64>) -> Self {
        Thresholds { gamma, tightened: None }
    }

    /// Lowers every level by `shift`: `gamma_hat_i = gamma_i - shift`.
    pub fn tighten(&self, shift: f64) -> Self {
        Thresholds {
            gamma: self.gamma.clone(),
            tightened: Some(self.gamma.iter().map(|g| g - shift).collect()),
        }
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn tightened(&self) -> Option<&[f64]> {
        self.tightened.as_deref()
    }

    /// Levels the solver actually targets.
    pub fn effective(&self) -> &[f64] {
        self.tightened.as_deref().unwrap_or(&self.gamma)
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }
}

/// `eta = sqrt((R^2 + D^2) / (2T)) / G`.
pub fn step_size(radius: f64, dual_radius: f64, horizon: u64, gradient_bound: f64) -> Result<f64> {
    if !(gradient_bound > 0.0) || !gradient_bound.is_finite() {
        return Err(Error::config(format!("gradient bound must be positive, got {gradient_bound}")));
    }
    if horizon == 0 {
        return Err(Error::config("horizon must be at least 1"));
    }
    if !(radius > 0.0) {
        return Err(Error::config(format!("radius must be positive, got {radius}")));
    }
    let r2d2 = radius * radius + dual_radius * dual_radius;
    Ok(math::sqrt(r2d2 / (2.0 * horizon as f64)) / gradient_bound)
}

/// High-probability constant
/// `mu(delta) = sqrt(2) G sqrt(R^2 + D^2) + 2 G (R + D) sqrt(2 ln(1/delta))`.
///
/// `delta = 1` is accepted and drops the logarithmic term.
pub fn mu_bound(delta: f64, gradient_bound: f64, radius: f64, dual_radius: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain { name: "delta", value: delta, domain: "(0, 1]" });
    }
    let g = gradient_bound;
    let r2d2 = radius * radius + dual_radius * dual_radius;
    Ok(core::f64::consts::SQRT_2 * g * math::sqrt(r2d2)
        + 2.0 * g * (radius + dual_radius) * math::sqrt(2.0 * math::ln(1.0 / delta)))
}

/// User-facing solver knobs. Everything else in [`SolverConfig`] is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub horizon: u64,
    pub theta: f64,
    pub delta: f64,
    pub seed: u64,
}

/// Validated solver configuration with all derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    dim: usize,
    domain: Domain,
    radius: f64,
    thresholds: Thresholds,
    horizon: u64,
    theta: f64,
    delta: f64,
    dual_caps: Vec<f64>,
    lipschitz: f64,
    tau: Option<f64>,
    gradient_bound: f64,
    seed: u64,
}

impl SolverConfig {
    pub fn new(spec: &ProblemSpec, params: SolverParams, caps: &DualCapEstimate) -> Result<Self> {
        let m = spec.constraints;
        if spec.gamma.len() != m {
            return Err(Error::Dimension { expected: m, actual: spec.gamma.len() });
        }
        if caps.caps.len() != m {
            return Err(Error::Dimension { expected: m, actual: caps.caps.len() });
        }
        if !(params.theta > 0.0) {
            return Err(Error::config(format!("theta must be positive, got {}", params.theta)));
        }
        if params.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        let delta_max = 1.0 / (2 * m + 1) as f64;
        if !(params.delta > 0.0 && params.delta < delta_max) {
            return Err(Error::config(format!(
                "delta = {} must lie in (0, 1/(2m+1)) = (0, {delta_max}); \
                 the guarantee holds with probability 1 - (2m+1) delta",
                params.delta
            )));
        }
        if caps.caps.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::config("dual caps must be positive and finite"));
        }
        if !(spec.lipschitz > 0.0) {
            return Err(Error::config("Lipschitz constant must be positive"));
        }
        let cfg = SolverConfig {
            dim: spec.dim,
            domain: spec.domain,
            radius: spec.domain.radius(),
            thresholds: Thresholds::new(spec.gamma.clone()),
            horizon: params.horizon,
            theta: params.theta,
            delta: params.delta,
            dual_caps: caps.caps.clone(),
            lipschitz: spec.lipschitz,
            tau: spec.tau,
            gradient_bound: caps.gradient_bound,
            seed: params.seed,
        };
        // Surfaces a non-positive G early.
        cfg.step_size()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> usize {
        self.dual_caps.len()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dual_caps(&self) -> &[f64] {
        &self.dual_caps
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    pub fn gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `D^2 = sum_i caps_i^2`.
    pub fn dual_radius_sq(&self) -> f64 {
        self.dual_caps.iter().map(|c| c * c).sum()
    }

    pub fn dual_radius(&self) -> f64 {
        math::sqrt(self.dual_radius_sq())
    }

    pub fn step_size(&self) -> Result<f64> {
        step_size(self.radius, self.dual_radius(), self.horizon, self.gradient_bound)
    }

    pub fn mu(&self) -> Result<f64> {
        mu_bound(self.delta, self.gradient_bound, self.radius, self.dual_radius())
    }

    /// Probability `1 - (2m+1) delta` with which both bounds hold jointly.
    pub fn confidence(&self) -> f64 {
        1.0 - (2 * self.constraints() + 1) as f64 * self.delta
    }

    /// `mu(delta) / sqrt(T)`.
    pub fn objective_bound(&self) -> Result<f64> {
        Ok(self.mu()? / math::sqrt(self.horizon as f64))
    }

    /// `mu(delta) / (theta sqrt(T))`.
    pub fn violation_bound(&self) -> Result<f64> {
        Ok(self.objective_bound()? / self.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ProblemSpec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn step_size_examples() {
        assert!(close(step_size(1.0, 1.0, 2, 1.0).unwrap(), core::f64::consts::FRAC_1_SQRT_2, 1e-15));
        assert!(close(step_size(1.0, 0.0, 50, 1.0).unwrap(), 0.1, 1e-15));
        // mpmath, 40 digits: 0.005099019513592784830...
        assert!(close(step_size(2.0, 3.0, 10_000, 5.0).unwrap(), 0.005_099_019_513_592_785, 1e-15));
    }

    #[test]
    fn step_size_rejects_bad_inputs() {
        assert!(matches!(step_size(1.0, 1.0, 10, 0.0), Err(Error::Config(_))));
        assert!(matches!(step_size(1.0, 1.0, 10, -2.0), Err(Error::Config(_))));
        assert!(matches!(step_size(1.0, 1.0, 0, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn step_size_scales_as_inverse_sqrt_horizon() {
        for t in [1u64, 7, 100, 12345] {
            let a = step_size(1.3, 2.1, t, 3.0).unwrap();
            let b = step_size(1.3, 2.1, 4 * t, 3.0).unwrap();
            assert!(close(b / a, 0.5, 1e-15));
        }
    }

    #[test]
    fn mu_examples() {
        assert!(close(mu_bound(1.0, 1.0, 1.0, 0.0).unwrap(), core::f64::consts::SQRT_2, 1e-15));
        // mpmath, 40 digits: 10.58386410515738895854...
        assert!(close(mu_bound(0.1, 1.0, 1.0, 1.0).unwrap(), 10.583_864_105_157_389, 1e-12));
        let a = mu_bound(0.05, 1.5, 0.7, 2.0).unwrap();
        let b = mu_bound(0.05, 3.0, 0.7, 2.0).unwrap();
        assert!(close(b, 2.0 * a, 1e-12));
    }

    #[test]
    fn mu_domain() {
        assert!(matches!(mu_bound(0.0, 1.0, 1.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(mu_bound(1.5, 1.0, 1.0, 1.0), Err(Error::Domain { .. })));
        assert!(mu_bound(-0.1, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn mu_monotone() {
        let ds = [1e-6, 1e-3, 0.01, 0.1, 0.5, 0.9];
        for w in ds.windows(2) {
            assert!(mu_bound(w[0], 1.0, 1.0, 1.0).unwrap() > mu_bound(w[1], 1.0, 1.0, 1.0).unwrap());
        }
        assert!(mu_bound(0.1, 1.0, 2.0, 1.0).unwrap() > mu_bound(0.1, 1.0, 1.0, 1.0).unwrap());
        assert!(mu_bound(0.1, 1.0, 1.0, 2.0).unwrap() > mu_bound(0.1, 1.0, 1.0, 1.0).unwrap());
    }

    fn spec(m: usize) -> ProblemSpec {
        ProblemSpec {
            dim: 2,
            constraints: m,
            domain: Domain::Ball { radius: 1.0 },
            gamma: vec![0.0; m],
            lipschitz: 1.0,
            tau: Some(1.0),
            known_optimum: None,
            feasible_point: vec![0.0; 2],
        }
    }

    fn caps(m: usize) -> DualCapEstimate {
        DualCapEstimate {
            lambda_a_bound: 1.0,
            caps: vec![1.5; m],
            theta: 0.5,
            gradient_bound: 4.0,
            gradient_bound_tightened: None,
        }
    }

    fn params(delta: f64) -> SolverParams {
        SolverParams { horizon: 100, theta: 0.5, delta, seed: 1 }
    }

    #[test]
    fn config_rejects_vacuous_delta() {
        // m = 2: delta must be < 1/5.
        assert!(SolverConfig::new(&spec(2), params(0.19), &caps(2)).is_ok());
        assert!(matches!(SolverConfig::new(&spec(2), params(0.2), &caps(2)), Err(Error::Config(_))));
        assert!(SolverConfig::new(&spec(2), params(0.0), &caps(2)).is_err());
    }

    #[test]
    fn config_derived_constants() {
        let cfg = SolverConfig::new(&spec(1), params(0.1), &caps(1)).unwrap();
        assert!(close(cfg.dual_radius_sq(), 2.25, 1e-15));
        let eta = cfg.step_size().unwrap();
        assert!(close(eta, math::sqrt((1.0 + 2.25) / 200.0) / 4.0, 1e-15));
        assert!(close(cfg.confidence(), 0.7, 1e-15));
        let mut bad = params(0.1);
        bad.theta = 0.0;
        assert!(SolverConfig::new(&spec(1), bad, &caps(1)).is_err());
    }

    #[test]
    fn tightening_is_exact() {
        let th = Thresholds::new(vec![0.5, -1.0, 2.0]);
        let t = th.tighten(0.25);
        assert_eq!(t.gamma(), th.gamma());
        assert_eq!(t.effective(), &[0.25, -1.25, 1.75]);
    }
}
