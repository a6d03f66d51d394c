//! Evaluation of a learned gradient model against the true system: the
//! squared-error curve, the long-horizon trajectory error, and the true
//! energy along the predicted trajectory.

use crate::error::{Error, Result};
use crate::integrators::{compose_flow, midpoint_trajectory, whole_steps, REFERENCE_STEP};
use crate::systems::{GradientModel, HamiltonianSystem};

/// Step size of the trajectory error.
pub const TRAJECTORY_STEP: f64 = 0.01;
/// Number of steps of the trajectory error.
pub const TRAJECTORY_STEPS: usize = 60_000;

/// A time series starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ErrorCurve {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// True states at `t = 0, h, 2h, …`, integrated with the implicit midpoint
/// rule at [`REFERENCE_STEP`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub h: f64,
    pub states: Vec<Vec<f64>>,
}

impl ReferenceTrajectory {
    pub fn compute<G: GradientModel>(model: &G, y0: &[f64], h: f64, samples: usize) -> Result<Self> {
        let sub = whole_steps(h, REFERENCE_STEP, 1e-12)?;
        if sub == 0 {
            return Err(Error::Invalid(format!("sample step {h} is below the reference step")));
        }
        let states = midpoint_trajectory(model, y0, REFERENCE_STEP, sub, samples)?;
        Ok(Self { h, states })
    }

    pub fn samples(&self) -> usize {
        self.states.len() - 1
    }

    pub fn y0(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|i| i as f64 * self.h).collect()
    }
}

fn check_model<G: GradientModel>(model: &G, sys: &HamiltonianSystem, y0: &[f64]) -> Result<()> {
    if model.dim() != sys.dim() {
        return Err(Error::Dimension { expected: sys.dim(), got: model.dim() });
    }
    if y0.len() != sys.dim() {
        return Err(Error::Dimension { expected: sys.dim(), got: y0.len() });
    }
    Ok(())
}

/// States `ŷ(ih)` of the pseudo-symplectic method driven by `model`.
pub fn predicted_trajectory<G: GradientModel>(model: &G, y0: &[f64], h: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    compose_flow(|z: &[f64]| model.vector_field(z), y0, h, steps)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `‖ŷ(t) − y(t)‖²` for `t = 0, h, …, t_max`.
pub fn prediction_error_curve<G: GradientModel>(
    model: &G,
    sys: &HamiltonianSystem,
    y0: &[f64],
    h: f64,
    t_max: f64,
) -> Result<ErrorCurve> {
    check_model(model, sys, y0)?;
    let n = whole_steps(t_max, h, 1e-9)?;
    let reference = ReferenceTrajectory::compute(sys, y0, h, n)?;
    prediction_error_against(model, &reference)
}

/// [`prediction_error_curve`] against a precomputed reference.
pub fn prediction_error_against<G: GradientModel>(model: &G, reference: &ReferenceTrajectory) -> Result<ErrorCurve> {
    let predicted = predicted_trajectory(model, reference.y0(), reference.h, reference.samples())?;
    Ok(ErrorCurve {
        times: reference.times(),
        values: predicted.iter().zip(&reference.states).map(|(p, y)| squared_distance(p, y)).collect(),
    })
}

/// `(1/n) Σ_{i=1..n} ‖y_i − ŷ_i‖² / 2d` over `n` steps of size `h`.
pub fn trajectory_error<G: GradientModel>(
    model: &G,
    sys: &HamiltonianSystem,
    y0: &[f64],
    h: f64,
    steps: usize,
) -> Result<f64> {
    check_model(model, sys, y0)?;
    let reference = ReferenceTrajectory::compute(sys, y0, h, steps)?;
    trajectory_error_against(model, &reference)
}

/// [`trajectory_error`] against a precomputed reference.
pub fn trajectory_error_against<G: GradientModel>(model: &G, reference: &ReferenceTrajectory) -> Result<f64> {
    let n = reference.samples();
    if n == 0 {
        return Err(Error::Invalid("trajectory error needs at least one step".into()));
    }
    let predicted = predicted_trajectory(model, reference.y0(), reference.h, n)?;
    let dim = reference.y0().len() as f64;
    let sum: f64 = predicted[1..]
        .iter()
        .zip(&reference.states[1..])
        .map(|(p, y)| squared_distance(p, y) / dim)
        .sum();
    Ok(sum / n as f64)
}

/// True `H` along the predicted trajectory, `t = 0, h, …, t_max`.
pub fn energy_curve<G: GradientModel>(
    model: &G,
    sys: &HamiltonianSystem,
    y0: &[f64],
    h: f64,
    t_max: f64,
) -> Result<ErrorCurve> {
    check_model(model, sys, y0)?;
    let n = whole_steps(t_max, h, 1e-9)?;
    let predicted = predicted_trajectory(model, y0, h, n)?;
    energy_along(sys, &predicted, h)
}

/// True `H` at each of `states`, spaced `h` apart.
pub fn energy_along(sys: &HamiltonianSystem, states: &[Vec<f64>], h: f64) -> Result<ErrorCurve> {
    Ok(ErrorCurve {
        times: (0..states.len()).map(|i| i as f64 * h).collect(),
        values: states.iter().map(|y| sys.hamiltonian(y)).collect::<Result<_>>()?,
    })
}

/// `max_t |H(ŷ(t)) − H(y0)|` of an energy curve.
pub fn max_energy_deviation(curve: &ErrorCurve) -> f64 {
    let e0 = curve.values[0];
    curve.values.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::SystemKind;

    #[test]
    fn true_model_has_small_errors() {
        let sys = HamiltonianSystem::new(SystemKind::Pendulum);
        let curve = prediction_error_curve(&sys, &sys, &[1.0, 0.0], 0.01, 1.0).unwrap();
        assert_eq!(curve.times.len(), 101);
        assert_eq!(curve.values[0], 0.0);
        assert!(curve.max() < 1e-10, "{}", curve.max());
        assert!((curve.times[100] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_starts_at_initial_value() {
        let sys = HamiltonianSystem::new(SystemKind::BeadOnWire);
        let y0 = [0.3, -1.1];
        let curve = energy_curve(&sys, &sys, &y0, 0.01, 0.5).unwrap();
        assert_eq!(curve.values[0], sys.hamiltonian(&y0).unwrap());
        assert!(max_energy_deviation(&curve) < 1e-8);
    }

    #[test]
    fn reference_energy_is_constant() {
        let sys = HamiltonianSystem::new(SystemKind::Pendulum);
        let reference = ReferenceTrajectory::compute(&sys, &[1.0, 0.0], 0.01, 6000).unwrap();
        let curve = energy_along(&sys, &reference.states, 0.01).unwrap();
        assert!(max_energy_deviation(&curve) < 1e-8, "{}", max_energy_deviation(&curve));
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let sys = HamiltonianSystem::new(SystemKind::Harmonic);
        let reference = ReferenceTrajectory::compute(&sys, &[1.0, 0.0], 0.01, 10).unwrap();
        let curve = prediction_error_against(&sys, &reference).unwrap();
        assert!(curve.values.iter().all(|&v| v < 1e-20));
    }

    #[test]
    fn argument_checks() {
        let sys = HamiltonianSystem::new(SystemKind::Pendulum);
        let galactic = HamiltonianSystem::new(SystemKind::Galactic);
        assert!(prediction_error_curve(&galactic, &sys, &[1.0, 0.0], 0.01, 1.0).is_err());
        assert!(prediction_error_curve(&sys, &sys, &[1.0, 0.0], 0.01, 1.005).is_err());
        assert!(trajectory_error(&sys, &sys, &[1.0, 0.0], 0.01, 0).is_err());
        assert!(ReferenceTrajectory::compute(&sys, &[1.0, 0.0], 0.00015, 2).is_err());
    }
}
