//! Trajectory-pair datasets, the one-interval prediction loss, its exact
//! reverse-mode gradient through every integrator stage, and full-batch Adam.

mod adam;
mod adjoint;
mod dataset;

pub use adam::{adam_step, AdamState};
pub use dataset::{generate_dataset, generate_dataset_with, hypercube, Dataset, DatasetMeta, Region};

use serde::{Deserialize, Serialize};

use crate::diff::{Scalar, Tape, Var};
use crate::error::{Error, Result};
use crate::integrators::flow;
use crate::network::{Activation, ActivationSpec, Architecture, GradientNet, ParamView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Integrator step.
    pub h: f64,
    /// Integrator steps per observation interval.
    pub steps: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub width: usize,
    pub summands: usize,
    pub activation: ActivationSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            h: 0.01,
            steps: 1,
            epochs: 1500,
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            width: 16,
            summands: 4,
            activation: ActivationSpec::from(&Activation::default_pade()),
        }
    }
}

impl TrainConfig {
    pub fn architecture(&self, half_dim: usize) -> Result<Architecture> {
        Architecture::new(half_dim, self.width, self.summands, self.activation.build()?)
    }

    /// Checks the optimizer settings and `steps · h = interval`.
    pub fn validate(&self, interval: f64) -> Result<()> {
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(Error::Invalid(format!("step size must satisfy 0 < h < 1, got {}", self.h)));
        }
        if self.steps == 0 {
            return Err(Error::Invalid("steps per interval must be at least 1".into()));
        }
        if (self.steps as f64 * self.h - interval).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "steps·h = {}·{} does not match the data interval {interval}",
                self.steps, self.h
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Invalid("learning rate and epsilon must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Invalid(format!(
                "Adam betas must lie in [0, 1), got ({}, {})",
                self.beta1, self.beta2
            )));
        }
        self.activation.build()?;
        Ok(())
    }
}

/// `Φ^K(h, y0)` with the field `−J·net(y)`.
pub fn predict_pair<T: Scalar>(arch: &Architecture, theta: &[T], y0: &[T], h: f64, steps: usize) -> Result<Vec<T>> {
    if steps == 0 {
        return Err(Error::Invalid("steps per interval must be at least 1".into()));
    }
    let view = ParamView { arch, theta };
    flow(|z: &[T]| view.vector_field(z), y0, h, steps)
}

fn check_data(arch: &Architecture, data: &Dataset) -> Result<()> {
    if data.dim() != arch.dim() {
        return Err(Error::Dimension { expected: arch.dim(), got: data.dim() });
    }
    Ok(())
}

fn squared_error<T: Scalar>(pred: &[T], target: &[f64]) -> T {
    pred.iter().zip(target).fold(T::cst(0.0), |acc, (&p, &t)| {
        let d = p - t;
        acc + d * d
    })
}

/// `(1/N) Σ ‖Φ^K(y0ⁱ) − y1ⁱ‖²`.
pub fn loss(net: &GradientNet, data: &Dataset, h: f64, steps: usize) -> Result<f64> {
    let arch = net.architecture();
    check_data(arch, data)?;
    let mut total = 0.0;
    for (i, (y0, y1)) in data.y0.iter().zip(&data.y1).enumerate() {
        let pred = predict_pair(arch, net.params(), y0, h, steps).map_err(|e| Error::at_sample(i, e))?;
        total += squared_error(&pred, y1);
    }
    Ok(total / data.len() as f64)
}

/// Loss and its exact gradient over all parameters, by a hand-derived
/// reverse sweep through every step and stage. Sample contributions are
/// summed in dataset order.
pub fn loss_gradient(net: &GradientNet, data: &Dataset, h: f64, steps: usize) -> Result<(f64, Vec<f64>)> {
    let arch = net.architecture();
    check_data(arch, data)?;
    if steps == 0 {
        return Err(Error::Invalid("steps per interval must be at least 1".into()));
    }
    let weight = 1.0 / data.len() as f64;
    let mut grad = vec![0.0; net.num_params()];
    let mut total = 0.0;
    for (i, (y0, y1)) in data.y0.iter().zip(&data.y1).enumerate() {
        total += adjoint::sample_adjoint(arch, net.params(), y0, y1, h, steps, weight, &mut grad)
            .map_err(|e| Error::at_sample(i, e))?;
    }
    Ok((total / data.len() as f64, grad))
}

/// Same quantity as [`loss_gradient`], with each sample recorded on a tape
/// and swept backward with cotangent `1/N`.
pub fn loss_gradient_taped(net: &GradientNet, data: &Dataset, h: f64, steps: usize) -> Result<(f64, Vec<f64>)> {
    let arch = net.architecture();
    check_data(arch, data)?;
    let weight = 1.0 / data.len() as f64;
    let mut grad = vec![0.0; net.num_params()];
    let mut total = 0.0;
    let mut tape = Tape::new();
    for (i, (y0, y1)) in data.y0.iter().zip(&data.y1).enumerate() {
        tape.clear();
        let (value, g) = sample_gradient(&tape, arch, net.params(), y0, y1, h, steps, weight)
            .map_err(|e| Error::at_sample(i, e))?;
        total += value;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    Ok((total / data.len() as f64, grad))
}

#[allow(clippy::too_many_arguments)]
fn sample_gradient(
    tape: &Tape,
    arch: &Architecture,
    theta: &[f64],
    y0: &[f64],
    y1: &[f64],
    h: f64,
    steps: usize,
    weight: f64,
) -> Result<(f64, Vec<f64>)> {
    let vars = tape.leaves(theta);
    let start: Vec<Var> = y0.iter().map(|&v| Var::constant(v)).collect();
    let pred = predict_pair(arch, &vars, &start, h, steps)?;
    let err = squared_error(&pred, y1);
    let value = tape.set_outputs(&[err])[0];
    if let Some(e) = tape.domain_error() {
        return Err(e);
    }
    Ok((value, tape.backward(&[weight])?))
}

/// Result of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub net: GradientNet,
    /// Loss at the start of every epoch, followed by the loss after the
    /// last update (`epochs + 1` entries).
    pub history: Vec<f64>,
}

impl Trained {
    pub fn final_loss(&self) -> f64 {
        *self.history.last().expect("history is non-empty")
    }
}

/// Full-batch training from a freshly seeded network.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<Trained> {
    config.validate(data.meta.interval)?;
    let arch = config.architecture(data.dim() / 2)?;
    train_from(GradientNet::init(arch, config.seed), data, config)
}

/// Full-batch training starting from `net`: one loss/gradient pass over
/// all samples, then one Adam update, per epoch.
pub fn train_from(mut net: GradientNet, data: &Dataset, config: &TrainConfig) -> Result<Trained> {
    config.validate(data.meta.interval)?;
    check_data(net.architecture(), data)?;
    let mut state = AdamState::new(net.num_params());
    let mut history = Vec::with_capacity(config.epochs + 1);
    let mut last_finite = f64::NAN;
    for epoch in 0..config.epochs {
        let (value, grad) = match loss_gradient(&net, data, config.h, config.steps) {
            Ok(r) => r,
            Err(e) if e.is_non_finite() => return Err(Error::NonFiniteLoss { epoch, last_finite }),
            Err(e) => return Err(e),
        };
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, last_finite });
        }
        last_finite = value;
        history.push(value);
        adam_step(
            &mut state,
            net.params_mut(),
            &grad,
            config.learning_rate,
            config.beta1,
            config.beta2,
            config.epsilon,
        )?;
    }
    let epoch = config.epochs;
    let value = match loss(&net, data, config.h, config.steps) {
        Ok(v) => v,
        Err(e) if e.is_non_finite() => return Err(Error::NonFiniteLoss { epoch, last_finite }),
        Err(e) => return Err(e),
    };
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss { epoch, last_finite });
    }
    history.push(value);
    Ok(Trained { net, history })
}
