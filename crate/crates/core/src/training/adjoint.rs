//! Hand-derived reverse sweep through the explicit Runge–Kutta steps.
//!
//! With stages `Y_i = y + h Σ_{j<i} a_ij k_j`, `k_i = f(Y_i)` and
//! `y′ = y + h Σ b_i k_i`, the cotangent of stage `i` is
//! `k̄_i = h b_i ȳ′ + h Σ_{m>i} a_mi Ȳ_m` and `ȳ = ȳ′ + Σ Ȳ_i`, where
//! `Ȳ_i = k̄_iᵀ ∂f/∂y (Y_i)`. For `f = J⁻¹ net`, `k̄ᵀ J⁻¹ = (J k̄)ᵀ`.

use crate::error::{Error, Result};
use crate::integrators::{pseudo_symplectic_tableau, ButcherTableau};
use crate::network::{Architecture, GradientNet};
use crate::systems::SymplecticMatrix;

/// Stage inputs of every step, kept for the reverse sweep.
struct ForwardTrace {
    /// `stages[step][i]` is `Y_i` of that step.
    stages: Vec<Vec<Vec<f64>>>,
    end: Vec<f64>,
}

fn forward(
    tab: &ButcherTableau,
    arch: &Architecture,
    theta: &[f64],
    y0: &[f64],
    h: f64,
    steps: usize,
) -> Result<ForwardTrace> {
    let n = y0.len();
    let j = SymplecticMatrix::new(arch.half_dim);
    let s = tab.stages();
    let mut y = y0.to_vec();
    let mut stages = Vec::with_capacity(steps);
    for step in 0..steps {
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(s);
        let mut derivs: Vec<Vec<f64>> = Vec::with_capacity(s);
        for i in 0..s {
            let stage: Vec<f64> = if i == 0 {
                y.clone()
            } else {
                (0..n).map(|k| y[k] + combine(&tab.a()[i][..i], &derivs, k) * h).collect()
            };
            let f = j.apply_inverse(&GradientNet::forward_with(arch, theta, &stage)?);
            if let Some(k) = f.iter().position(|x| !x.is_finite()) {
                return Err(Error::at_step(
                    step + 1,
                    Error::NonFinite(format!("field component {k} at stage {}", i + 1)),
                ));
            }
            inputs.push(stage);
            derivs.push(f);
        }
        y = (0..n).map(|k| y[k] + combine(tab.b(), &derivs, k) * h).collect();
        stages.push(inputs);
    }
    Ok(ForwardTrace { stages, end: y })
}

/// Same summation order as the generic stepper, so values agree bit for bit.
fn combine(weights: &[f64], derivs: &[Vec<f64>], k: usize) -> f64 {
    let mut terms = weights
        .iter()
        .zip(derivs)
        .filter(|(&w, _)| w != 0.0)
        .map(|(&w, f)| f[k] * w);
    let first = terms.next().unwrap_or(0.0);
    terms.fold(first, |acc, t| acc + t)
}

/// Squared prediction error of one pair; adds `weight ·` its gradient over
/// `theta` to `grad`.
#[allow(clippy::too_many_arguments)]
pub(super) fn sample_adjoint(
    arch: &Architecture,
    theta: &[f64],
    y0: &[f64],
    y1: &[f64],
    h: f64,
    steps: usize,
    weight: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let tab = pseudo_symplectic_tableau();
    let trace = forward(tab, arch, theta, y0, h, steps)?;
    let n = y0.len();
    let j = SymplecticMatrix::new(arch.half_dim);
    let value = trace.end.iter().zip(y1).fold(0.0, |acc, (&p, &t)| {
        let d = p - t;
        acc + d * d
    });
    let mut ybar: Vec<f64> = trace.end.iter().zip(y1).map(|(p, t)| weight * 2.0 * (p - t)).collect();
    let s = tab.stages();
    let mut stage_bar = vec![vec![0.0; n]; s];
    for inputs in trace.stages.iter().rev() {
        for i in (0..s).rev() {
            let mut kbar: Vec<f64> = ybar.iter().map(|&v| h * tab.b()[i] * v).collect();
            for m in i + 1..s {
                let a = tab.a()[m][i];
                if a != 0.0 {
                    for k in 0..n {
                        kbar[k] += h * a * stage_bar[m][k];
                    }
                }
            }
            let u = j.apply(&kbar);
            stage_bar[i].iter_mut().for_each(|v| *v = 0.0);
            GradientNet::vjp_with(arch, theta, &inputs[i], &u, &mut stage_bar[i], grad)?;
        }
        for sb in &stage_bar {
            for k in 0..n {
                ybar[k] += sb[k];
            }
        }
    }
    Ok(value)
}
