//! Explicit pseudo-symplectic Runge–Kutta stepping, the implicit midpoint
//! rule used for data and reference trajectories, and numerical measurement
//! of convergence and symplecticity orders.

use std::sync::OnceLock;

use crate::diff::{self, Dual, Scalar};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::systems::{GradientModel, HamiltonianSystem, SymplecticMatrix};

/// Step size of [`reference_solution`].
pub const REFERENCE_STEP: f64 = 1e-4;
/// Fixed-point tolerance for the implicit midpoint rule (max-norm).
pub const MIDPOINT_TOL: f64 = 1e-12;
pub const MIDPOINT_MAX_ITER: usize = 100;
/// Measurements at or below this level are treated as rounding noise.
pub const NOISE_FLOOR: f64 = 1e-13;

/// `γ = 1 / (4(2 − 2^{1/3}))`.
pub fn gamma() -> f64 {
    1.0 / (4.0 * (2.0 - 2f64.cbrt()))
}

/// Coefficients of an explicit Runge–Kutta method.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    /// Builds a tableau; `a` must be strictly lower triangular.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if a.len() != s || c.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::Invalid("tableau arrays must all have the stage count".into()));
        }
        for (i, row) in a.iter().enumerate() {
            if row[i..].iter().any(|&x| x != 0.0) {
                return Err(Error::Invalid(format!(
                    "row {i} of `a` has entries on or above the diagonal; the method would be implicit"
                )));
            }
        }
        Ok(Self { a, b, c })
    }

    /// The 7-stage method of convergence order 4, pseudo-symplectic.
    pub fn pseudo_symplectic() -> Self {
        let g = gamma();
        let a = vec![
            vec![0.0; 7],
            vec![2.0 * g, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 4.0 * g, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![2.0 * g, 0.0, 0.5 - 2.0 * g, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 4.0 * g, 0.0, 1.0 - 8.0 * g, 0.0, 0.0, 0.0],
            vec![2.0 * g, 0.0, 0.5 - 2.0 * g, 0.0, 0.5 - 2.0 * g, 0.0, 0.0],
            vec![0.0, 4.0 * g, 0.0, 1.0 - 8.0 * g, 0.0, 4.0 * g, 0.0],
        ];
        let b = vec![
            g,
            2.0 * g,
            0.25 - g,
            0.5 - 4.0 * g,
            0.25 - g,
            2.0 * g,
            g,
        ];
        let c = vec![0.0, 2.0 * g, 4.0 * g, 0.5, 1.0 - 4.0 * g, 1.0 - 2.0 * g, 1.0];
        Self::new(a, b, c).expect("pseudo-symplectic tableau is explicit")
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// One explicit step. Stage `i` only reads the stage derivatives `F_j`, `j < i`.
    pub fn step<T, F>(&self, mut field: F, y: &[T], h: f64) -> Result<Vec<T>>
    where
        T: Scalar,
        F: FnMut(&[T]) -> Result<Vec<T>>,
    {
        let n = y.len();
        let mut derivs: Vec<Vec<T>> = Vec::with_capacity(self.stages());
        let mut stage = y.to_vec();
        for i in 0..self.stages() {
            if i > 0 {
                let earlier = &derivs[..i];
                for (k, xi) in stage.iter_mut().enumerate() {
                    *xi = y[k] + combine(&self.a[i][..i], earlier, k) * h;
                }
            }
            let f = field(&stage)?;
            if f.len() != n {
                return Err(Error::Dimension { expected: n, got: f.len() });
            }
            if let Some(k) = f.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "field component {k} at stage {}",
                    i + 1
                )));
            }
            derivs.push(f);
        }
        Ok((0..n).map(|k| y[k] + combine(&self.b, &derivs, k) * h).collect())
    }
}

/// `Σ_j w_j F_j[k]`, skipping zero weights.
fn combine<T: Scalar>(weights: &[f64], derivs: &[Vec<T>], k: usize) -> T {
    let mut terms = weights
        .iter()
        .zip(derivs)
        .filter(|(&w, _)| w != 0.0)
        .map(|(&w, f)| f[k] * w);
    let first = terms.next().unwrap_or_else(|| T::cst(0.0));
    terms.fold(first, |acc, t| acc + t)
}

/// Shared instance of [`ButcherTableau::pseudo_symplectic`].
pub fn pseudo_symplectic_tableau() -> &'static ButcherTableau {
    static TABLEAU: OnceLock<ButcherTableau> = OnceLock::new();
    TABLEAU.get_or_init(ButcherTableau::pseudo_symplectic)
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("step size must satisfy 0 < h < 1, got {h}")))
    }
}

/// One step of the 7-stage pseudo-symplectic Runge–Kutta method.
pub fn ps_rk_step<T, F>(field: F, y: &[T], h: f64) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    check_step(h)?;
    pseudo_symplectic_tableau().step(field, y, h)
}

/// `K` chained steps; returns all `K + 1` states starting with `y0`.
pub fn compose_flow<T, F>(mut field: F, y0: &[T], h: f64, steps: usize) -> Result<Vec<Vec<T>>>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    check_step(h)?;
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(y0.to_vec());
    for k in 0..steps {
        let next = pseudo_symplectic_tableau()
            .step(&mut field, &trajectory[k], h)
            .map_err(|e| Error::at_step(k + 1, e))?;
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// Final state of `K` chained steps, without keeping the trajectory.
pub fn flow<T, F>(mut field: F, y0: &[T], h: f64, steps: usize) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    check_step(h)?;
    let mut y = y0.to_vec();
    for k in 0..steps {
        y = pseudo_symplectic_tableau()
            .step(&mut field, &y, h)
            .map_err(|e| Error::at_step(k + 1, e))?;
    }
    Ok(y)
}

/// Result of one implicit midpoint step.
#[derive(Debug, Clone, PartialEq)]
pub struct MidpointStep {
    pub y: Vec<f64>,
    pub iterations: usize,
}

/// Solves `y′ = y + h f((y + y′)/2)` by fixed-point iteration from the
/// explicit Euler predictor.
pub fn implicit_midpoint_step<F>(
    mut field: F,
    y: &[f64],
    h: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MidpointStep>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let f0 = field(y)?;
    let mut current: Vec<f64> = y.iter().zip(&f0).map(|(a, f)| a + h * f).collect();
    let mut mid = vec![0.0; y.len()];
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        for k in 0..y.len() {
            mid[k] = 0.5 * (y[k] + current[k]);
        }
        let f = field(&mid)?;
        let next: Vec<f64> = y.iter().zip(&f).map(|(a, f)| a + h * f).collect();
        residual = next
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        current = next;
        if !residual.is_finite() {
            break;
        }
        if residual < tol {
            return Ok(MidpointStep { y: current, iterations: iteration });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// Implicit midpoint trajectory with `record_every` sub-steps between stored states.
///
/// Returns `samples + 1` states, the first being `y0`.
pub fn midpoint_trajectory<G: GradientModel>(
    model: &G,
    y0: &[f64],
    h: f64,
    record_every: usize,
    samples: usize,
) -> Result<Vec<Vec<f64>>> {
    if y0.len() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: y0.len() });
    }
    let mut out = Vec::with_capacity(samples + 1);
    out.push(y0.to_vec());
    let mut y = y0.to_vec();
    for s in 0..samples {
        for sub in 0..record_every {
            y = implicit_midpoint_step(|z| model.vector_field(z), &y, h, MIDPOINT_TOL, MIDPOINT_MAX_ITER)
                .map_err(|e| Error::at_step(s * record_every + sub + 1, e))?
                .y;
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Number of whole steps of size `h` in `t`, if `t` is an integer multiple of `h`.
pub fn whole_steps(t: f64, h: f64, tol: f64) -> Result<usize> {
    let n = (t / h).round();
    if (n * h - t).abs() > tol || n < 0.0 {
        return Err(Error::Invalid(format!("{t} is not an integer multiple of the step {h}")));
    }
    Ok(n as usize)
}

/// State at time `t` integrated with the implicit midpoint rule at [`REFERENCE_STEP`].
pub fn reference_solution<G: GradientModel>(model: &G, y0: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Invalid(format!("time must be non-negative, got {t}")));
    }
    let steps = whole_steps(t, REFERENCE_STEP, 1e-9)?;
    let mut traj = midpoint_trajectory(model, y0, REFERENCE_STEP, steps, 1)?;
    Ok(traj.pop().expect("trajectory is non-empty"))
}

/// Richardson extrapolation of two implicit midpoint runs (steps
/// [`REFERENCE_STEP`] and half of it). The midpoint rule is symmetric, so its
/// error expands in even powers of the step and the combination
/// `(4 y_{h/2} − y_h) / 3` is accurate to `O(h⁴)`.
pub fn extrapolated_reference<G: GradientModel>(model: &G, y0: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Invalid(format!("time must be non-negative, got {t}")));
    }
    let steps = whole_steps(t, REFERENCE_STEP, 1e-9)?;
    let coarse = midpoint_trajectory(model, y0, REFERENCE_STEP, steps, 1)?.pop().unwrap();
    let fine = midpoint_trajectory(model, y0, 0.5 * REFERENCE_STEP, 2 * steps, 1)?.pop().unwrap();
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

/// A one-step map that can be evaluated on any [`Scalar`].
pub trait StepMap {
    fn dim(&self) -> usize;
    fn apply<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>>;
}

/// `Φ^K(h, ·)` for the pseudo-symplectic method applied to a gradient model.
#[derive(Debug, Clone, Copy)]
pub struct FlowMap<'a, G> {
    pub model: &'a G,
    pub h: f64,
    pub steps: usize,
}

impl<'a, G: GradientModel> FlowMap<'a, G> {
    pub fn new(model: &'a G, h: f64) -> Result<Self> {
        Self::composed(model, h, 1)
    }

    pub fn composed(model: &'a G, h: f64, steps: usize) -> Result<Self> {
        check_step(h)?;
        if steps == 0 {
            return Err(Error::Invalid("composition count must be at least 1".into()));
        }
        Ok(Self { model, h, steps })
    }
}

impl<G: GradientModel> StepMap for FlowMap<'_, G> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn apply<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
        flow(|z: &[T]| self.model.vector_field(z), y, self.h, self.steps)
    }
}

/// Exact time-`h` flow of the harmonic oscillator: a rotation of every
/// `(qᵢ, pᵢ)` plane by `h`. Symplectic to rounding.
#[derive(Debug, Clone, Copy)]
pub struct ExactRotation {
    pub half_dim: usize,
    pub h: f64,
}

impl StepMap for ExactRotation {
    fn dim(&self) -> usize {
        2 * self.half_dim
    }

    fn apply<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
        let d = self.half_dim;
        if y.len() != 2 * d {
            return Err(Error::Dimension { expected: 2 * d, got: y.len() });
        }
        let (c, s) = (self.h.cos(), self.h.sin());
        let mut out = y.to_vec();
        for i in 0..d {
            let (p, q) = (y[i], y[d + i]);
            out[i] = p * T::cst(c) - q * T::cst(s);
            out[d + i] = q * T::cst(c) + p * T::cst(s);
        }
        Ok(out)
    }
}

/// Jacobian of a step map at `y`, by forward-mode propagation.
pub fn step_jacobian<M: StepMap>(map: &M, y: &[f64]) -> Result<Matrix> {
    diff::jacobian(|z: &[Dual]| map.apply(z), y)
}

/// `‖MᵀJM − J‖_F` with `M` the Jacobian of the map at `y`.
pub fn symplecticity_residual<M: StepMap>(map: &M, y: &[f64]) -> Result<f64> {
    if y.len() != map.dim() || !y.len().is_multiple_of(2) {
        return Err(Error::Dimension { expected: map.dim(), got: y.len() });
    }
    let m = step_jacobian(map, y)?;
    let j = SymplecticMatrix::new(y.len() / 2).matrix();
    Ok(m.transpose().matmul(&j).matmul(&m).sub(&j).frobenius_norm())
}

/// What [`observed_order`] measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderMode {
    /// Global error at `t_final` against [`extrapolated_reference`].
    Convergence { t_final: f64 },
    /// Symplecticity residual of one step at the starting point.
    Symplecticity,
}

/// Measurements per step size and the fitted log–log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub steps: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
}

/// Least-squares slope of `ln(value)` against `ln(h)`, over values above the noise floor.
pub fn fit_log_slope(steps: &[f64], values: &[f64]) -> Result<f64> {
    if steps.len() != values.len() {
        return Err(Error::Dimension { expected: steps.len(), got: values.len() });
    }
    let points: Vec<(f64, f64)> = steps
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > NOISE_FLOOR && v.is_finite())
        .map(|(&h, &v)| (h.ln(), v.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::BelowNoiseFloor { floor: NOISE_FLOOR });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

fn check_step_list(steps: &[f64]) -> Result<()> {
    if steps.len() < 3 {
        return Err(Error::Invalid(format!("need at least 3 step sizes, got {}", steps.len())));
    }
    steps.iter().try_for_each(|&h| check_step(h))
}

/// Residuals of `map_for(h)` at `y` over the step list.
pub fn symplecticity_residuals<M, F>(map_for: F, y: &[f64], steps: &[f64]) -> Result<Vec<f64>>
where
    M: StepMap,
    F: Fn(f64) -> Result<M>,
{
    check_step_list(steps)?;
    steps.iter().map(|&h| symplecticity_residual(&map_for(h)?, y)).collect()
}

/// [`symplecticity_residuals`] with the fitted slope.
pub fn symplecticity_order<M, F>(map_for: F, y: &[f64], steps: &[f64]) -> Result<OrderFit>
where
    M: StepMap,
    F: Fn(f64) -> Result<M>,
{
    let values = symplecticity_residuals(map_for, y, steps)?;
    let slope = fit_log_slope(steps, &values)?;
    Ok(OrderFit { steps: steps.to_vec(), values, slope })
}

/// Global errors `‖Φ^{t/h}(y0) − y(t)‖₂` over the step list.
pub fn convergence_errors<G: GradientModel>(model: &G, y0: &[f64], steps: &[f64], t_final: f64) -> Result<Vec<f64>> {
    check_step_list(steps)?;
    let reference = extrapolated_reference(model, y0, t_final)?;
    steps
        .iter()
        .map(|&h| {
            let n = whole_steps(t_final, h, 1e-9)?;
            let y = flow(|z: &[f64]| model.vector_field(z), y0, h, n)?;
            Ok(euclidean_distance(&y, &reference))
        })
        .collect()
}

/// [`convergence_errors`] with the fitted slope.
pub fn convergence_order<G: GradientModel>(
    model: &G,
    y0: &[f64],
    steps: &[f64],
    t_final: f64,
) -> Result<OrderFit> {
    let values = convergence_errors(model, y0, steps, t_final)?;
    let slope = fit_log_slope(steps, &values)?;
    Ok(OrderFit { steps: steps.to_vec(), values, slope })
}

/// Measured order of the pseudo-symplectic method on a reference system.
pub fn observed_order(
    sys: &HamiltonianSystem,
    y0: &[f64],
    steps: &[f64],
    mode: OrderMode,
) -> Result<OrderFit> {
    match mode {
        OrderMode::Convergence { t_final } => convergence_order(sys, y0, steps, t_final),
        OrderMode::Symplecticity => symplecticity_order(|h| FlowMap::new(sys, h), y0, steps),
    }
}

pub(crate) fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
