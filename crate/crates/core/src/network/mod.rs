//! Gradient network with a structurally symmetric Jacobian:
//!
//! `net(y) = Σ_i A_iᵀ σ_i(A_i y) − Σ_i B_iᵀ σ_i(B_i y) + b`
//!
//! with `A_i, B_i` of shape `l × 2d` and an element-wise activation `σ_i`
//! shared by the two branches of summand `i`.

mod activation;

pub use activation::{
    has_real_root, Activation, ActivationSpec, DEFAULT_PADE_DEGREE, DEFAULT_PADE_DENOMINATOR,
    DEFAULT_PAU_DENOMINATOR, DEFAULT_PAU_NUMERATOR,
};

use crate::diff::{matvec, matvec_transposed, Scalar};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;
use crate::systems::GradientModel;

/// Shape of a network and the layout of its flat parameter vector.
///
/// Layout: `A_1..A_S`, then `B_1..B_S` (each row-major `l × 2d`), then
/// `b` (`2d`), then the activation parameters of summands `1..S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub half_dim: usize,
    pub width: usize,
    pub summands: usize,
    pub activation: Activation,
}

impl Architecture {
    pub fn new(half_dim: usize, width: usize, summands: usize, activation: Activation) -> Result<Self> {
        if half_dim == 0 || width == 0 || summands == 0 {
            return Err(Error::Invalid(format!(
                "half_dim, width and summands must be at least 1 (got d={half_dim}, l={width}, S={summands})"
            )));
        }
        Ok(Self { half_dim, width, summands, activation })
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    /// Entries of one `l × 2d` weight matrix.
    pub fn matrix_len(&self) -> usize {
        self.width * self.dim()
    }

    pub fn a_offset(&self, i: usize) -> usize {
        i * self.matrix_len()
    }

    pub fn b_offset(&self, i: usize) -> usize {
        (self.summands + i) * self.matrix_len()
    }

    pub fn bias_offset(&self) -> usize {
        2 * self.summands * self.matrix_len()
    }

    pub fn activation_offset(&self, i: usize) -> usize {
        self.bias_offset() + self.dim() + i * self.activation.params_per_summand()
    }

    pub fn num_params(&self) -> usize {
        self.activation_offset(self.summands)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientNet {
    arch: Architecture,
    params: Vec<f64>,
}

impl GradientNet {
    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.num_params() {
            return Err(Error::Dimension { expected: arch.num_params(), got: params.len() });
        }
        Ok(Self { arch, params })
    }

    /// Weights `~ N(0, 2/(2ld))`, bias `~ N(0, 1)`, activation parameters 0.
    /// Draws follow the parameter layout order.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let std = (2.0 / (2.0 * arch.width as f64 * arch.half_dim as f64)).sqrt();
        let mut params = Vec::with_capacity(arch.num_params());
        params.extend((0..arch.bias_offset()).map(|_| std * rng.normal()));
        params.extend((0..arch.dim()).map(|_| rng.normal()));
        params.resize(arch.num_params(), 0.0);
        Self { arch, params }
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn a(&self, i: usize) -> &[f64] {
        let o = self.arch.a_offset(i);
        &self.params[o..o + self.arch.matrix_len()]
    }

    pub fn b(&self, i: usize) -> &[f64] {
        let o = self.arch.b_offset(i);
        &self.params[o..o + self.arch.matrix_len()]
    }

    pub fn bias(&self) -> &[f64] {
        let o = self.arch.bias_offset();
        &self.params[o..o + self.arch.dim()]
    }

    pub fn activation_params(&self, i: usize) -> &[f64] {
        let p = self.arch.activation.params_per_summand();
        let o = self.arch.activation_offset(i);
        &self.params[o..o + p]
    }

    /// Evaluates the network with every parameter taken from `theta`, so that
    /// `theta` may be traced.
    pub fn forward_with<T: Scalar>(arch: &Architecture, theta: &[T], y: &[T]) -> Result<Vec<T>> {
        if theta.len() != arch.num_params() {
            return Err(Error::Dimension { expected: arch.num_params(), got: theta.len() });
        }
        let n = arch.dim();
        if y.len() != n {
            return Err(Error::Dimension { expected: n, got: y.len() });
        }
        let (l, len, p) = (arch.width, arch.matrix_len(), arch.activation.params_per_summand());
        let b0 = arch.bias_offset();
        let mut out: Vec<T> = theta[b0..b0 + n].to_vec();
        let mut hidden = Vec::with_capacity(l);
        for i in 0..arch.summands {
            let o = arch.activation_offset(i);
            let act = &theta[o..o + p];
            for (offset, sign) in [(arch.a_offset(i), 1.0), (arch.b_offset(i), -1.0)] {
                let w = &theta[offset..offset + len];
                hidden.clear();
                hidden.extend(
                    matvec(w, l, n, y)
                        .into_iter()
                        .map(|z| arch.activation.eval(i + 1, act, z)),
                );
                let term = matvec_transposed(w, l, n, &hidden);
                for (acc, t) in out.iter_mut().zip(term) {
                    *acc = if sign > 0.0 { *acc + t } else { *acc - t };
                }
            }
        }
        Ok(out)
    }

    /// Vector–Jacobian product: adds `uᵀ ∂net/∂y` to `grad_y` and
    /// `uᵀ ∂net/∂θ` to `grad_theta`.
    pub fn vjp_with(
        arch: &Architecture,
        theta: &[f64],
        y: &[f64],
        u: &[f64],
        grad_y: &mut [f64],
        grad_theta: &mut [f64],
    ) -> Result<()> {
        let n = arch.dim();
        if theta.len() != arch.num_params() || grad_theta.len() != arch.num_params() {
            return Err(Error::Dimension { expected: arch.num_params(), got: theta.len().min(grad_theta.len()) });
        }
        if y.len() != n || u.len() != n || grad_y.len() != n {
            return Err(Error::Dimension { expected: n, got: y.len() });
        }
        let (l, len, p) = (arch.width, arch.matrix_len(), arch.activation.params_per_summand());
        let b0 = arch.bias_offset();
        for (g, ui) in grad_theta[b0..b0 + n].iter_mut().zip(u) {
            *g += ui;
        }
        for i in 0..arch.summands {
            let ao = arch.activation_offset(i);
            let act = &theta[ao..ao + p];
            for (offset, sign) in [(arch.a_offset(i), 1.0), (arch.b_offset(i), -1.0)] {
                let w = &theta[offset..offset + len];
                for r in 0..l {
                    let row = &w[r * n..(r + 1) * n];
                    let z = f64::dot(row, y);
                    let v = f64::dot(row, u);
                    let s = arch.activation.eval(i + 1, act, z);
                    let ds = arch.activation.derivative(i + 1, act, z);
                    let wr = sign * ds * v;
                    let gw = &mut grad_theta[offset + r * n..offset + (r + 1) * n];
                    for c in 0..n {
                        gw[c] += sign * s * u[c] + wr * y[c];
                        grad_y[c] += row[c] * wr;
                    }
                    if p > 0 {
                        arch.activation.accumulate_param_gradient(act, z, sign * v, &mut grad_theta[ao..ao + p]);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn forward<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
        let theta: Vec<T> = self.params.iter().map(|&v| T::cst(v)).collect();
        Self::forward_with(&self.arch, &theta, y)
    }

    /// `Σ A_iᵀ diag(σ_i′(A_i y)) A_i − Σ B_iᵀ diag(σ_i′(B_i y)) B_i`.
    ///
    /// Only the upper triangle is accumulated; the lower one is its mirror.
    pub fn jacobian(&self, y: &[f64]) -> Result<Matrix> {
        let n = self.arch.dim();
        if y.len() != n {
            return Err(Error::Dimension { expected: n, got: y.len() });
        }
        let l = self.arch.width;
        let mut jac = Matrix::zeros(n, n);
        for i in 0..self.arch.summands {
            let act = self.activation_params(i);
            for (w, sign) in [(self.a(i), 1.0), (self.b(i), -1.0)] {
                for (row, z) in w.chunks_exact(n).zip(matvec(w, l, n, y)) {
                    let s = sign * self.arch.activation.derivative(i + 1, act, z);
                    if s == 0.0 {
                        continue;
                    }
                    for r in 0..n {
                        for c in r..n {
                            jac[(r, c)] += s * row[r] * row[c];
                        }
                    }
                }
            }
        }
        for r in 0..n {
            for c in 0..r {
                jac[(r, c)] = jac[(c, r)];
            }
        }
        Ok(jac)
    }
}

impl GradientModel for GradientNet {
    fn half_dim(&self) -> usize {
        self.arch.half_dim
    }

    fn gradient<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
        self.forward(y)
    }
}

/// A network evaluated at externally supplied (possibly traced) parameters.
#[derive(Debug, Clone, Copy)]
pub struct ParamView<'a, T> {
    pub arch: &'a Architecture,
    pub theta: &'a [T],
}

impl<T: Scalar> ParamView<'_, T> {
    pub fn vector_field(&self, y: &[T]) -> Result<Vec<T>> {
        let grad = GradientNet::forward_with(self.arch, self.theta, y)?;
        Ok(crate::systems::SymplecticMatrix::new(self.arch.half_dim).apply_inverse(&grad))
    }
}
