//! Closed-form Hamiltonian systems.
//!
//! States are ordered `y = (p_1..p_d, q_1..q_d)` everywhere in the crate.

use std::fmt;
use std::str::FromStr;

use crate::diff::Scalar;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// The canonical structure matrix `J = [[0, I_d], [−I_d, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticMatrix {
    half_dim: usize,
}

impl SymplecticMatrix {
    pub fn new(half_dim: usize) -> Self {
        Self { half_dim }
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn matrix(&self) -> Matrix {
        let d = self.half_dim;
        let mut j = Matrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            j[(i, d + i)] = 1.0;
            j[(d + i, i)] = -1.0;
        }
        j
    }

    /// `J v = (v_q, −v_p)`.
    pub fn apply<T: Scalar>(&self, v: &[T]) -> Vec<T> {
        let d = self.half_dim;
        debug_assert_eq!(v.len(), 2 * d);
        v[d..].iter().copied().chain(v[..d].iter().map(|&x| -x)).collect()
    }

    /// `J⁻¹ v = −J v = (−v_q, v_p)`.
    pub fn apply_inverse<T: Scalar>(&self, v: &[T]) -> Vec<T> {
        let d = self.half_dim;
        debug_assert_eq!(v.len(), 2 * d);
        v[d..].iter().map(|&x| -x).chain(v[..d].iter().copied()).collect()
    }
}

/// Anything that supplies `∇H`, analytic or learned.
pub trait GradientModel {
    /// Half of the state dimension.
    fn half_dim(&self) -> usize;

    /// `∇H(y)`; implementations check `y.len() == 2d`.
    fn gradient<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>>;

    fn dim(&self) -> usize {
        2 * self.half_dim()
    }

    /// The Hamiltonian vector field `J⁻¹∇H(y)`.
    fn vector_field<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
        let grad = self.gradient(y)?;
        Ok(SymplecticMatrix::new(self.half_dim()).apply_inverse(&grad))
    }
}

impl<G: GradientModel + ?Sized> GradientModel for &G {
    fn half_dim(&self) -> usize {
        (**self).half_dim()
    }

    fn gradient<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
        (**self).gradient(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    /// Bead on a wire, `H = p² / (2(1 + U′(q)²)) + U(q)` with `U(q) = 0.1 q (q − 1)`.
    BeadOnWire,
    /// `H = p²/2 − cos(q)(1 − p/6)`.
    ModifiedPendulum,
    /// `H = (p₁² + p₂²)/2 + (p₁q₂ − p₂q₁)/2 + ln(1 + q₁² + q₂²)`.
    Galactic,
    /// `H = p²/2 − cos(q)`.
    Pendulum,
    /// `H = (p² + q²)/2`, whose flow is an exact rotation.
    Harmonic,
}

impl SystemKind {
    pub const ALL: [SystemKind; 5] = [
        SystemKind::BeadOnWire,
        SystemKind::ModifiedPendulum,
        SystemKind::Galactic,
        SystemKind::Pendulum,
        SystemKind::Harmonic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::BeadOnWire => "bead_on_wire",
            SystemKind::ModifiedPendulum => "modified_pendulum",
            SystemKind::Galactic => "galactic",
            SystemKind::Pendulum => "pendulum",
            SystemKind::Harmonic => "harmonic",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownSystem(s.to_string()))
    }
}

/// A reference system with analytic `H` and `∇H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HamiltonianSystem {
    kind: SystemKind,
}

const BEAD_SCALE: f64 = 0.1;

impl HamiltonianSystem {
    pub fn new(kind: SystemKind) -> Self {
        Self { kind }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        name.parse().map(Self::new)
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        let expected = 2 * self.half_dim();
        if got == expected {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got })
        }
    }

    pub fn hamiltonian<T: Scalar>(&self, y: &[T]) -> Result<T> {
        self.check_dim(y.len())?;
        let h = match self.kind {
            SystemKind::BeadOnWire => {
                let (p, q) = (y[0], y[1]);
                let slope = bead_slope(q);
                let u = q * (q - 1.0) * BEAD_SCALE;
                p * p / ((slope * slope + 1.0) * 2.0) + u
            }
            SystemKind::ModifiedPendulum => {
                let (p, q) = (y[0], y[1]);
                p * p * 0.5 - q.cos() * (T::cst(1.0) - p / 6.0)
            }
            SystemKind::Galactic => {
                let (p1, p2, q1, q2) = (y[0], y[1], y[2], y[3]);
                (p1 * p1 + p2 * p2) * 0.5
                    + (p1 * q2 - p2 * q1) * 0.5
                    + (q1 * q1 + q2 * q2 + 1.0).ln()
            }
            SystemKind::Pendulum => {
                let (p, q) = (y[0], y[1]);
                p * p * 0.5 - q.cos()
            }
            SystemKind::Harmonic => {
                let (p, q) = (y[0], y[1]);
                (p * p + q * q) * 0.5
            }
        };
        Ok(h)
    }
}

/// `U′(q)` for the bead on a wire.
fn bead_slope<T: Scalar>(q: T) -> T {
    (q * 2.0 - 1.0) * BEAD_SCALE
}

impl GradientModel for HamiltonianSystem {
    fn half_dim(&self) -> usize {
        match self.kind {
            SystemKind::Galactic => 2,
            _ => 1,
        }
    }

    fn gradient<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_dim(y.len())?;
        let grad = match self.kind {
            SystemKind::BeadOnWire => {
                let (p, q) = (y[0], y[1]);
                let slope = bead_slope(q);
                let denom = slope * slope + 1.0;
                let dh_dp = p / denom;
                // ∂/∂q of p²/(2(1+U′²)) is −p² U′ U″ / (1+U′²)², with U″ = 2·0.1.
                let dh_dq = -(p * p * slope * (2.0 * BEAD_SCALE)) / (denom * denom) + slope;
                vec![dh_dp, dh_dq]
            }
            SystemKind::ModifiedPendulum => {
                let (p, q) = (y[0], y[1]);
                vec![p + q.cos() / 6.0, q.sin() * (T::cst(1.0) - p / 6.0)]
            }
            SystemKind::Galactic => {
                let (p1, p2, q1, q2) = (y[0], y[1], y[2], y[3]);
                let r = q1 * q1 + q2 * q2 + 1.0;
                vec![
                    p1 + q2 * 0.5,
                    p2 - q1 * 0.5,
                    -p2 * 0.5 + q1 * 2.0 / r,
                    p1 * 0.5 + q2 * 2.0 / r,
                ]
            }
            SystemKind::Pendulum => vec![y[0], y[1].sin()],
            SystemKind::Harmonic => vec![y[0], y[1]],
        };
        Ok(grad)
    }
}
