use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type that every traced computation in the crate is written against.
///
/// The primitive set is closed: the arithmetic operators (also mixed with
/// plain `f64` constants on the right), integer power, negation, absolute
/// value, `sin`, `cos`, natural log and dot product. Matrix–vector products are
/// built from [`Scalar::dot`]. Plain `f64` evaluates directly, [`Dual`]
/// propagates one tangent direction, and [`Var`] records onto a [`Tape`].
///
/// [`Dual`]: super::Dual
/// [`Var`]: super::Var
/// [`Tape`]: super::Tape
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// A constant, carrying no derivative information.
    fn cst(c: f64) -> Self;

    /// Primal value.
    fn value(&self) -> f64;

    fn powi(self, n: i32) -> Self;

    /// Absolute value; the derivative at 0 is taken as 0.
    fn abs(self) -> Self;

    fn sin(self) -> Self;

    fn cos(self) -> Self;

    fn ln(self) -> Self;

    /// `Σ a_i b_i`, accumulated left to right starting from 0.
    fn dot(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(Self::cst(0.0), |acc, (&x, &y)| acc + x * y)
    }

    /// `max(0, x)`; the derivative at 0 is taken as 0.
    fn relu(self) -> Self {
        if self.value() > 0.0 {
            self
        } else {
            Self::cst(0.0)
        }
    }

    fn is_finite(&self) -> bool {
        self.value().is_finite()
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(c: f64) -> Self {
        c
    }

    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }

    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }

    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }

    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }

    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
}

/// Row-major `rows × cols` matrix times vector, one dot product per row.
pub fn matvec<T: Scalar>(m: &[T], rows: usize, cols: usize, x: &[T]) -> Vec<T> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    m.chunks_exact(cols).map(|row| T::dot(row, x)).collect()
}

/// Transposed product `mᵀ x` for a row-major `rows × cols` matrix.
pub fn matvec_transposed<T: Scalar>(m: &[T], rows: usize, cols: usize, x: &[T]) -> Vec<T> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), rows);
    let mut column = Vec::with_capacity(rows);
    (0..cols)
        .map(|k| {
            column.clear();
            column.extend((0..rows).map(|r| m[r * cols + k]));
            T::dot(&column, x)
        })
        .collect()
}

/// Lift plain values into constants of `T`.
pub fn constants<T: Scalar>(values: &[f64]) -> Vec<T> {
    values.iter().map(|&v| T::cst(v)).collect()
}

/// Primal values of a slice of scalars.
pub fn values<T: Scalar>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(Scalar::value).collect()
}
