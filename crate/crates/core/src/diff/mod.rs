//! Differentiation kernel: tape-recorded reverse mode, dual-number forward
//! mode, and a central finite-difference oracle for tests.

mod dual;
mod scalar;
mod tape;

pub use dual::Dual;
pub use scalar::{constants, matvec, matvec_transposed, values, Scalar};
pub use tape::{backward, record, Op, Tape, Var};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Directional derivative `(∂f/∂y)(point) · tangent` by forward propagation.
pub fn jvp<F>(f: F, point: &[f64], tangent: &[f64]) -> Result<Vec<f64>>
where
    F: FnOnce(&[Dual]) -> Result<Vec<Dual>>,
{
    if point.len() != tangent.len() {
        return Err(Error::Dimension {
            expected: point.len(),
            got: tangent.len(),
        });
    }
    let seeded: Vec<Dual> = point
        .iter()
        .zip(tangent)
        .map(|(&v, &d)| Dual::new(v, d))
        .collect();
    let out = f(&seeded)?;
    if let Some(k) = out.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("jvp output component {k}")));
    }
    Ok(out.iter().map(|x| x.d).collect())
}

/// Jacobian whose column `j` is `jvp(f, point, e_j)`.
pub fn jacobian<F>(mut f: F, point: &[f64]) -> Result<Matrix>
where
    F: FnMut(&[Dual]) -> Result<Vec<Dual>>,
{
    let n = point.len();
    let mut columns = Vec::with_capacity(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        columns.push(jvp(&mut f, point, &e)?);
        e[j] = 0.0;
    }
    Ok(Matrix::from_columns(&columns))
}

/// Central differences `(f(x + h e_i) − f(x − h e_i)) / 2h` per coordinate.
pub fn fd_gradient<F>(mut f: F, point: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("finite-difference step must be positive, got {step}")));
    }
    let mut x = point.to_vec();
    (0..point.len())
        .map(|i| {
            x[i] = point[i] + step;
            let plus = f(&x)?;
            x[i] = point[i] - step;
            let minus = f(&x)?;
            x[i] = point[i];
            Ok((plus - minus) / (2.0 * step))
        })
        .collect()
}
