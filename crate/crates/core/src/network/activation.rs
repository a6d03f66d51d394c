use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diff::Scalar;
use crate::error::{Error, Result};

/// Default Padé-type numerator degree.
pub const DEFAULT_PADE_DEGREE: usize = 3;
/// Default fixed denominator `d_M(x) = 2 + 2x + x²`, ascending coefficients.
pub const DEFAULT_PADE_DENOMINATOR: [f64; 3] = [2.0, 2.0, 1.0];
pub const DEFAULT_PAU_NUMERATOR: usize = 5;
pub const DEFAULT_PAU_DENOMINATOR: usize = 4;

/// Element-wise activation family used by every summand of the network.
#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    /// `PT(x) = Σ_{j≤L} c_j x^j / d_M(x)` with learnable `c` and a fixed
    /// root-free denominator (ascending coefficients).
    Pade { degree: usize, denominator: Vec<f64> },
    /// Summand `i` (1-based) applies `x^i / i!`.
    Taylor,
    /// `Σ_{j≤m} a_j x^j / (1 + |Σ_{1≤k≤n} b_k x^k|)` with learnable `a`, `b`.
    Pau { numerator: usize, denominator: usize },
    Relu,
}

impl Activation {
    pub fn pade(degree: usize, denominator: Vec<f64>) -> Result<Self> {
        let denominator = trim(&denominator);
        let m = denominator.len().saturating_sub(1);
        if denominator.is_empty() {
            return Err(Error::Invalid("Padé denominator must be non-zero".into()));
        }
        if degree == m {
            return Err(Error::Invalid(format!(
                "Padé numerator degree must differ from the denominator degree (both {m})"
            )));
        }
        if has_real_root(&denominator) {
            return Err(Error::Invalid(format!(
                "Padé denominator {denominator:?} has a real root"
            )));
        }
        Ok(Activation::Pade { degree, denominator })
    }

    pub fn default_pade() -> Self {
        Activation::Pade {
            degree: DEFAULT_PADE_DEGREE,
            denominator: DEFAULT_PADE_DENOMINATOR.to_vec(),
        }
    }

    pub fn pau(numerator: usize, denominator: usize) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::Invalid("PAU denominator degree must be at least 1".into()));
        }
        Ok(Activation::Pau { numerator, denominator })
    }

    pub fn default_pau() -> Self {
        Activation::Pau {
            numerator: DEFAULT_PAU_NUMERATOR,
            denominator: DEFAULT_PAU_DENOMINATOR,
        }
    }

    /// Parses `pade`, `taylor`, `pau` or `relu`, with default degrees.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "pade" => Ok(Self::default_pade()),
            "taylor" => Ok(Activation::Taylor),
            "pau" => Ok(Self::default_pau()),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Invalid(format!(
                "unknown activation `{other}` (expected pade, taylor, pau or relu)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Pade { .. } => "pade",
            Activation::Taylor => "taylor",
            Activation::Pau { .. } => "pau",
            Activation::Relu => "relu",
        }
    }

    /// Learnable parameters per summand.
    pub fn params_per_summand(&self) -> usize {
        match self {
            Activation::Pade { degree, .. } => degree + 1,
            Activation::Pau { numerator, denominator } => numerator + 1 + denominator,
            Activation::Taylor | Activation::Relu => 0,
        }
    }

    /// Value at `x` for summand `summand` (1-based).
    pub fn eval<T: Scalar>(&self, summand: usize, params: &[T], x: T) -> T {
        debug_assert_eq!(params.len(), self.params_per_summand());
        match self {
            Activation::Pade { denominator, .. } => horner(params, x) / horner_const(denominator, x),
            Activation::Taylor => x.powi(summand as i32) / factorial(summand),
            Activation::Pau { numerator, .. } => {
                let (a, b) = params.split_at(numerator + 1);
                horner(a, x) / ((x * horner(b, x)).abs() + 1.0)
            }
            Activation::Relu => x.relu(),
        }
    }

    /// Analytic derivative at `x`; ReLU and `|·|` use 0 at their kink.
    pub fn derivative(&self, summand: usize, params: &[f64], x: f64) -> f64 {
        debug_assert_eq!(params.len(), self.params_per_summand());
        match self {
            Activation::Pade { denominator, .. } => {
                let (n, dn) = poly_with_derivative(params, x);
                let (d, dd) = poly_with_derivative(denominator, x);
                (dn * d - n * dd) / (d * d)
            }
            Activation::Taylor => {
                if summand == 1 {
                    1.0
                } else {
                    x.powi(summand as i32 - 1) / factorial(summand - 1)
                }
            }
            Activation::Pau { numerator, .. } => {
                let (a, b) = params.split_at(numerator + 1);
                let (p, dp) = poly_with_derivative(a, x);
                // R(x) = Σ_{k≥1} b_k x^k = x · B(x)
                let (bx, dbx) = poly_with_derivative(b, x);
                let r = x * bx;
                let dr = bx + x * dbx;
                let q = 1.0 + r.abs();
                let dq = if r > 0.0 {
                    dr
                } else if r < 0.0 {
                    -dr
                } else {
                    0.0
                };
                (dp * q - p * dq) / (q * q)
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Accumulates `scale · ∂σ/∂params` at `x` into `out`.
    pub fn accumulate_param_gradient(&self, params: &[f64], x: f64, scale: f64, out: &mut [f64]) {
        debug_assert_eq!(params.len(), self.params_per_summand());
        debug_assert_eq!(out.len(), params.len());
        match self {
            Activation::Pade { denominator, .. } => {
                let d = poly_with_derivative(denominator, x).0;
                let mut xj = scale / d;
                for o in out.iter_mut() {
                    *o += xj;
                    xj *= x;
                }
            }
            Activation::Pau { numerator, .. } => {
                let (a, b) = params.split_at(numerator + 1);
                let p = poly_with_derivative(a, x).0;
                let r = x * poly_with_derivative(b, x).0;
                let q = 1.0 + r.abs();
                let (out_a, out_b) = out.split_at_mut(numerator + 1);
                let mut xj = scale / q;
                for o in out_a.iter_mut() {
                    *o += xj;
                    xj *= x;
                }
                let sign = if r > 0.0 {
                    1.0
                } else if r < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                let mut xk = -scale * p * sign / (q * q) * x;
                for o in out_b.iter_mut() {
                    *o += xk;
                    xk *= x;
                }
            }
            Activation::Taylor | Activation::Relu => {}
        }
    }

    /// The fixed Padé denominator `d_M`, if any.
    pub fn denominator(&self) -> Option<&[f64]> {
        match self {
            Activation::Pade { denominator, .. } => Some(denominator),
            _ => None,
        }
    }

    /// `(numerator degree, denominator degree)` where meaningful.
    pub fn degrees(&self) -> Option<(usize, usize)> {
        match self {
            Activation::Pade { degree, denominator } => Some((*degree, denominator.len() - 1)),
            Activation::Pau { numerator, denominator } => Some((*numerator, *denominator)),
            _ => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.degrees() {
            Some((a, b)) => write!(f, "{}({a},{b})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Serializable description of an [`Activation`]: `kind` is one of
/// `pade`, `taylor`, `pau`, `relu`; `degrees` is `[L, M]` for Padé and
/// `[m, n]` for PAU; `fixed_denominator` lists the Padé denominator's
/// ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub kind: String,
    #[serde(default)]
    pub degrees: Option<[usize; 2]>,
    #[serde(default)]
    pub fixed_denominator: Option<Vec<f64>>,
}

impl ActivationSpec {
    pub fn build(&self) -> Result<Activation> {
        let base = Activation::from_name(&self.kind)?;
        match base {
            Activation::Pade { degree, denominator } => {
                let denominator = match (&self.fixed_denominator, self.degrees) {
                    (Some(d), _) => d.clone(),
                    (None, None) => denominator,
                    (None, Some([_, m])) if m == DEFAULT_PADE_DENOMINATOR.len() - 1 => denominator,
                    (None, Some([_, m])) => {
                        return Err(Error::Invalid(format!(
                            "Padé denominator of degree {m} needs explicit fixed_denominator coefficients"
                        )))
                    }
                };
                let degree = self.degrees.map_or(degree, |[l, _]| l);
                if let Some([_, m]) = self.degrees {
                    if trim(&denominator).len() != m + 1 {
                        return Err(Error::Invalid(format!(
                            "fixed_denominator {denominator:?} does not have degree {m}"
                        )));
                    }
                }
                Activation::pade(degree, denominator)
            }
            Activation::Pau { numerator, denominator } => {
                let [m, n] = self.degrees.unwrap_or([numerator, denominator]);
                Activation::pau(m, n)
            }
            other => Ok(other),
        }
    }
}

impl From<&Activation> for ActivationSpec {
    fn from(act: &Activation) -> Self {
        ActivationSpec {
            kind: act.name().to_string(),
            degrees: act.degrees().map(|(a, b)| [a, b]),
            fixed_denominator: act.denominator().map(<[f64]>::to_vec),
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `Σ c_j x^j` for traced coefficients, Horner order.
fn horner<T: Scalar>(coeffs: &[T], x: T) -> T {
    match coeffs.split_last() {
        None => T::cst(0.0),
        Some((&last, rest)) => rest.iter().rev().fold(last, |acc, &c| acc * x + c),
    }
}

/// `Σ c_j x^j` for constant coefficients, Horner order.
fn horner_const<T: Scalar>(coeffs: &[f64], x: T) -> T {
    match coeffs {
        [] => T::cst(0.0),
        [c0] => T::cst(*c0),
        _ => {
            let m = coeffs.len() - 1;
            let start = x * coeffs[m] + coeffs[m - 1];
            coeffs[..m - 1].iter().rev().fold(start, |acc, &c| acc * x + c)
        }
    }
}

/// Value and derivative of `Σ c_j x^j`.
pub(crate) fn poly_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    coeffs.iter().rev().fold((0.0, 0.0), |(p, dp), &c| (p * x + c, dp * x + p))
}

fn trim(coeffs: &[f64]) -> Vec<f64> {
    let len = coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
    coeffs[..len].to_vec()
}

/// Whether a polynomial (ascending coefficients) has a real root, by a
/// Sturm sequence count over the whole line.
pub fn has_real_root(coeffs: &[f64]) -> bool {
    let p = trim(coeffs);
    match p.len() {
        0 => true,
        1 => false,
        n if (n - 1) % 2 == 1 => true,
        _ => {
            let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(j, &c)| j as f64 * c).collect();
            let mut seq = vec![p, dp];
            loop {
                let r = poly_rem(&seq[seq.len() - 2], &seq[seq.len() - 1]);
                if r.is_empty() {
                    break;
                }
                seq.push(r.iter().map(|c| -c).collect());
            }
            let changes = |at_pos_inf: bool| {
                let signs: Vec<f64> = seq
                    .iter()
                    .map(|q| {
                        let lead = *q.last().unwrap();
                        let deg = q.len() - 1;
                        if at_pos_inf || deg % 2 == 0 {
                            lead.signum()
                        } else {
                            -lead.signum()
                        }
                    })
                    .collect();
                signs.windows(2).filter(|w| w[0] != w[1]).count()
            };
            changes(false) > changes(true)
        }
    }
}

/// Remainder of `a / b` (ascending coefficients), with tiny coefficients dropped.
fn poly_rem(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let scale = a.iter().chain(b).fold(0.0f64, |m, c| m.max(c.abs()));
    let lead = *b.last().unwrap();
    while r.len() >= b.len() {
        let factor = r.last().unwrap() / lead;
        let shift = r.len() - b.len();
        for (j, &c) in b.iter().enumerate() {
            r[shift + j] -= factor * c;
        }
        r.pop();
        while r.last().is_some_and(|c| c.abs() <= 1e-12 * scale) {
            r.pop();
        }
    }
    r
}
