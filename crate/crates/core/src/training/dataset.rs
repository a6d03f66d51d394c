use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{implicit_midpoint_step, whole_steps, MIDPOINT_MAX_ITER, MIDPOINT_TOL};
use crate::rng::Rng;
use crate::systems::{GradientModel, HamiltonianSystem};

/// Axis-aligned box in phase space, one `[lo, hi]` per coordinate.
pub type Region = Vec<[f64; 2]>;

/// The same interval on every coordinate.
pub fn hypercube(dim: usize, lo: f64, hi: f64) -> Region {
    vec![[lo, hi]; dim]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub system_name: String,
    pub region: Region,
    /// Observation interval between `y0` and `y1`.
    pub interval: f64,
    pub h_gen: f64,
    pub seed: u64,
}

/// Trajectory pairs `(y0, y1)` separated by `meta.interval`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y0: Vec<Vec<f64>>,
    pub y1: Vec<Vec<f64>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(y0: Vec<Vec<f64>>, y1: Vec<Vec<f64>>, meta: DatasetMeta) -> Result<Self> {
        if y0.is_empty() || y0.len() != y1.len() {
            return Err(Error::Invalid(format!(
                "dataset needs matching, non-empty y0/y1 lists (got {} and {})",
                y0.len(),
                y1.len()
            )));
        }
        let dim = y0[0].len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::Invalid(format!("state dimension must be even and positive, got {dim}")));
        }
        for (i, (a, b)) in y0.iter().zip(&y1).enumerate() {
            if a.len() != dim || b.len() != dim {
                return Err(Error::at_sample(i, Error::Dimension { expected: dim, got: a.len().min(b.len()) }));
            }
        }
        if !(meta.interval > 0.0) {
            return Err(Error::Invalid(format!("interval must be positive, got {}", meta.interval)));
        }
        Ok(Self { y0, y1, meta })
    }

    pub fn len(&self) -> usize {
        self.y0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.y0[0].len()
    }

    /// Samples `first..first + count` as their own dataset.
    pub fn slice(&self, first: usize, count: usize) -> Result<Self> {
        let end = first + count;
        if count == 0 || end > self.len() {
            return Err(Error::Invalid(format!("sample range {first}..{end} outside 0..{}", self.len())));
        }
        Ok(Self {
            y0: self.y0[first..end].to_vec(),
            y1: self.y1[first..end].to_vec(),
            meta: self.meta.clone(),
        })
    }
}

/// Pairs for a builtin system: `y0` uniform on `region`, `y1` after
/// `interval / h_gen` implicit midpoint steps.
pub fn generate_dataset(
    system: &HamiltonianSystem,
    region: &[[f64; 2]],
    n: usize,
    interval: f64,
    h_gen: f64,
    seed: u64,
) -> Result<Dataset> {
    generate_dataset_with(system, system.name(), region, n, interval, h_gen, seed)
}

/// As [`generate_dataset`] for any gradient model.
pub fn generate_dataset_with<G: GradientModel>(
    model: &G,
    system_name: &str,
    region: &[[f64; 2]],
    n: usize,
    interval: f64,
    h_gen: f64,
    seed: u64,
) -> Result<Dataset> {
    if region.len() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: region.len() });
    }
    if let Some([lo, hi]) = region.iter().find(|[lo, hi]| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::Invalid(format!("bad region interval [{lo}, {hi}]")));
    }
    if n == 0 {
        return Err(Error::Invalid("dataset size must be at least 1".into()));
    }
    if !(interval > 0.0) || !(h_gen > 0.0) {
        return Err(Error::Invalid(format!("interval {interval} and step {h_gen} must be positive")));
    }
    let steps = whole_steps(interval, h_gen, 1e-12)?;
    let mut rng = Rng::new(seed);
    let y0: Vec<Vec<f64>> = (0..n)
        .map(|_| region.iter().map(|&[lo, hi]| rng.uniform_in(lo, hi)).collect())
        .collect();
    let y1 = y0
        .iter()
        .enumerate()
        .map(|(i, start)| {
            let mut y = start.clone();
            for _ in 0..steps {
                y = implicit_midpoint_step(|z| model.vector_field(z), &y, h_gen, MIDPOINT_TOL, MIDPOINT_MAX_ITER)
                    .map_err(|e| Error::at_sample(i, e))?
                    .y;
            }
            Ok(y)
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = DatasetMeta {
        system_name: system_name.to_string(),
        region: region.to_vec(),
        interval,
        h_gen,
        seed,
    };
    Dataset::new(y0, y1, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::Scalar;
    use crate::systems::SystemKind;

    struct Still;

    impl GradientModel for Still {
        fn half_dim(&self) -> usize {
            1
        }

        fn gradient<T: Scalar>(&self, _y: &[T]) -> Result<Vec<T>> {
            Ok(vec![T::cst(0.0); 2])
        }
    }

    struct Explosive;

    impl GradientModel for Explosive {
        fn half_dim(&self) -> usize {
            1
        }

        fn gradient<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
            Ok(vec![y[0] * y[0] * 1e6, y[1] * y[1] * 1e6])
        }
    }

    #[test]
    fn zero_field_keeps_states() {
        let data = generate_dataset_with(&Still, "still", &hypercube(2, -1.0, 1.0), 1, 0.01, 0.01, 3).unwrap();
        assert_eq!(data.y0, data.y1);
    }

    #[test]
    fn seeded_and_in_region() {
        let sys = HamiltonianSystem::new(SystemKind::BeadOnWire);
        let region = vec![[-2.0, 2.0], [0.0, 1.0]];
        let a = generate_dataset(&sys, &region, 20, 0.02, 0.01, 5).unwrap();
        let b = generate_dataset(&sys, &region, 20, 0.02, 0.01, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.y0.iter().all(|y| (-2.0..2.0).contains(&y[0]) && (0.0..1.0).contains(&y[1])));
        assert_ne!(a, generate_dataset(&sys, &region, 20, 0.02, 0.01, 6).unwrap());
    }

    #[test]
    fn quadratic_energy_is_conserved() {
        let sys = HamiltonianSystem::new(SystemKind::Harmonic);
        let data = generate_dataset(&sys, &hypercube(2, -2.0, 2.0), 15, 0.01, 0.01, 7).unwrap();
        for (a, b) in data.y0.iter().zip(&data.y1) {
            let drift = (sys.hamiltonian(b).unwrap() - sys.hamiltonian(a).unwrap()).abs();
            assert!(drift < 1e-12, "{drift}");
        }
    }

    #[test]
    fn pendulum_energy_error_is_third_order() {
        // H is not quadratic, so one midpoint step changes it by O(h³).
        let sys = HamiltonianSystem::new(SystemKind::Pendulum);
        let drift = |h: f64| {
            let data = generate_dataset(&sys, &hypercube(2, -2.0, 2.0), 15, h, h, 7).unwrap();
            data.y0
                .iter()
                .zip(&data.y1)
                .map(|(a, b)| (sys.hamiltonian(b).unwrap() - sys.hamiltonian(a).unwrap()).abs())
                .fold(0.0, f64::max)
        };
        let coarse = drift(0.01);
        let fine = drift(0.005);
        assert!(coarse < 1e-6, "{coarse}");
        let ratio = coarse / fine;
        assert!((6.0..10.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn invalid_inputs() {
        let sys = HamiltonianSystem::new(SystemKind::Pendulum);
        let square = hypercube(2, -2.0, 2.0);
        assert!(generate_dataset(&sys, &square, 0, 0.01, 0.01, 0).is_err());
        assert!(generate_dataset(&sys, &square, 3, 0.015, 0.01, 0).is_err());
        assert!(generate_dataset(&sys, &hypercube(4, -2.0, 2.0), 3, 0.01, 0.01, 0).is_err());
        assert!(generate_dataset(&sys, &[[1.0, -1.0], [0.0, 1.0]], 3, 0.01, 0.01, 0).is_err());
    }

    #[test]
    fn non_convergence_names_the_sample() {
        let err = generate_dataset_with(&Explosive, "x", &hypercube(2, 1.0, 2.0), 2, 0.5, 0.5, 1).unwrap_err();
        assert!(matches!(err, Error::AtSample { index: 0, .. }), "{err:?}");
    }
}
