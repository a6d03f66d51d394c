use proptest::prelude::*;
use psym_core::diff::fd_gradient;
use psym_core::integrators::{midpoint_trajectory, REFERENCE_STEP};
use psym_core::rng::Rng;
use psym_core::systems::{GradientModel, HamiltonianSystem, SymplecticMatrix, SystemKind};

fn random_point(rng: &mut Rng, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.uniform_in(-half_width, half_width)).collect()
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = Rng::new(17);
    for kind in SystemKind::ALL {
        let sys = HamiltonianSystem::new(kind);
        for _ in 0..100 {
            let y = random_point(&mut rng, sys.dim(), 2.0);
            let grad: Vec<f64> = sys.gradient(&y).unwrap();
            let fd = fd_gradient(|z| sys.hamiltonian(z), &y, 1e-5).unwrap();
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1e-3);
            for (g, f) in grad.iter().zip(&fd) {
                assert!((g - f).abs() / norm < 1e-6, "{kind} at {y:?}: {g} vs {f}");
            }
        }
    }
}

proptest! {
    #[test]
    fn vector_field_is_minus_j_times_gradient(kind in 0usize..5, y in prop::collection::vec(-2.0f64..2.0, 4)) {
        let sys = HamiltonianSystem::new(SystemKind::ALL[kind]);
        let y = &y[..sys.dim()];
        let grad: Vec<f64> = sys.gradient(y).unwrap();
        let minus_j_grad: Vec<f64> = SymplecticMatrix::new(sys.half_dim()).apply(&grad).iter().map(|v| -v).collect();
        prop_assert_eq!(sys.vector_field(y).unwrap(), minus_j_grad);
    }
}

#[test]
fn energy_is_constant_along_reference_trajectories() {
    let mut rng = Rng::new(5);
    for kind in SystemKind::ALL {
        let sys = HamiltonianSystem::new(kind);
        let y0 = random_point(&mut rng, sys.dim(), 1.0);
        let h0: f64 = sys.hamiltonian(&y0).unwrap();
        // t ∈ [0, 10] sampled every 0.1.
        let traj = midpoint_trajectory(&sys, &y0, REFERENCE_STEP, 1000, 100).unwrap();
        let drift = traj
            .iter()
            .map(|y| (sys.hamiltonian(y).unwrap() - h0).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-8, "{kind}: drift {drift:e}");
    }
}
