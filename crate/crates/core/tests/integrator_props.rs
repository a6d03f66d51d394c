use std::cell::RefCell;

use proptest::prelude::*;
use psym_core::integrators::{
    flow, ps_rk_step, pseudo_symplectic_tableau, step_jacobian, symplecticity_order, symplecticity_residual, FlowMap,
    StepMap,
};
use psym_core::linalg::Matrix;
use psym_core::rng::Rng;
use psym_core::systems::{GradientModel, HamiltonianSystem, SymplecticMatrix, SystemKind};

#[test]
fn tableau_sums() {
    let tab = pseudo_symplectic_tableau();
    assert!((tab.b().iter().sum::<f64>() - 1.0).abs() <= 1e-15);
    for (row, c) in tab.a().iter().zip(tab.c()) {
        assert!((row.iter().sum::<f64>() - c).abs() <= 1e-15);
    }
}

#[test]
fn stages_only_read_earlier_derivatives() {
    let tab = pseudo_symplectic_tableau();
    let (y, h) = ([0.3, -0.8], 0.1);
    // Field values depend on the call count, so a stage reading a later
    // derivative could not reproduce the recorded inputs.
    let calls: RefCell<Vec<(Vec<f64>, Vec<f64>)>> = RefCell::new(Vec::new());
    ps_rk_step(
        |z: &[f64]| {
            let k = calls.borrow().len() as f64;
            let f = vec![z[1] + k, -z[0] * (k + 1.0)];
            calls.borrow_mut().push((z.to_vec(), f.clone()));
            Ok(f)
        },
        &y,
        h,
    )
    .unwrap();
    let calls = calls.into_inner();
    assert_eq!(calls.len(), tab.stages());
    for (i, (input, _)) in calls.iter().enumerate() {
        for k in 0..2 {
            let expected = y[k] + h * (0..i).map(|j| tab.a()[i][j] * calls[j].1[k]).sum::<f64>();
            assert!((input[k] - expected).abs() < 1e-15, "stage {i}");
        }
    }
}

#[test]
fn step_jacobian_is_bounded() {
    let mut rng = Rng::new(23);
    for kind in SystemKind::ALL {
        let sys = HamiltonianSystem::new(kind);
        let map = FlowMap::new(&sys, 0.01).unwrap();
        for _ in 0..100 {
            let y: Vec<f64> = (0..sys.dim()).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let norm = step_jacobian(&map, &y).unwrap().frobenius_norm();
            assert!(norm < 10.0, "{kind} at {y:?}: {norm}");
        }
    }
}

#[test]
fn harmonic_global_error_constant_is_stable() {
    let sys = HamiltonianSystem::new(SystemKind::Harmonic);
    let exact = [1f64.cos(), 1f64.sin()];
    let constants: Vec<f64> = [0.1f64, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&h| {
            let n = (1.0 / h).round() as usize;
            let y = flow(|z: &[f64]| sys.vector_field(z), &[1.0, 0.0], h, n).unwrap();
            let err = ((y[0] - exact[0]).powi(2) + (y[1] - exact[1]).powi(2)).sqrt();
            err / h.powi(4)
        })
        .collect();
    for pair in constants.windows(2) {
        let ratio = pair[1] / pair[0];
        assert!((0.7..=1.3).contains(&ratio), "{constants:?}");
    }
}

#[test]
fn composition_keeps_the_residual_slope() {
    let sys = HamiltonianSystem::new(SystemKind::Pendulum);
    let y = [1.0, 1.0];
    let steps = [0.3, 0.25, 0.2];
    let single = symplecticity_order(|h| FlowMap::new(&sys, h), &y, &steps).unwrap();
    let composed = symplecticity_order(|h| FlowMap::composed(&sys, h, 10), &y, &steps).unwrap();
    assert!(
        (single.slope - composed.slope).abs() <= 0.5,
        "K=1 {} vs K=10 {}",
        single.slope,
        composed.slope
    );
}

/// Fourth-order central differences of the plain `f64` map.
fn fd_jacobian<M: StepMap>(map: &M, y: &[f64], delta: f64) -> Matrix {
    let n = y.len();
    let eval = |k: usize, t: f64| {
        let mut z = y.to_vec();
        z[k] += t;
        map.apply(&z).unwrap()
    };
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let (p1, m1, p2, m2) = (eval(k, delta), eval(k, -delta), eval(k, 2.0 * delta), eval(k, -2.0 * delta));
            (0..n)
                .map(|r| (8.0 * (p1[r] - m1[r]) - (p2[r] - m2[r])) / (12.0 * delta))
                .collect()
        })
        .collect();
    Matrix::from_columns(&columns)
}

#[test]
fn residual_matches_finite_difference_jacobian() {
    let sys = HamiltonianSystem::new(SystemKind::ModifiedPendulum);
    let y = [1.0, 1.0];
    let j = SymplecticMatrix::new(1).matrix();
    for h in [0.5, 0.6] {
        let map = FlowMap::new(&sys, h).unwrap();
        let m = fd_jacobian(&map, &y, 1e-3);
        let fd_residual = m.transpose().matmul(&j).matmul(&m).sub(&j).frobenius_norm();
        let dual_residual = symplecticity_residual(&map, &y).unwrap();
        assert!(
            (fd_residual - dual_residual).abs() < 0.05 * dual_residual,
            "h={h}: fd {fd_residual:e} vs dual {dual_residual:e}"
        );
        let dual = step_jacobian(&map, &y).unwrap();
        let diff = dual.sub(&m).frobenius_norm();
        assert!(diff < 1e-10, "h={h}: {diff:e}");
    }
}

proptest! {
    #[test]
    fn composed_flow_is_repeated_steps(y in prop::collection::vec(-1.5f64..1.5, 2), steps in 1usize..6) {
        let sys = HamiltonianSystem::new(SystemKind::BeadOnWire);
        let field = |z: &[f64]| sys.vector_field(z);
        let mut expected = y.clone();
        for _ in 0..steps {
            expected = ps_rk_step(field, &expected, 0.05).unwrap();
        }
        prop_assert_eq!(flow(field, &y, 0.05, steps).unwrap(), expected);
    }
}
