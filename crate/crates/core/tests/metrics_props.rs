use psym_core::metrics::{
    energy_curve, prediction_error_against, trajectory_error_against, ReferenceTrajectory, TRAJECTORY_STEP,
    TRAJECTORY_STEPS,
};
use psym_core::presets::example;
use psym_core::training::{train, TrainConfig};

#[test]
fn true_gradient_lower_bounds_the_trajectory_error() {
    let ex = example(1).unwrap();
    let sys = ex.system();
    let reference = ReferenceTrajectory::compute(&sys, &ex.eval_y0, TRAJECTORY_STEP, TRAJECTORY_STEPS).unwrap();
    let oracle = trajectory_error_against(&sys, &reference).unwrap();
    assert!(oracle < 1e-8, "{oracle:e}");
    for (column, epochs) in [(0, 300), (3, 100)] {
        let col = &ex.columns[column];
        let data = ex.dataset(col, 1).unwrap();
        let cfg = TrainConfig { epochs, ..ex.column_config(col, 1) };
        let net = train(&data, &cfg).unwrap().net;
        let learned = trajectory_error_against(&net, &reference).unwrap_or(f64::INFINITY);
        assert!(oracle <= learned + 1e-6, "{}: oracle {oracle:e} vs learned {learned:e}", col.activation);
    }
}

#[test]
fn metrics_are_deterministic() {
    let ex = example(2).unwrap();
    let sys = ex.system();
    let col = &ex.columns[0];
    let data = ex.dataset(col, 0).unwrap();
    let cfg = TrainConfig { epochs: 30, ..ex.column_config(col, 0) };
    let net = train(&data, &cfg).unwrap().net;
    let run = || {
        let reference = ReferenceTrajectory::compute(&sys, &ex.eval_y0, TRAJECTORY_STEP, 500).unwrap();
        (
            prediction_error_against(&net, &reference).unwrap(),
            trajectory_error_against(&net, &reference).unwrap(),
            energy_curve(&net, &sys, &ex.eval_y0, TRAJECTORY_STEP, 5.0).unwrap(),
        )
    };
    assert_eq!(run(), run());
}
