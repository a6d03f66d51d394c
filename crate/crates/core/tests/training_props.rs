use psym_core::diff::fd_gradient;
use psym_core::network::{Activation, ActivationSpec, Architecture, GradientNet};
use psym_core::presets::example;
use psym_core::rng::Rng;
use psym_core::systems::{HamiltonianSystem, SystemKind};
use psym_core::training::{
    adam_step, generate_dataset, hypercube, loss, loss_gradient, loss_gradient_taped, train, train_from, AdamState,
    Dataset, TrainConfig,
};

struct Case {
    system: SystemKind,
    activation: Activation,
    width: usize,
    summands: usize,
    steps: usize,
    seed: u64,
}

fn cases() -> Vec<Case> {
    let c = |system, activation, width, summands, steps, seed| Case { system, activation, width, summands, steps, seed };
    vec![
        c(SystemKind::Pendulum, Activation::default_pade(), 3, 2, 1, 1),
        c(SystemKind::Pendulum, Activation::default_pade(), 2, 1, 3, 2),
        c(SystemKind::ModifiedPendulum, Activation::Taylor, 3, 3, 1, 3),
        c(SystemKind::BeadOnWire, Activation::Taylor, 2, 2, 3, 4),
        c(SystemKind::Galactic, Activation::default_pade(), 2, 2, 3, 5),
        c(SystemKind::Harmonic, Activation::default_pau(), 3, 2, 1, 6),
        c(SystemKind::Galactic, Activation::pau(3, 2).unwrap(), 2, 1, 3, 7),
    ]
}

const INTERVAL: f64 = 0.06;

fn case_setup(case: &Case) -> (GradientNet, Dataset, f64) {
    let sys = HamiltonianSystem::new(case.system);
    let dim = 2 * match case.system {
        SystemKind::Galactic => 2,
        _ => 1,
    };
    let data = generate_dataset(&sys, &hypercube(dim, -1.5, 1.5), 3, INTERVAL, 0.01, case.seed).unwrap();
    let arch = Architecture::new(dim / 2, case.width, case.summands, case.activation.clone()).unwrap();
    let mut rng = Rng::new(case.seed + 100);
    let params = (0..arch.num_params()).map(|_| 0.5 * rng.normal()).collect();
    (GradientNet::from_params(arch, params).unwrap(), data, INTERVAL / case.steps as f64)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn loss_gradient_matches_central_differences() {
    for case in cases() {
        let (net, data, h) = case_setup(&case);
        let (value, grad) = loss_gradient(&net, &data, h, case.steps).unwrap();
        assert_eq!(value, loss(&net, &data, h, case.steps).unwrap());
        let arch = net.architecture().clone();
        let fd = fd_gradient(
            |theta| loss(&GradientNet::from_params(arch.clone(), theta.to_vec())?, &data, h, case.steps),
            net.params(),
            1e-5,
        )
        .unwrap();
        let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = max_abs(&diff) / max_abs(&fd);
        assert!(rel < 1e-5, "{} {} K={}: relative error {rel:e}", case.system, case.activation, case.steps);
    }
}

#[test]
fn adjoint_and_tape_gradients_agree() {
    for case in cases() {
        let (net, data, h) = case_setup(&case);
        let (v1, g1) = loss_gradient(&net, &data, h, case.steps).unwrap();
        let (v2, g2) = loss_gradient_taped(&net, &data, h, case.steps).unwrap();
        assert!((v1 - v2).abs() <= 1e-14 * v1.abs());
        let diff: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a - b).collect();
        assert!(max_abs(&diff) <= 1e-12 * max_abs(&g2), "{}", case.activation);
    }
}

#[test]
fn loss_is_additive_over_a_partition() {
    let case = &cases()[2];
    let sys = HamiltonianSystem::new(case.system);
    let data = generate_dataset(&sys, &hypercube(2, -2.0, 2.0), 10, INTERVAL, 0.01, 9).unwrap();
    let (net, _, h) = case_setup(case);
    let (first, rest) = (data.slice(0, 4).unwrap(), data.slice(4, 6).unwrap());
    let (all, g_all) = loss_gradient(&net, &data, h, case.steps).unwrap();
    let (a, g_a) = loss_gradient(&net, &first, h, case.steps).unwrap();
    let (b, g_b) = loss_gradient(&net, &rest, h, case.steps).unwrap();
    assert!((10.0 * all - (4.0 * a + 6.0 * b)).abs() <= 1e-13 * all);
    for ((x, y), z) in g_all.iter().zip(&g_a).zip(&g_b) {
        assert!((10.0 * x - (4.0 * y + 6.0 * z)).abs() <= 1e-12 * (1.0 + x.abs()));
    }
}

fn small_config(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, width: 4, summands: 2, seed: 12, ..TrainConfig::default() }
}

fn pendulum_data(n: usize, seed: u64) -> Dataset {
    let sys = HamiltonianSystem::new(SystemKind::Pendulum);
    generate_dataset(&sys, &hypercube(2, -2.0, 2.0), n, 0.01, 0.01, seed).unwrap()
}

#[test]
fn each_epoch_is_one_full_batch_adam_update() {
    let data = pendulum_data(6, 1);
    let cfg = small_config(3);
    let arch = cfg.architecture(1).unwrap();
    let trained = train(&data, &cfg).unwrap();

    let mut net = GradientNet::init(arch, cfg.seed);
    let mut state = AdamState::new(net.num_params());
    let mut history = Vec::new();
    for _ in 0..cfg.epochs {
        let (value, grad) = loss_gradient(&net, &data, cfg.h, cfg.steps).unwrap();
        history.push(value);
        adam_step(&mut state, net.params_mut(), &grad, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon).unwrap();
    }
    history.push(loss(&net, &data, cfg.h, cfg.steps).unwrap());
    assert_eq!(trained.net.params(), net.params());
    assert_eq!(trained.history, history);
}

#[test]
fn training_is_deterministic() {
    let data = pendulum_data(8, 2);
    let a = train(&data, &small_config(25)).unwrap();
    let b = train(&data, &small_config(25)).unwrap();
    assert_eq!(a, b);
    let resumed = train_from(a.net.clone(), &data, &small_config(0)).unwrap();
    assert_eq!(resumed.history, vec![a.final_loss()]);
}

#[test]
fn training_reduces_the_loss() {
    let data = pendulum_data(8, 3);
    let trained = train(&data, &small_config(200)).unwrap();
    assert!(trained.final_loss() < 0.1 * trained.history[0], "{:?}", (trained.history[0], trained.final_loss()));
}

#[test]
fn builtin_examples_train_without_non_finite_losses() {
    for id in 1..=4 {
        let ex = example(id).unwrap();
        let column = &ex.columns[0];
        let (_, trained) = ex.train_column(column, 0).unwrap();
        assert_eq!(trained.history.len(), ex.train.epochs + 1);
        assert!(trained.history.iter().all(|v| v.is_finite()), "example {id}");
        assert!(trained.final_loss() < trained.history[0], "example {id}");
    }
}

#[test]
fn checkpointed_activation_spec_rebuilds_the_architecture() {
    let cfg = TrainConfig { activation: ActivationSpec::from(&Activation::default_pau()), ..small_config(0) };
    let arch = cfg.architecture(2).unwrap();
    assert_eq!(arch.activation, Activation::default_pau());
    assert_eq!(arch.num_params(), 2 * 2 * 4 * 4 + 4 + 2 * 10);
}
