//! The four reference problems and the activation comparison columns.

use crate::error::{Error, Result};
use crate::network::{Activation, ActivationSpec};
use crate::systems::{GradientModel, HamiltonianSystem, SystemKind};
use crate::training::{generate_dataset, hypercube, train, Dataset, Region, TrainConfig, Trained};

/// Observation interval and data-generation step of every example.
pub const INTERVAL: f64 = 0.01;

/// One run of the activation comparison: activation, training-set size, summands.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub activation: Activation,
    pub n_train: usize,
    pub summands: usize,
    /// Trajectory error reported for this column in the original experiments.
    pub published_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: u8,
    pub system: SystemKind,
    pub region: Region,
    pub n_train: usize,
    pub train: TrainConfig,
    /// Initial state of the evaluation trajectories.
    pub eval_y0: Vec<f64>,
    pub columns: Vec<Column>,
}

impl Example {
    pub fn name(&self) -> String {
        format!("example{}", self.id)
    }

    pub fn system(&self) -> HamiltonianSystem {
        HamiltonianSystem::new(self.system)
    }

    /// Training pairs for `column`; `seed` drives the sampling.
    pub fn dataset(&self, column: &Column, seed: u64) -> Result<Dataset> {
        generate_dataset(&self.system(), &self.region, column.n_train, INTERVAL, INTERVAL, seed)
    }

    /// Generates the column's data and trains its network, both from `seed`.
    pub fn train_column(&self, column: &Column, seed: u64) -> Result<(Dataset, Trained)> {
        let data = self.dataset(column, seed)?;
        let trained = train(&data, &self.column_config(column, seed))?;
        Ok((data, trained))
    }

    /// Training configuration of `column` with the given seed.
    pub fn column_config(&self, column: &Column, seed: u64) -> TrainConfig {
        TrainConfig {
            summands: column.summands,
            activation: ActivationSpec::from(&column.activation),
            seed,
            ..self.train.clone()
        }
    }
}

fn column(activation: Activation, n_train: usize, summands: usize, published_error: f64) -> Column {
    Column { activation, n_train, summands, published_error }
}

fn planar_columns(errors: [f64; 7], pau_summands: usize) -> Vec<Column> {
    vec![
        column(Activation::default_pade(), 15, 4, errors[0]),
        column(Activation::default_pau(), 15, pau_summands, errors[1]),
        column(Activation::default_pau(), 100, 4, errors[2]),
        column(Activation::Taylor, 15, 8, errors[3]),
        column(Activation::Taylor, 100, 8, errors[4]),
        column(Activation::Relu, 15, 8, errors[5]),
        column(Activation::Relu, 1000, 8, errors[6]),
    ]
}

fn planar(id: u8, system: SystemKind, columns: Vec<Column>) -> Example {
    Example {
        id,
        system,
        region: hypercube(2, -2.0, 2.0),
        n_train: 15,
        train: TrainConfig::default(),
        eval_y0: vec![1.0, 0.0],
        columns,
    }
}

/// Example `id` (1–4).
pub fn example(id: u8) -> Result<Example> {
    let ex = match id {
        1 => planar(
            1,
            SystemKind::BeadOnWire,
            planar_columns([0.0345, 3.624, 0.4270, 0.5762, 0.3284, 0.7273, 0.1980], 4),
        ),
        2 => planar(
            2,
            SystemKind::ModifiedPendulum,
            planar_columns([0.0742, 0.3624, 0.0975, 0.6802, 0.1031, 5.1816, 0.1162], 8),
        ),
        3 => Example {
            id: 3,
            system: SystemKind::Galactic,
            region: hypercube(4, -2.0, 2.0),
            n_train: 1000,
            train: TrainConfig {
                epochs: 2000,
                learning_rate: 1e-3,
                summands: 6,
                width: 4,
                ..TrainConfig::default()
            },
            eval_y0: vec![0.5, 0.0, 0.5, 0.0],
            columns: vec![
                column(Activation::default_pade(), 1000, 6, 0.5605),
                column(Activation::default_pau(), 1000, 12, 5.3687),
                column(Activation::default_pau(), 5000, 6, 0.7182),
                column(Activation::Taylor, 1000, 12, 7.9136),
                column(Activation::Taylor, 5000, 12, 2.579),
                column(Activation::Relu, 1000, 12, 1.9445),
                column(Activation::Relu, 10000, 12, 0.9316),
            ],
        },
        4 => planar(4, SystemKind::Pendulum, vec![column(Activation::default_pade(), 15, 4, f64::NAN)]),
        other => return Err(Error::Invalid(format!("unknown example {other} (expected 1-4)"))),
    };
    debug_assert_eq!(ex.region.len(), ex.system().dim());
    Ok(ex)
}

/// Accepts `3`, `example3` or `ex3`.
pub fn parse_example(name: &str) -> Result<Example> {
    let digits = name.trim_start_matches("example").trim_start_matches("ex");
    let id: u8 = digits
        .parse()
        .map_err(|_| Error::Invalid(format!("unknown example `{name}` (expected example1..example4)")))?;
    example(id)
}
