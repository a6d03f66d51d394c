use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use psym_core::formats::{self, fmt_f64, Checkpoint, MetricMeta};
use psym_core::integrators::{
    convergence_errors, fit_log_slope, symplecticity_residuals, whole_steps, ExactRotation, FlowMap, NOISE_FLOOR,
};
use psym_core::metrics::{
    energy_curve, max_energy_deviation, predicted_trajectory, prediction_error_against, prediction_error_curve,
    trajectory_error_against, ReferenceTrajectory, TRAJECTORY_STEP, TRAJECTORY_STEPS,
};
use psym_core::network::{Activation, ActivationSpec, GradientNet};
use psym_core::presets::{self, INTERVAL};
use psym_core::systems::{GradientModel, HamiltonianSystem, SystemKind};
use psym_core::training::{self, generate_dataset, hypercube, Region, TrainConfig};
use psym_core::Error;

use crate::config::{config_path, default_seed, resolve, usage};
use crate::{EvaluateArgs, GenDataArgs, OrderCheckArgs, PredictArgs, ReproArgs, SympcheckArgs, TrainArgs};

/// Horizon of `predict`, `pred-error` and `energy`.
const DEFAULT_HORIZON: f64 = 60.0;

/// Argument problems reported by the library become usage errors.
fn classify(err: Error) -> anyhow::Error {
    match err {
        Error::Invalid(_) | Error::Dimension { .. } | Error::UnknownSystem(_) => usage(err),
        other => other.into(),
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| usage(format!("--{flag} is required")))
}

fn system(name: &str) -> Result<HamiltonianSystem> {
    HamiltonianSystem::builtin(name).map_err(classify)
}

fn default_y0(kind: SystemKind) -> Vec<f64> {
    match kind {
        SystemKind::Galactic => vec![0.5, 0.0, 0.5, 0.0],
        _ => vec![1.0, 0.0],
    }
}

fn check_len(what: &str, values: &[f64], dim: usize) -> Result<()> {
    if values.len() != dim {
        return Err(usage(format!("{what} needs {dim} components, got {}", values.len())));
    }
    Ok(())
}

/// Writes every output only after all of them were computed.
fn write_outputs(files: &[(PathBuf, String)]) -> Result<()> {
    for (path, text) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        formats::write_text(path, text)?;
    }
    Ok(())
}

fn json_text<T: Serialize>(value: &T) -> Result<String> {
    Ok(formats::to_json_string(value)?)
}

fn load_checkpoint(path: &Path) -> Result<(Checkpoint, GradientNet)> {
    let ckpt = formats::read_checkpoint(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    let net = ckpt.to_net().with_context(|| format!("loading checkpoint {}", path.display()))?;
    Ok((ckpt, net))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDataConfig {
    system: Option<String>,
    region: Option<Region>,
    n: usize,
    interval: f64,
    h_gen: f64,
    seed: u64,
    out: Option<PathBuf>,
}

fn broadcast(region: Option<Region>, dim: usize) -> Result<Region> {
    match region {
        None => Ok(hypercube(dim, -2.0, 2.0)),
        Some(r) if r.len() == 1 => Ok(vec![r[0]; dim]),
        Some(r) if r.len() == dim => Ok(r),
        Some(r) => Err(usage(format!("region has {} intervals; give 1 or {dim}", r.len()))),
    }
}

pub fn gen_data(args: GenDataArgs) -> Result<()> {
    let defaults = json!({
        "system": null, "region": null, "n": 15, "interval": INTERVAL, "h_gen": INTERVAL,
        "seed": default_seed()?, "out": null,
    });
    let mut cfg: GenDataConfig = resolve(defaults, args.config.as_deref(), &args)?;
    let name = required(cfg.system.clone(), "system")?;
    let sys = system(&name)?;
    let region = broadcast(cfg.region.take(), sys.dim())?;
    cfg.region = Some(region.clone());
    let out = cfg
        .out
        .get_or_insert_with(|| PathBuf::from(format!("{name}_n{}_seed{}.csv", cfg.n, cfg.seed)))
        .clone();
    let data = generate_dataset(&sys, &region, cfg.n, cfg.interval, cfg.h_gen, cfg.seed).map_err(classify)?;
    write_outputs(&[
        (out.clone(), formats::dataset_csv(&data)),
        (formats::sidecar_path(&out), json_text(&data.meta)?),
        (config_path(&out), json_text(&cfg)?),
    ])?;
    println!("wrote {} pairs to {}", data.len(), out.display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainCmdConfig {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    h: f64,
    steps: Option<usize>,
    epochs: usize,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    seed: u64,
    width: usize,
    summands: usize,
    activation: String,
    degrees: Option<Vec<usize>>,
    denominator: Option<Vec<f64>>,
}

pub fn train(args: TrainArgs) -> Result<()> {
    let d = TrainConfig::default();
    let defaults = json!({
        "data": null, "out": null, "h": d.h, "steps": null, "epochs": d.epochs,
        "learning_rate": d.learning_rate, "beta1": d.beta1, "beta2": d.beta2, "epsilon": d.epsilon,
        "seed": default_seed()?, "width": d.width, "summands": d.summands, "activation": "pade",
        "degrees": null, "denominator": null,
    });
    let mut cfg: TrainCmdConfig = resolve(defaults, args.config.as_deref(), &args)?;
    let data_path = required(cfg.data.clone(), "data")?;
    let degrees = match &cfg.degrees {
        None => None,
        Some(v) if v.len() == 2 => Some([v[0], v[1]]),
        Some(v) => return Err(usage(format!("--degrees takes two numbers, got {}", v.len()))),
    };
    let data = formats::read_dataset(&data_path).with_context(|| format!("reading {}", data_path.display()))?;
    if cfg.steps.is_none() {
        cfg.steps = Some(whole_steps(data.meta.interval, cfg.h, 1e-9).map_err(classify)?);
    }
    let out = cfg
        .out
        .get_or_insert_with(|| data_path.with_extension("ckpt.json"))
        .clone();
    let train_config = TrainConfig {
        h: cfg.h,
        steps: cfg.steps.unwrap_or(1),
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        epsilon: cfg.epsilon,
        seed: cfg.seed,
        width: cfg.width,
        summands: cfg.summands,
        activation: ActivationSpec {
            kind: cfg.activation.clone(),
            degrees,
            fixed_denominator: cfg.denominator.clone(),
        },
    };
    train_config.validate(data.meta.interval).map_err(classify)?;
    train_config.architecture(data.dim() / 2).map_err(classify)?;

    let trained = training::train(&data, &train_config)?;
    let ckpt = Checkpoint::from_net(&trained.net, &data.meta.system_name, &train_config);
    write_outputs(&[
        (out.clone(), json_text(&ckpt)?),
        (out.with_extension("history.csv"), formats::history_csv(&trained.history)),
        (config_path(&out), json_text(&cfg)?),
    ])?;
    println!(
        "trained {} parameters for {} epochs, final loss {}; checkpoint {}",
        trained.net.num_params(),
        train_config.epochs,
        fmt_f64(trained.final_loss()),
        out.display()
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictConfig {
    checkpoint: Option<PathBuf>,
    y0: Option<Vec<f64>>,
    h: Option<f64>,
    horizon: f64,
    out: Option<PathBuf>,
}

/// `y0` from the config, or the evaluation state of the named system.
fn initial_state(y0: Option<Vec<f64>>, system_name: &str, dim: usize) -> Result<Vec<f64>> {
    let y0 = match y0 {
        Some(y) => y,
        None => default_y0(
            system_name
                .parse()
                .map_err(|_| usage(format!("no default --y0 for system `{system_name}`")))?,
        ),
    };
    check_len("--y0", &y0, dim)?;
    Ok(y0)
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let defaults = json!({"checkpoint": null, "y0": null, "h": null, "horizon": DEFAULT_HORIZON, "out": null});
    let mut cfg: PredictConfig = resolve(defaults, args.config.as_deref(), &args)?;
    let ckpt_path = required(cfg.checkpoint.clone(), "checkpoint")?;
    let (ckpt, net) = load_checkpoint(&ckpt_path)?;
    let y0 = initial_state(cfg.y0.take(), &ckpt.system_name, net.dim())?;
    cfg.y0 = Some(y0.clone());
    let h = *cfg.h.get_or_insert(ckpt.train_config.h);
    let steps = whole_steps(cfg.horizon, h, 1e-9).map_err(classify)?;
    let out = cfg
        .out
        .get_or_insert_with(|| ckpt_path.with_extension("predict.csv"))
        .clone();

    let states = predicted_trajectory(&net, &y0, h, steps).map_err(classify)?;
    let mut csv = String::from("t");
    for k in 1..=y0.len() {
        csv.push_str(&format!(",y_{k}"));
    }
    csv.push('\n');
    for (i, y) in states.iter().enumerate() {
        csv.push_str(&fmt_f64(i as f64 * h));
        for v in y {
            csv.push(',');
            csv.push_str(&fmt_f64(*v));
        }
        csv.push('\n');
    }
    write_outputs(&[(out.clone(), csv), (config_path(&out), json_text(&cfg)?)])?;
    println!("wrote {} states to {}", states.len(), out.display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateConfig {
    checkpoint: Option<PathBuf>,
    metric: Option<String>,
    system: Option<String>,
    y0: Option<Vec<f64>>,
    h: f64,
    horizon: Option<f64>,
    out: Option<PathBuf>,
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let defaults = json!({
        "checkpoint": null, "metric": null, "system": null, "y0": null, "h": TRAJECTORY_STEP,
        "horizon": null, "out": null,
    });
    let mut cfg: EvaluateConfig = resolve(defaults, args.config.as_deref(), &args)?;
    let ckpt_path = required(cfg.checkpoint.clone(), "checkpoint")?;
    let metric = required(cfg.metric.clone(), "metric")?;
    let default_horizon = match metric.as_str() {
        "pred-error" | "energy" => DEFAULT_HORIZON,
        "traj-error" => TRAJECTORY_STEPS as f64 * TRAJECTORY_STEP,
        other => return Err(usage(format!("unknown metric `{other}` (expected pred-error, traj-error or energy)"))),
    };
    let (ckpt, net) = load_checkpoint(&ckpt_path)?;
    let sys_name = cfg.system.get_or_insert_with(|| ckpt.system_name.clone()).clone();
    let sys = system(&sys_name)?;
    if sys.dim() != net.dim() {
        return Err(usage(format!(
            "system `{sys_name}` has dimension {}, the checkpoint {}",
            sys.dim(),
            net.dim()
        )));
    }
    let y0 = initial_state(cfg.y0.take(), &sys_name, sys.dim())?;
    cfg.y0 = Some(y0.clone());
    let horizon = *cfg.horizon.get_or_insert(default_horizon);
    let h = cfg.h;
    let steps = whole_steps(horizon, h, 1e-9).map_err(classify)?;
    if steps == 0 {
        return Err(usage("horizon must cover at least one step"));
    }
    let out = cfg
        .out
        .get_or_insert_with(|| ckpt_path.with_extension(format!("{metric}.csv")))
        .clone();

    let (header, curve, value) = match metric.as_str() {
        "pred-error" => {
            let curve = prediction_error_curve(&net, &sys, &y0, h, horizon).map_err(classify)?;
            let value = curve.max();
            ("t,squared_error", curve, value)
        }
        "energy" => {
            let curve = energy_curve(&net, &sys, &y0, h, horizon).map_err(classify)?;
            let value = max_energy_deviation(&curve);
            ("t,energy", curve, value)
        }
        _ => {
            let reference = ReferenceTrajectory::compute(&sys, &y0, h, steps).map_err(classify)?;
            let mut curve = prediction_error_against(&net, &reference)?;
            let dim = y0.len() as f64;
            curve.values.iter_mut().for_each(|v| *v /= dim);
            let value = trajectory_error_against(&net, &reference)?;
            ("t,normalized_squared_error", curve, value)
        }
    };
    let meta = MetricMeta {
        metric: metric.clone(),
        system: sys_name,
        checkpoint_hash: formats::file_sha256(&ckpt_path)?,
        y0,
        h,
        value,
    };
    write_outputs(&[
        (out.clone(), formats::series_csv(header, &curve.times, &curve.values)),
        (formats::sidecar_path(&out), json_text(&meta)?),
        (config_path(&out), json_text(&cfg)?),
    ])?;
    println!("{metric} {}", fmt_f64(value));
    Ok(())
}

/// Sidecar of `sympcheck` and `order-check`.
#[derive(Serialize)]
struct OrderMeta<'a> {
    check: &'a str,
    system: &'a str,
    steps: &'a [f64],
    values: &'a [f64],
    slope: Option<f64>,
    diagnostic: Option<String>,
}

/// Writes the `h,<column>` CSV and sidecar; a slope lost in the noise
/// floor is reported and fails the command.
fn finish_order(
    check: &str,
    column: &str,
    system: &str,
    steps: &[f64],
    values: &[f64],
    out: &Path,
    config: String,
) -> Result<()> {
    let (slope, diagnostic) = match fit_log_slope(steps, values) {
        Ok(s) => (Some(s), None),
        Err(e @ Error::BelowNoiseFloor { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let meta = OrderMeta { check, system, steps, values, slope, diagnostic: diagnostic.clone() };
    write_outputs(&[
        (out.to_path_buf(), formats::series_csv(&format!("h,{column}"), steps, values)),
        (formats::sidecar_path(out), json_text(&meta)?),
        (config_path(out), config),
    ])?;
    for (h, v) in steps.iter().zip(values) {
        println!("h={} {column}={}", fmt_f64(*h), fmt_f64(*v));
    }
    match slope {
        Some(s) => {
            println!("slope {s:.4}");
            Ok(())
        }
        None => Err(anyhow::anyhow!(
            "below noise floor: every {column} is at most {NOISE_FLOOR:e}, so no slope can be fitted"
        )),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SympcheckConfig {
    system: String,
    map: String,
    y: Option<Vec<f64>>,
    steps: Vec<f64>,
    compose: usize,
    out: Option<PathBuf>,
}

pub fn sympcheck(args: SympcheckArgs) -> Result<()> {
    let defaults = json!({
        "system": "modified_pendulum", "map": "ps-rk", "y": null, "steps": [0.5, 0.35, 0.25],
        "compose": 1, "out": null,
    });
    let mut cfg: SympcheckConfig = resolve(defaults, args.config.as_deref(), &args)?;
    let sys = system(&cfg.system)?;
    let y = cfg.y.get_or_insert_with(|| vec![1.0; sys.dim()]).clone();
    check_len("--y", &y, sys.dim())?;
    if cfg.compose == 0 {
        return Err(usage("--compose must be at least 1"));
    }
    let out = cfg
        .out
        .get_or_insert_with(|| PathBuf::from(format!("sympcheck_{}.csv", cfg.system)))
        .clone();
    let values = match cfg.map.as_str() {
        "ps-rk" => {
            symplecticity_residuals(|h| FlowMap::composed(&sys, h, cfg.compose), &y, &cfg.steps).map_err(classify)?
        }
        "exact-rotation" => {
            if sys.kind() != SystemKind::Harmonic {
                return Err(usage("--map exact-rotation is the harmonic flow; use --system harmonic"));
            }
            let half_dim = sys.half_dim();
            let compose = cfg.compose as f64;
            symplecticity_residuals(|h| Ok(ExactRotation { half_dim, h: compose * h }), &y, &cfg.steps)
                .map_err(classify)?
        }
        other => return Err(usage(format!("unknown map `{other}` (expected ps-rk or exact-rotation)"))),
    };
    finish_order("sympcheck", "residual", &cfg.system, &cfg.steps, &values, &out, json_text(&cfg)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderCheckConfig {
    system: String,
    y0: Option<Vec<f64>>,
    steps: Vec<f64>,
    t_final: f64,
    out: Option<PathBuf>,
}

pub fn order_check(args: OrderCheckArgs) -> Result<()> {
    let defaults = json!({
        "system": "pendulum", "y0": null, "steps": [0.1, 0.05, 0.025, 0.0125], "t_final": 1.0, "out": null,
    });
    let mut cfg: OrderCheckConfig = resolve(defaults, args.config.as_deref(), &args)?;
    let sys = system(&cfg.system)?;
    let y0 = cfg.y0.get_or_insert_with(|| default_y0(sys.kind())).clone();
    check_len("--y0", &y0, sys.dim())?;
    let out = cfg
        .out
        .get_or_insert_with(|| PathBuf::from(format!("order_{}.csv", cfg.system)))
        .clone();
    let values = convergence_errors(&sys, &y0, &cfg.steps, cfg.t_final).map_err(classify)?;
    finish_order("order-check", "error", &cfg.system, &cfg.steps, &values, &out, json_text(&cfg)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReproConfig {
    example: Option<String>,
    seeds: Vec<u64>,
    columns: String,
    epochs: Option<usize>,
    traj_steps: usize,
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct ReproRow {
    column: String,
    activation: String,
    n_train: usize,
    summands: usize,
    seed: u64,
    final_loss: f64,
    trajectory_error: f64,
    max_energy_deviation: f64,
    published_error: f64,
}

#[derive(Serialize)]
struct ColumnSummary {
    column: String,
    best_seed: u64,
    best_trajectory_error: f64,
    published_error: f64,
}

#[derive(Serialize)]
struct ReproSummary {
    example: String,
    system: String,
    eval_y0: Vec<f64>,
    columns: Vec<ColumnSummary>,
    runs: Vec<ReproRow>,
}

/// `∞` when the prediction left the finite range.
fn or_diverged(value: psym_core::Result<f64>) -> Result<f64> {
    match value {
        Ok(v) => Ok(v),
        Err(e) if e.is_non_finite() => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

pub fn repro(args: ReproArgs) -> Result<()> {
    let defaults = json!({
        "example": null, "seeds": [0, 1, 2], "columns": "all", "epochs": null,
        "traj_steps": TRAJECTORY_STEPS, "out_dir": null,
    });
    let mut cfg: ReproConfig = resolve(defaults, args.config.as_deref(), &args)?;
    let mut ex = presets::parse_example(&required(cfg.example.clone(), "example")?).map_err(classify)?;
    if let Some(epochs) = cfg.epochs {
        ex.train.epochs = epochs;
    }
    let columns: Vec<_> = match cfg.columns.as_str() {
        "all" => ex.columns.clone(),
        "pade" => ex
            .columns
            .iter()
            .filter(|c| matches!(c.activation, Activation::Pade { .. }))
            .cloned()
            .collect(),
        other => return Err(usage(format!("unknown column set `{other}` (expected all or pade)"))),
    };
    if cfg.seeds.is_empty() || cfg.traj_steps == 0 {
        return Err(usage("repro needs at least one seed and one trajectory step"));
    }
    let out_dir = cfg
        .out_dir
        .get_or_insert_with(|| PathBuf::from(format!("repro_{}", ex.name())))
        .clone();
    let sys = ex.system();
    let reference = ReferenceTrajectory::compute(&sys, &ex.eval_y0, TRAJECTORY_STEP, cfg.traj_steps)?;

    let mut files = Vec::new();
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for col in &columns {
        let label = format!("{}_n{}_s{}", col.activation.name(), col.n_train, col.summands);
        let mut best: Option<(u64, f64)> = None;
        for &seed in &cfg.seeds {
            let train_config = ex.column_config(col, seed);
            let data = ex.dataset(col, seed)?;
            let (final_loss, traj, energy) = match training::train(&data, &train_config) {
                Ok(trained) => {
                    let traj = or_diverged(trajectory_error_against(&trained.net, &reference))?;
                    let energy = or_diverged(
                        energy_curve(&trained.net, &sys, &ex.eval_y0, TRAJECTORY_STEP, DEFAULT_HORIZON)
                            .map(|c| max_energy_deviation(&c)),
                    )?;
                    let stem = out_dir.join(format!("{label}_seed{seed}"));
                    let ckpt = Checkpoint::from_net(&trained.net, sys.name(), &train_config);
                    files.push((stem.with_extension("json"), json_text(&ckpt)?));
                    files.push((stem.with_extension("history.csv"), formats::history_csv(&trained.history)));
                    (trained.final_loss(), traj, energy)
                }
                Err(e @ Error::NonFiniteLoss { .. }) => {
                    eprintln!("{label} seed {seed}: {e}");
                    (f64::INFINITY, f64::INFINITY, f64::INFINITY)
                }
                Err(e) => return Err(e.into()),
            };
            eprintln!(
                "{label} seed {seed}: loss {} trajectory error {} max |dH| {}",
                fmt_f64(final_loss),
                fmt_f64(traj),
                fmt_f64(energy)
            );
            if best.is_none_or(|(_, b)| traj < b) {
                best = Some((seed, traj));
            }
            runs.push(ReproRow {
                column: label.clone(),
                activation: col.activation.to_string(),
                n_train: col.n_train,
                summands: col.summands,
                seed,
                final_loss,
                trajectory_error: traj,
                max_energy_deviation: energy,
                published_error: col.published_error,
            });
        }
        let (best_seed, best_trajectory_error) = best.expect("at least one seed");
        summaries.push(ColumnSummary {
            column: label,
            best_seed,
            best_trajectory_error,
            published_error: col.published_error,
        });
    }

    let mut csv = String::from(
        "column,activation,n_train,summands,seed,final_loss,trajectory_error,max_energy_deviation,published_error\n",
    );
    for r in &runs {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.column,
            r.activation,
            r.n_train,
            r.summands,
            r.seed,
            fmt_f64(r.final_loss),
            fmt_f64(r.trajectory_error),
            fmt_f64(r.max_energy_deviation),
            fmt_f64(r.published_error)
        ));
    }
    let summary = ReproSummary {
        example: ex.name(),
        system: sys.name().to_string(),
        eval_y0: ex.eval_y0.clone(),
        columns: summaries,
        runs,
    };
    files.push((out_dir.join("summary.csv"), csv));
    files.push((out_dir.join("summary.json"), json_text(&summary)?));
    files.push((out_dir.join("repro.config.json"), json_text(&cfg)?));
    write_outputs(&files)?;

    println!("{:<16} {:>14} {:>10}", "column", "best error", "published");
    for c in &summary.columns {
        println!(
            "{:<16} {:>14.6e} {:>10}",
            c.column, c.best_trajectory_error, c.published_error
        );
    }
    Ok(())
}
