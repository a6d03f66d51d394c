//! Files exchanged with the command line: dataset CSV + metadata, JSON
//! checkpoints, loss histories, metric and order series.
//!
//! Every float is written as `{:.16e}` (17 significant digits), which
//! round-trips `f64` exactly and keeps outputs byte-stable.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::{ActivationSpec, Architecture, GradientNet};
use crate::training::{Dataset, DatasetMeta, TrainConfig};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct PreciseFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_string(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// `data.csv` → `data.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt_f64).collect::<Vec<_>>().join(",")
}

/// Dataset CSV text: header `y0_1..y0_n,y1_1..y1_n`, one pair per row.
pub fn dataset_csv(data: &Dataset) -> String {
    let n = data.dim();
    let header: Vec<String> = (1..=n)
        .map(|k| format!("y0_{k}"))
        .chain((1..=n).map(|k| format!("y1_{k}")))
        .collect();
    let mut out = header.join(",");
    out.push('\n');
    for (a, b) in data.y0.iter().zip(&data.y1) {
        out.push_str(&csv_row(a.iter().chain(b).copied()));
        out.push('\n');
    }
    out
}

/// Writes the dataset CSV and its metadata sidecar.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_text(path, &dataset_csv(data))?;
    write_json(&sidecar_path(path), &data.meta)
}

/// Parses a numeric CSV with a header line; returns header and rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("row {}: {e}", i + 1)))?;
            if row.len() != header.len() {
                return Err(Error::Format(format!(
                    "row {} has {} fields, header has {}",
                    i + 1,
                    row.len(),
                    header.len()
                )));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let (header, rows) = parse_csv(&read_text(path)?)?;
    if header.len() % 2 != 0 || header.is_empty() {
        return Err(Error::Format(format!("{}: odd column count {}", path.display(), header.len())));
    }
    let n = header.len() / 2;
    let expected: Vec<String> = (1..=n)
        .map(|k| format!("y0_{k}"))
        .chain((1..=n).map(|k| format!("y1_{k}")))
        .collect();
    if header != expected {
        return Err(Error::Format(format!("{}: unexpected header {header:?}", path.display())));
    }
    let meta: DatasetMeta = read_json(&sidecar_path(path))?;
    let (y0, y1) = rows.into_iter().map(|r| (r[..n].to_vec(), r[n..].to_vec())).unzip();
    Dataset::new(y0, y1, meta)
}

/// `epoch,loss` rows.
pub fn history_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (epoch, loss) in history.iter().enumerate() {
        out.push_str(&format!("{epoch},{}\n", fmt_f64(*loss)));
    }
    out
}

/// `header` followed by `(x, value)` rows.
pub fn series_csv(header: &str, xs: &[f64], values: &[f64]) -> String {
    let mut out = format!("{header}\n");
    for (x, v) in xs.iter().zip(values) {
        out.push_str(&format!("{},{}\n", fmt_f64(*x), fmt_f64(*v)));
    }
    out
}

/// Sidecar of a metric CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMeta {
    pub metric: String,
    pub system: String,
    pub checkpoint_hash: String,
    pub y0: Vec<f64>,
    pub h: f64,
    /// Single-number summary (the trajectory error, or the maximum of the curve).
    pub value: f64,
}

/// Weight arrays of a checkpoint; each matrix is flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "b")]
    pub bias: Vec<f64>,
    pub activation_params: Vec<Vec<f64>>,
}

/// Self-contained description of a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub system_name: String,
    pub d: usize,
    pub l: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub activation: ActivationSpec,
    pub weights: Weights,
    pub train_config: TrainConfig,
    pub seed: u64,
}

impl Checkpoint {
    pub fn from_net(net: &GradientNet, system_name: &str, train_config: &TrainConfig) -> Self {
        let arch = net.architecture();
        let s = arch.summands;
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            system_name: system_name.to_string(),
            d: arch.half_dim,
            l: arch.width,
            s,
            activation: ActivationSpec::from(&arch.activation),
            weights: Weights {
                a: (0..s).map(|i| net.a(i).to_vec()).collect(),
                b: (0..s).map(|i| net.b(i).to_vec()).collect(),
                bias: net.bias().to_vec(),
                activation_params: (0..s).map(|i| net.activation_params(i).to_vec()).collect(),
            },
            train_config: train_config.clone(),
            seed: train_config.seed,
        }
    }

    pub fn to_net(&self) -> Result<GradientNet> {
        if self.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint schema {}", self.schema_version)));
        }
        let arch = Architecture::new(self.d, self.l, self.s, self.activation.build()?)?;
        let w = &self.weights;
        let check = |what: &str, rows: &[Vec<f64>], len: usize| {
            if rows.len() != self.s || rows.iter().any(|r| r.len() != len) {
                Err(Error::Format(format!("checkpoint `{what}` must hold {} arrays of {len} numbers", self.s)))
            } else {
                Ok(())
            }
        };
        check("A", &w.a, arch.matrix_len())?;
        check("B", &w.b, arch.matrix_len())?;
        check("activation_params", &w.activation_params, arch.activation.params_per_summand())?;
        if w.bias.len() != arch.dim() {
            return Err(Error::Format(format!("checkpoint `b` must hold {} numbers", arch.dim())));
        }
        let params: Vec<f64> = w
            .a
            .iter()
            .chain(&w.b)
            .flatten()
            .chain(&w.bias)
            .chain(w.activation_params.iter().flatten())
            .copied()
            .collect();
        GradientNet::from_params(arch, params)
    }
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    write_json(path, checkpoint)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_json(path)
}
