//! Run configuration, genome files and CSV reports.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::{
    gating_normalize, validate_row, FlatParams, GatingCoeffs, Repertoire, RnnParams, RnnShape, TableParams,
};
use crate::cpg::CpgConfig;
use crate::error::{Error, Result};
use crate::optimizer::OptConfig;
use crate::periodic::{Exp1Config, TargetFunction, TaskRecord, TrainingMode};
use crate::snake::{Style, TrajectoryPoint};
use crate::styles::{Exp2Config, StyleRecord, StyleRepertoire};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpgSimConfig {
    pub n_joints: usize,
    pub duration_s: f64,
    pub dt: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub cpg: CpgConfig,
}

impl Default for CpgSimConfig {
    fn default() -> Self {
        Self {
            n_joints: 8,
            duration_s: 10.0,
            dt: 0.05,
            amplitude: 0.5,
            offset: 0.0,
            cpg: CpgConfig::default(),
        }
    }
}

impl CpgSimConfig {
    pub fn validate(&self) -> Result<()> {
        self.cpg.validate()?;
        if self.n_joints == 0 {
            return Err(Error::Config("cpg_sim.n_joints must be >= 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config("cpg_sim.dt must be > 0 and duration_s >= 0".into()));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) || !self.offset.is_finite() {
            return Err(Error::Config("cpg_sim amplitude must be >= 0 and offset finite".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration_s / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsBenchConfig {
    pub dim: usize,
    pub optimizer: OptConfig,
}

impl Default for EsBenchConfig {
    fn default() -> Self {
        Self {
            dim: 10,
            optimizer: OptConfig {
                max_epochs: 2000,
                ..OptConfig::default()
            },
        }
    }
}

impl EsBenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("es_bench.dim must be >= 1".into()));
        }
        self.optimizer.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

/// Everything a run depends on. Command-line flags override `seed`, `out`
/// and `trials`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: String,
    pub trials: usize,
    pub exp1: Exp1Config,
    pub exp2: Exp2Config,
    pub cpg_sim: CpgSimConfig,
    pub es_bench: EsBenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: "out".into(),
            trials: 10,
            exp1: Exp1Config::default(),
            exp2: Exp2Config::default(),
            cpg_sim: CpgSimConfig::default(),
            es_bench: EsBenchConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        self.exp1.validate()?;
        self.exp2.validate()?;
        self.cpg_sim.validate()?;
        self.es_bench.validate()
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    /// Digest of every setting that affects results; the output directory is
    /// excluded.
    pub fn hash(&self) -> String {
        let keyed = Self {
            out: String::new(),
            ..self.clone()
        };
        let json = serde_json::to_string(&keyed).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

/// Shortest round-trip text for a float, in exponent form when very small
/// or very large.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub const GENOME_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDims {
    pub n_joints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubcontrollerEntry {
    Rnn { dims: RnnShape, params: Vec<f64> },
    Table { dims: TableDims, params: Vec<f64> },
}

impl SubcontrollerEntry {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Rnn { .. } => "rnn",
            Self::Table { .. } => "table",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub name: String,
    /// Raw gating coefficients, one per active sub-controller.
    pub coefficients: Vec<f64>,
    /// Normalized gating row over all sub-controllers.
    pub row: Vec<f64>,
    pub epochs_used: usize,
    /// Final loss (rnn) or best training reward (table).
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenomeFile {
    pub format_version: u32,
    pub experiment: String,
    pub tau: f64,
    pub seed: u64,
    pub subcontrollers: Vec<SubcontrollerEntry>,
    pub tasks: Vec<TaskEntry>,
    pub metadata: BTreeMap<String, String>,
}

impl GenomeFile {
    pub fn from_rnn(
        repertoire: &Repertoire<RnnParams>,
        records: &[TaskRecord],
        seed: u64,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        if records.len() != repertoire.len() {
            return Err(Error::dim("task records", repertoire.len(), records.len()));
        }
        let subcontrollers = repertoire
            .subcontrollers()
            .iter()
            .map(|p| SubcontrollerEntry::Rnn {
                dims: p.shape().clone(),
                params: p.to_flat(),
            })
            .collect();
        let tasks = records
            .iter()
            .enumerate()
            .map(|(i, r)| TaskEntry {
                name: repertoire.task_names()[i].clone(),
                coefficients: repertoire.coefficients()[i].clone(),
                row: repertoire.gating().rows()[i].clone(),
                epochs_used: r.epochs_used,
                score: r.final_error,
                episode_seed: None,
            })
            .collect();
        Ok(Self {
            format_version: GENOME_FORMAT_VERSION,
            experiment: "exp1".into(),
            tau: repertoire.tau(),
            seed,
            subcontrollers,
            tasks,
            metadata,
        })
    }

    pub fn from_styles(repertoire: &StyleRepertoire, seed: u64, metadata: BTreeMap<String, String>) -> Self {
        let tables = repertoire.tables();
        let subcontrollers = tables
            .subcontrollers()
            .iter()
            .map(|t| SubcontrollerEntry::Table {
                dims: TableDims { n_joints: t.n_joints() },
                params: t.to_flat(),
            })
            .collect();
        let tasks = repertoire
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| TaskEntry {
                name: r.style.name().into(),
                coefficients: tables.coefficients()[i].clone(),
                row: tables.gating().rows()[i].clone(),
                epochs_used: r.episodes_used,
                score: r.best_reward,
                episode_seed: Some(r.best_episode_seed),
            })
            .collect();
        Self {
            format_version: GENOME_FORMAT_VERSION,
            experiment: "exp2".into(),
            tau: tables.tau(),
            seed,
            subcontrollers,
            tasks,
            metadata,
        }
    }

    /// Structural and numerical checks. Rows must be recomputable from the
    /// raw coefficients within 1e-12.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != GENOME_FORMAT_VERSION {
            return Err(Error::Genome(format!("unsupported format_version {}", self.format_version)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Genome("tau must be a positive number".into()));
        }
        let expected_kind = match self.experiment.as_str() {
            "exp1" => "rnn",
            "exp2" => "table",
            other => return Err(Error::Genome(format!("unknown experiment {other:?}"))),
        };
        let n = self.subcontrollers.len();
        if self.tasks.len() != n {
            return Err(Error::Genome(format!("{} tasks for {n} sub-controllers", self.tasks.len())));
        }
        for (i, sub) in self.subcontrollers.iter().enumerate() {
            if sub.kind() != expected_kind {
                return Err(Error::Genome(format!(
                    "sub-controller {} is {} in an {} genome",
                    i + 1,
                    sub.kind(),
                    self.experiment
                )));
            }
            self.check_params(i, sub)?;
        }
        let mut seen = Vec::new();
        for (i, task) in self.tasks.iter().enumerate() {
            let k = i + 1;
            if seen.contains(&&task.name) {
                return Err(Error::Genome(format!("task name {:?} repeats", task.name)));
            }
            seen.push(&task.name);
            if self.experiment == "exp1" {
                task.name.parse::<TargetFunction>().map_err(|e| Error::Genome(e.to_string()))?;
            } else {
                task.name.parse::<Style>().map_err(|e| Error::Genome(e.to_string()))?;
            }
            if task.coefficients.len() != k {
                return Err(Error::Genome(format!(
                    "task {k} has {} coefficients, expected {k}",
                    task.coefficients.len()
                )));
            }
            if task.row.len() != n {
                return Err(Error::Genome(format!("task {k} row has {} entries, expected {n}", task.row.len())));
            }
            let mut padded = task.coefficients.clone();
            padded.resize(n, 0.0);
            let expected = gating_normalize(&GatingCoeffs(padded), k, self.tau)
                .map_err(|e| Error::Genome(format!("task {k}: {e}")))?;
            for (s, (a, b)) in task.row.iter().zip(&expected).enumerate() {
                if !((a - b).abs() <= 1e-12) {
                    return Err(Error::Genome(format!(
                        "task {k} weight {} is {a}, recomputed {b}",
                        s + 1
                    )));
                }
            }
            validate_row(&task.row, k)?;
            if !task.score.is_finite() {
                return Err(Error::Genome(format!("task {k} score is not finite")));
            }
        }
        Ok(())
    }

    fn check_params(&self, i: usize, sub: &SubcontrollerEntry) -> Result<()> {
        let (expected, params) = match sub {
            SubcontrollerEntry::Rnn { dims, params } => {
                dims.validate().map_err(|e| Error::Genome(format!("sub-controller {}: {e}", i + 1)))?;
                (dims.param_count(), params)
            }
            SubcontrollerEntry::Table { dims, params } => (2 * dims.n_joints, params),
        };
        if params.len() != expected {
            return Err(Error::Genome(format!(
                "sub-controller {} has {} parameters, expected {expected}",
                i + 1,
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Genome(format!("sub-controller {} has non-finite parameters", i + 1)));
        }
        Ok(())
    }

    pub fn to_rnn_repertoire(&self) -> Result<Repertoire<RnnParams>> {
        self.validate()?;
        if self.experiment != "exp1" {
            return Err(Error::Genome("not an rnn genome".into()));
        }
        let mut rep = Repertoire::new(self.subcontrollers.len(), self.tau)?;
        for (sub, task) in self.subcontrollers.iter().zip(&self.tasks) {
            let SubcontrollerEntry::Rnn { dims, params } = sub else {
                unreachable!("validated kind")
            };
            rep.push(task.name.clone(), RnnParams::from_flat(dims, params)?, task.coefficients.clone())?;
        }
        Ok(rep)
    }

    pub fn to_style_repertoire(&self) -> Result<StyleRepertoire> {
        self.validate()?;
        if self.experiment != "exp2" {
            return Err(Error::Genome("not a table genome".into()));
        }
        let mut rep = Repertoire::new(self.subcontrollers.len(), self.tau)?;
        let mut records = Vec::new();
        for (sub, task) in self.subcontrollers.iter().zip(&self.tasks) {
            let SubcontrollerEntry::Table { dims, params } = sub else {
                unreachable!("validated kind")
            };
            rep.push(task.name.clone(), TableParams::from_flat(&dims.n_joints, params)?, task.coefficients.clone())?;
            records.push(StyleRecord {
                style: task.name.parse()?,
                episodes_used: task.epochs_used,
                best_reward: task.score,
                best_episode_seed: task
                    .episode_seed
                    .ok_or_else(|| Error::Genome(format!("task {:?} lacks episode_seed", task.name)))?,
            });
        }
        StyleRepertoire::from_parts(rep, records)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `key=value` pairs written as leading `#` lines of every CSV file.
pub type Metadata = Vec<(String, String)>;

pub fn run_metadata(seed: u64, config_hash: &str) -> Metadata {
    vec![
        ("seed".into(), seed.to_string()),
        ("config_hash".into(), config_hash.to_string()),
    ]
}

/// A row type with a fixed CSV header.
pub trait CsvRecord: Sized {
    const HEADER: &'static [&'static str];
    fn to_fields(&self) -> Vec<String>;
    fn from_fields(fields: &[&str]) -> std::result::Result<Self, String>;
}

fn field<T: FromStr>(fields: &[&str], i: usize, name: &str) -> std::result::Result<T, String>
where
    T::Err: Display,
{
    fields[i].parse().map_err(|e| format!("column {name}: {e}"))
}

pub fn write_csv<W: Write>(mut w: W, metadata: &Metadata, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")?;
    }
    let mut wtr = csv::WriterBuilder::new().from_writer(w);
    let csv_err = |e: csv::Error| Error::Csv { line: 0, message: e.to_string() };
    wtr.write_record(header).map_err(csv_err)?;
    for row in rows {
        wtr.write_record(row).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_records<R: CsvRecord, W: Write>(w: W, metadata: &Metadata, records: &[R]) -> Result<()> {
    let header: Vec<String> = R::HEADER.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = records.iter().map(R::to_fields).collect();
    write_csv(w, metadata, &header, &rows)
}

/// Reads leading `# key=value` lines, checks the header and parses every row.
pub fn read_records<R: CsvRecord, Rd: Read>(mut r: Rd) -> Result<(Metadata, Vec<R>)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut metadata = Vec::new();
    for line in text.lines() {
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.trim().split_once('=') {
            metadata.push((k.to_string(), v.to_string()));
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut header_seen = false;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = rec.iter().collect();
        if !header_seen {
            if fields != R::HEADER {
                return Err(Error::Csv {
                    line,
                    message: format!("expected header {:?}, found {:?}", R::HEADER.join(","), fields.join(",")),
                });
            }
            header_seen = true;
            continue;
        }
        if fields.len() != R::HEADER.len() {
            return Err(Error::Csv {
                line,
                message: format!("expected {} fields, found {}", R::HEADER.len(), fields.len()),
            });
        }
        out.push(R::from_fields(&fields).map_err(|message| Error::Csv { line, message })?);
    }
    if !header_seen {
        return Err(Error::Csv { line: 1, message: "missing header".into() });
    }
    Ok((metadata, out))
}

pub fn write_records_file<R: CsvRecord>(path: &Path, metadata: &Metadata, records: &[R]) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_records(f, metadata, records)
}

pub fn read_records_file<R: CsvRecord>(path: &Path) -> Result<(Metadata, Vec<R>)> {
    read_records(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp1Row {
    pub task: TargetFunction,
    pub trial: usize,
    pub mode: TrainingMode,
    pub epochs_used: usize,
    pub final_error: f64,
}

impl From<&TaskRecord> for Exp1Row {
    fn from(r: &TaskRecord) -> Self {
        Self {
            task: r.task,
            trial: r.trial,
            mode: r.mode,
            epochs_used: r.epochs_used,
            final_error: r.final_error,
        }
    }
}

impl CsvRecord for Exp1Row {
    const HEADER: &'static [&'static str] = &["task", "trial", "mode", "epochs_used", "final_error"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.task.to_string(),
            self.trial.to_string(),
            self.mode.name().to_string(),
            self.epochs_used.to_string(),
            fmt_f64(self.final_error),
        ]
    }

    fn from_fields(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            task: field(f, 0, "task")?,
            trial: field(f, 1, "trial")?,
            mode: field(f, 2, "mode")?,
            epochs_used: field(f, 3, "epochs_used")?,
            final_error: field(f, 4, "final_error")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp2Row {
    pub style: Style,
    pub episodes_used: usize,
    pub best_reward: f64,
    pub d: f64,
    pub s: f64,
    pub heading_change: f64,
}

impl CsvRecord for Exp2Row {
    const HEADER: &'static [&'static str] = &["style", "episodes_used", "best_reward", "d", "s", "heading_change"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.style.to_string(),
            self.episodes_used.to_string(),
            fmt_f64(self.best_reward),
            fmt_f64(self.d),
            fmt_f64(self.s),
            fmt_f64(self.heading_change),
        ]
    }

    fn from_fields(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            style: field(f, 0, "style")?,
            episodes_used: field(f, 1, "episodes_used")?,
            best_reward: field(f, 2, "best_reward")?,
            d: field(f, 3, "d")?,
            s: field(f, 4, "s")?,
            heading_change: field(f, 5, "heading_change")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatingRow {
    pub task: String,
    /// One-based sub-controller index.
    pub subcontroller: usize,
    pub weight: f64,
}

/// Flattens gating rows, one line per (task, sub-controller).
pub fn gating_rows(names: &[String], rows: &[Vec<f64>]) -> Vec<GatingRow> {
    names
        .iter()
        .zip(rows)
        .flat_map(|(name, row)| {
            row.iter().enumerate().map(move |(s, &w)| GatingRow {
                task: name.clone(),
                subcontroller: s + 1,
                weight: w,
            })
        })
        .collect()
}

impl CsvRecord for GatingRow {
    const HEADER: &'static [&'static str] = &["task", "subcontroller", "weight"];

    fn to_fields(&self) -> Vec<String> {
        vec![self.task.clone(), self.subcontroller.to_string(), fmt_f64(self.weight)]
    }

    fn from_fields(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            task: f[0].to_string(),
            subcontroller: field(f, 1, "subcontroller")?,
            weight: field(f, 2, "weight")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub epoch: usize,
    pub best_cost: f64,
}

impl CsvRecord for CostRow {
    const HEADER: &'static [&'static str] = &["epoch", "best_cost"];

    fn to_fields(&self) -> Vec<String> {
        vec![self.epoch.to_string(), fmt_f64(self.best_cost)]
    }

    fn from_fields(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            epoch: field(f, 0, "epoch")?,
            best_cost: field(f, 1, "best_cost")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub seed: u64,
    pub generations: usize,
    pub best_cost: f64,
}

impl CsvRecord for BenchRow {
    const HEADER: &'static [&'static str] = &["seed", "generations", "best_cost"];

    fn to_fields(&self) -> Vec<String> {
        vec![self.seed.to_string(), self.generations.to_string(), fmt_f64(self.best_cost)]
    }

    fn from_fields(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            seed: field(f, 0, "seed")?,
            generations: field(f, 1, "generations")?,
            best_cost: field(f, 2, "best_cost")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub task: TargetFunction,
    pub mode: TrainingMode,
    pub trials: usize,
    pub median_epochs: f64,
    pub mean_epochs: f64,
    pub min_epochs: usize,
    pub max_epochs: usize,
    pub mean_final_error: f64,
}

impl CsvRecord for SummaryRow {
    const HEADER: &'static [&'static str] = &[
        "task",
        "mode",
        "trials",
        "median_epochs",
        "mean_epochs",
        "min_epochs",
        "max_epochs",
        "mean_final_error",
    ];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.task.to_string(),
            self.mode.name().to_string(),
            self.trials.to_string(),
            fmt_f64(self.median_epochs),
            fmt_f64(self.mean_epochs),
            self.min_epochs.to_string(),
            self.max_epochs.to_string(),
            fmt_f64(self.mean_final_error),
        ]
    }

    fn from_fields(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            task: field(f, 0, "task")?,
            mode: field(f, 1, "mode")?,
            trials: field(f, 2, "trials")?,
            median_epochs: field(f, 3, "median_epochs")?,
            mean_epochs: field(f, 4, "mean_epochs")?,
            min_epochs: field(f, 5, "min_epochs")?,
            max_epochs: field(f, 6, "max_epochs")?,
            mean_final_error: field(f, 7, "mean_final_error")?,
        })
    }
}

pub fn trajectory_header(n_joints: usize) -> Vec<String> {
    let mut h: Vec<String> = ["step", "t", "head_x", "head_y", "com_x", "com_y", "heading"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=n_joints).map(|i| format!("phi_{i}")));
    h
}

pub fn write_trajectory<W: Write>(w: W, metadata: &Metadata, n_joints: usize, points: &[TrajectoryPoint]) -> Result<()> {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let mut r = vec![
                p.step.to_string(),
                fmt_f64(p.t),
                fmt_f64(p.head[0]),
                fmt_f64(p.head[1]),
                fmt_f64(p.com[0]),
                fmt_f64(p.com[1]),
                fmt_f64(p.heading),
            ];
            r.extend(p.joints.iter().copied().map(fmt_f64));
            r
        })
        .collect();
    write_csv(w, metadata, &trajectory_header(n_joints), &rows)
}

pub fn cpg_trace_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("theta_{i}")));
    h.extend((1..=n).map(|i| format!("r_{i}")));
    h.extend((1..=n).map(|i| format!("x_{i}")));
    h
}
