//! Periodic-function reproduction with recurrent sub-controllers.
//!
//! A composed controller is driven by `cos(x_t)` on a uniform phase grid and
//! must reproduce a target function of `x_t`. Training runs either from
//! scratch (one sub-controller) or incrementally on top of sub-controllers
//! already trained on the basis functions.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controller::{
    compose, genotype_decode, logistic, FlatParams, Genotype, GenotypeLayout, Repertoire, RnnParams, RnnShape,
    DEFAULT_TAU,
};
use crate::error::{Error, Result};
use crate::optimizer::{minimize, GaussianEs, OptConfig, OptResult, Parallelism};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetFunction {
    B1,
    B2,
    B3,
    T1,
    T2,
    T3,
    T4,
}

impl TargetFunction {
    pub const ALL: [TargetFunction; 7] = [Self::B1, Self::B2, Self::B3, Self::T1, Self::T2, Self::T3, Self::T4];
    pub const BASIS: [TargetFunction; 3] = [Self::B1, Self::B2, Self::B3];
    pub const TARGETS: [TargetFunction; 4] = [Self::T1, Self::T2, Self::T3, Self::T4];

    pub fn name(self) -> &'static str {
        match self {
            Self::B1 => "B1",
            Self::B2 => "B2",
            Self::B3 => "B3",
            Self::T1 => "T1",
            Self::T2 => "T2",
            Self::T3 => "T3",
            Self::T4 => "T4",
        }
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown target function {s:?}")))
    }
}

/// Reading of the `sin x³` target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T2Form {
    /// `sin(x³)`
    #[default]
    SinOfCube,
    /// `sin³(x)`
    CubeOfSin,
}

pub fn eval_target(f: TargetFunction, x: f64) -> f64 {
    eval_target_with(f, x, T2Form::default())
}

pub fn eval_target_with(f: TargetFunction, x: f64, t2: T2Form) -> f64 {
    match f {
        TargetFunction::B1 => x.sin(),
        TargetFunction::B2 => (2.0 * x).sin(),
        TargetFunction::B3 => (3.0 * x).sin(),
        TargetFunction::T1 => x.cos() / 2.0 + (2.0 * x).sin() / 2.0,
        TargetFunction::T2 => match t2 {
            T2Form::SinOfCube => (x * x * x).sin(),
            T2Form::CubeOfSin => x.sin().powi(3),
        },
        TargetFunction::T3 => logistic((x + PI / 6.0).sin() * 20.0) - 0.5,
        TargetFunction::T4 => {
            8.0 / (PI * PI) * (x.sin() - (3.0 * x).sin() / 9.0 + (5.0 * x).sin() / 25.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub samples_per_period: usize,
    pub n_periods: usize,
    /// Leading periods excluded from the loss.
    pub washout_periods: usize,
    pub t2_form: T2Form,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            samples_per_period: 100,
            n_periods: 2,
            washout_periods: 1,
            t2_form: T2Form::SinOfCube,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_period < 2 {
            return Err(Error::Config("samples_per_period must be >= 2".into()));
        }
        if self.washout_periods >= self.n_periods {
            return Err(Error::Config("washout_periods must be < n_periods".into()));
        }
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.samples_per_period * self.n_periods
    }

    pub fn washout_samples(&self) -> usize {
        self.samples_per_period * self.washout_periods
    }

    /// `x_t = 2π t / samples_per_period`.
    pub fn phases(&self) -> Vec<f64> {
        (0..self.total_samples())
            .map(|t| TAU * t as f64 / self.samples_per_period as f64)
            .collect()
    }

    pub fn drive(&self) -> Vec<f64> {
        self.phases().into_iter().map(f64::cos).collect()
    }

    pub fn targets(&self, f: TargetFunction) -> Vec<f64> {
        self.phases()
            .into_iter()
            .map(|x| eval_target_with(f, x, self.t2_form))
            .collect()
    }
}

/// A controller mapping an input sequence to an output sequence from a fixed
/// initial state.
pub trait SequenceController {
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn rollout(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>>;
}

impl SequenceController for RnnParams {
    fn n_inputs(&self) -> usize {
        RnnParams::n_inputs(self)
    }

    fn n_outputs(&self) -> usize {
        RnnParams::n_outputs(self)
    }

    fn rollout(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        RnnParams::rollout(self, inputs)
    }
}

/// Recurrent sub-controllers mixed by one gating row.
#[derive(Debug, Clone, Copy)]
pub struct CompositeRnn<'a> {
    pub subcontrollers: &'a [RnnParams],
    pub weights: &'a [f64],
}

impl<'a> CompositeRnn<'a> {
    /// Task `k` of a repertoire: its stored row over the sub-controllers.
    pub fn for_task(repertoire: &'a Repertoire<RnnParams>, k: usize) -> Result<Self> {
        let weights = repertoire.row(k).ok_or(Error::TaskIndex {
            k,
            n: repertoire.len(),
        })?;
        Ok(Self {
            subcontrollers: repertoire.subcontrollers(),
            weights,
        })
    }
}

impl SequenceController for CompositeRnn<'_> {
    fn n_inputs(&self) -> usize {
        self.subcontrollers.first().map_or(0, |s| s.n_inputs())
    }

    fn n_outputs(&self) -> usize {
        self.subcontrollers.first().map_or(0, |s| s.n_outputs())
    }

    fn rollout(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let traces: Vec<Option<Vec<Vec<f64>>>> = self
            .weights
            .iter()
            .enumerate()
            .map(|(s, &w)| {
                if w == 0.0 {
                    return Ok(None);
                }
                let sub = self.subcontrollers.get(s).ok_or_else(|| {
                    Error::InvalidParameter(format!("gating row references missing sub-controller {}", s + 1))
                })?;
                sub.rollout(inputs).map(Some)
            })
            .collect::<Result<_>>()?;
        (0..inputs.len())
            .map(|t| {
                let contributions: Vec<Option<&[f64]>> = traces
                    .iter()
                    .map(|tr| tr.as_ref().map(|tr| tr[t].as_slice()))
                    .collect();
                compose(self.weights, &contributions)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// Sum of squared errors over the non-washout samples.
    pub loss: f64,
    /// Controller output at every grid point, washout included.
    pub trace: Vec<f64>,
}

fn squared_error(trace: &[f64], targets: &[f64], washout: usize) -> f64 {
    trace[washout..]
        .iter()
        .zip(&targets[washout..])
        .map(|(o, y)| (o - y) * (o - y))
        .sum()
}

/// Drives the controller with `cos(x_t)` and scores it against `f`.
pub fn run_episode(controller: &dyn SequenceController, f: TargetFunction, cfg: &EpisodeConfig) -> Result<EpisodeResult> {
    cfg.validate()?;
    if controller.n_inputs() != 1 {
        return Err(Error::dim("controller inputs", 1, controller.n_inputs()));
    }
    if controller.n_outputs() != 1 {
        return Err(Error::dim("controller outputs", 1, controller.n_outputs()));
    }
    let inputs: Vec<Vec<f64>> = cfg.drive().into_iter().map(|x| vec![x]).collect();
    let trace: Vec<f64> = controller.rollout(&inputs)?.into_iter().map(|o| o[0]).collect();
    let loss = squared_error(&trace, &cfg.targets(f), cfg.washout_samples());
    Ok(EpisodeResult { loss, trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    /// The target is the only sub-controller.
    Scratch,
    /// Trained on top of the basis functions (and earlier targets).
    Pretrained,
}

impl TrainingMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Scratch => "scratch",
            Self::Pretrained => "pretrained",
        }
    }
}

impl FromStr for TrainingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scratch" => Ok(Self::Scratch),
            "pretrained" => Ok(Self::Pretrained),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub task: TargetFunction,
    pub trial: usize,
    pub mode: TrainingMode,
    pub epochs_used: usize,
    pub final_error: f64,
    pub gating_row: Vec<f64>,
}

/// Result of training one task: the new sub-controller, its raw gating
/// coefficients and the optimizer trace.
#[derive(Debug, Clone)]
pub struct TrainedTask {
    pub subcontroller: RnnParams,
    pub coefficients: Vec<f64>,
    pub gating_row: Vec<f64>,
    pub optimization: OptResult,
}

/// Trains a new recurrent sub-controller for `target` as task
/// `prior.len() + 1`, together with that task's gating coefficients. The
/// prior repertoire is only read.
pub fn train_task(
    target: TargetFunction,
    prior: &Repertoire<RnnParams>,
    shape: &RnnShape,
    cfg: &EpisodeConfig,
    opt: &OptConfig,
    parallelism: Parallelism,
) -> Result<TrainedTask> {
    cfg.validate()?;
    shape.validate()?;
    if shape.n_inputs != 1 || shape.output_indices.len() != 1 {
        return Err(Error::InvalidParameter(
            "periodic tasks need one input and one output".into(),
        ));
    }
    let k = prior.len() + 1;
    if k > prior.capacity() {
        return Err(Error::TaskIndex { k, n: prior.capacity() });
    }
    let drive = cfg.drive();
    let targets = cfg.targets(target);
    let washout = cfg.washout_samples();

    // Frozen sub-controllers see the same drive every episode.
    let prior_traces: Vec<Vec<f64>> = prior
        .subcontrollers()
        .iter()
        .map(|sub| {
            let mut out = Vec::new();
            sub.rollout_scalar(&drive, &mut out);
            out
        })
        .collect();

    let layout = GenotypeLayout::for_task::<RnnParams>(shape, k);
    let cost = |values: &[f64], _generation: usize| -> f64 {
        let Ok(row) = prior.gating().row_for(&values[layout.sub_params..]) else {
            return f64::INFINITY;
        };
        let Ok(sub) = RnnParams::from_flat(shape, &values[..layout.sub_params]) else {
            return f64::INFINITY;
        };
        let mut own = Vec::with_capacity(drive.len());
        sub.rollout_scalar(&drive, &mut own);
        let mut trace = vec![0.0; drive.len()];
        for (s, &w) in row.iter().enumerate().take(k) {
            if w == 0.0 {
                continue;
            }
            let o = if s + 1 == k { &own } else { &prior_traces[s] };
            for (acc, x) in trace.iter_mut().zip(o) {
                *acc += w * x;
            }
        }
        squared_error(&trace, &targets, washout)
    };

    let result = minimize(cost, layout.len(), opt, &mut GaussianEs::new(), parallelism)?;
    let genotype = Genotype::from_values(result.best_genotype.clone(), layout)?;
    let (subcontroller, coefficients) = genotype_decode::<RnnParams>(&genotype, shape)?;
    let gating_row = prior.gating().row_for(&coefficients)?;
    Ok(TrainedTask {
        subcontroller,
        coefficients,
        gating_row,
        optimization: result,
    })
}

/// Re-scores task `k` of a repertoire with its stored gating row.
pub fn evaluate_task(
    repertoire: &Repertoire<RnnParams>,
    k: usize,
    target: TargetFunction,
    cfg: &EpisodeConfig,
) -> Result<f64> {
    let controller = CompositeRnn::for_task(repertoire, k)?;
    Ok(run_episode(&controller, target, cfg)?.loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp1Config {
    pub episode: EpisodeConfig,
    pub optimizer: OptConfig,
    pub shape: RnnShape,
    pub tau: f64,
    pub basis: Vec<TargetFunction>,
    pub targets: Vec<TargetFunction>,
}

impl Default for Exp1Config {
    fn default() -> Self {
        Self {
            episode: EpisodeConfig::default(),
            optimizer: OptConfig {
                target_cost: 0.9,
                max_epochs: 20_000,
                ..OptConfig::default()
            },
            shape: RnnShape::default(),
            tau: DEFAULT_TAU,
            basis: TargetFunction::BASIS.to_vec(),
            targets: TargetFunction::TARGETS.to_vec(),
        }
    }
}

impl Exp1Config {
    pub fn validate(&self) -> Result<()> {
        self.episode.validate()?;
        self.optimizer.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.shape.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config("tau must be > 0".into()));
        }
        let mut all = self.basis.clone();
        all.extend(&self.targets);
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != all.len() {
            return Err(Error::Config("schedule repeats a function".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("no target functions".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Vec<TargetFunction> {
        self.basis.iter().chain(&self.targets).copied().collect()
    }
}

/// One trial of the incremental schedule.
#[derive(Debug, Clone)]
pub struct Exp1Trial {
    pub trial: usize,
    pub seed: u64,
    pub repertoire: Repertoire<RnnParams>,
    /// Loss of each scheduled task right after it finished training.
    pub losses_at_completion: Vec<f64>,
    pub records: Vec<TaskRecord>,
}

#[derive(Debug, Clone)]
pub struct Exp1Report {
    pub seed: u64,
    pub trials: Vec<Exp1Trial>,
}

impl Exp1Report {
    /// All records: pretrained schedule first, then scratch, per trial.
    pub fn records(&self) -> Vec<TaskRecord> {
        self.trials.iter().flat_map(|t| t.records.iter().cloned()).collect()
    }
}

const MODE_SCRATCH: u64 = 1;
const MODE_PRETRAINED: u64 = 2;

fn task_seed(seed: u64, trial: usize, mode: u64, task: TargetFunction) -> u64 {
    derive_seed(seed, &[trial as u64, mode, task as u64])
}

/// Runs one trial: the full incremental schedule, then every target from
/// scratch.
pub fn run_trial(cfg: &Exp1Config, seed: u64, trial: usize, parallelism: Parallelism) -> Result<Exp1Trial> {
    cfg.validate()?;
    let schedule = cfg.schedule();
    let mut repertoire = Repertoire::new(schedule.len(), cfg.tau)?;
    let mut records = Vec::new();
    let mut losses = Vec::new();

    for &task in &schedule {
        let opt = OptConfig {
            rng_seed: task_seed(seed, trial, MODE_PRETRAINED, task),
            ..cfg.optimizer.clone()
        };
        let trained = train_task(task, &repertoire, &cfg.shape, &cfg.episode, &opt, parallelism)?;
        let row = repertoire
            .push(task.name(), trained.subcontroller, trained.coefficients)?
            .to_vec();
        losses.push(trained.optimization.best_cost);
        records.push(TaskRecord {
            task,
            trial,
            mode: TrainingMode::Pretrained,
            epochs_used: trained.optimization.epochs_used,
            final_error: trained.optimization.best_cost,
            gating_row: row,
        });
    }

    for &task in &cfg.targets {
        let opt = OptConfig {
            rng_seed: task_seed(seed, trial, MODE_SCRATCH, task),
            ..cfg.optimizer.clone()
        };
        let empty = Repertoire::new(1, cfg.tau)?;
        let trained = train_task(task, &empty, &cfg.shape, &cfg.episode, &opt, parallelism)?;
        records.push(TaskRecord {
            task,
            trial,
            mode: TrainingMode::Scratch,
            epochs_used: trained.optimization.epochs_used,
            final_error: trained.optimization.best_cost,
            gating_row: trained.gating_row,
        });
    }

    Ok(Exp1Trial {
        trial,
        seed,
        repertoire,
        losses_at_completion: losses,
        records,
    })
}

pub fn experiment1(cfg: &Exp1Config, seed: u64, trials: usize, parallelism: Parallelism) -> Result<Exp1Report> {
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let trials = (0..trials)
        .map(|t| run_trial(cfg, seed, t, parallelism))
        .collect::<Result<_>>()?;
    Ok(Exp1Report { seed, trials })
}

/// Per-target, per-mode statistics of `epochs_used`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSummary {
    pub task: TargetFunction,
    pub mode: TrainingMode,
    pub trials: usize,
    pub median_epochs: f64,
    pub mean_epochs: f64,
    pub min_epochs: usize,
    pub max_epochs: usize,
    pub mean_final_error: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn summarize(records: &[TaskRecord]) -> Vec<EpochSummary> {
    let mut out = Vec::new();
    for task in TargetFunction::ALL {
        for mode in [TrainingMode::Scratch, TrainingMode::Pretrained] {
            let group: Vec<&TaskRecord> = records.iter().filter(|r| r.task == task && r.mode == mode).collect();
            if group.is_empty() {
                continue;
            }
            let mut epochs: Vec<f64> = group.iter().map(|r| r.epochs_used as f64).collect();
            let n = group.len();
            out.push(EpochSummary {
                task,
                mode,
                trials: n,
                mean_epochs: epochs.iter().sum::<f64>() / n as f64,
                median_epochs: median(&mut epochs),
                min_epochs: group.iter().map(|r| r.epochs_used).min().unwrap_or(0),
                max_epochs: group.iter().map(|r| r.epochs_used).max().unwrap_or(0),
                mean_final_error: group.iter().map(|r| r.final_error).sum::<f64>() / n as f64,
            });
        }
    }
    out
}
