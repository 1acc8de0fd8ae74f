//! Incremental training of snake locomotion styles.
//!
//! Each style adds one CPG parameter table to the repertoire together with a
//! gating row over all tables trained so far. Tables are decoded before they
//! are mixed, so composed amplitudes stay inside `(0, 1)`.

use serde::{Deserialize, Serialize};

use crate::controller::{
    compose, genotype_decode, FlatParams, Genotype, GenotypeLayout, Repertoire, TableParams, DEFAULT_TAU,
};
use crate::cpg::CpgState;
use crate::error::{Error, Result};
use crate::optimizer::{minimize, EpochAccounting, GaussianEs, OptConfig, OptResult, Parallelism};
use crate::seeding::{derive_seed, rng_from};
use crate::snake::{
    initial_cpg_state, reward, run_episode, EpisodeOutcome, JointTable, LocomotionConfig, LocomotionSim, Style,
    TrajectoryPoint,
};

/// Mixes decoded tables with one gating row. Tables with zero weight are
/// never decoded.
pub fn compose_tables(row: &[f64], tables: &[TableParams], offset_clamp: f64) -> Result<JointTable> {
    let decoded: Vec<Option<(Vec<f64>, Vec<f64>)>> = row
        .iter()
        .enumerate()
        .map(|(s, &w)| {
            if w == 0.0 {
                return Ok(None);
            }
            tables
                .get(s)
                .map(|t| Some(t.decode(offset_clamp)))
                .ok_or_else(|| Error::dim("tables", row.len(), tables.len()))
        })
        .collect::<Result<_>>()?;
    mix_decoded(row, &decoded)
}

fn mix_decoded(row: &[f64], decoded: &[Option<(Vec<f64>, Vec<f64>)>]) -> Result<JointTable> {
    let amps: Vec<Option<&[f64]>> = decoded.iter().map(|d| d.as_ref().map(|(a, _)| a.as_slice())).collect();
    let offs: Vec<Option<&[f64]>> = decoded.iter().map(|d| d.as_ref().map(|(_, x)| x.as_slice())).collect();
    Ok(JointTable {
        amplitudes: compose(row, &amps)?,
        offsets: compose(row, &offs)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StyleTask {
    pub style: Style,
    /// One-based position in the training order.
    pub k: usize,
    pub episode_budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StyleRecord {
    pub style: Style,
    pub episodes_used: usize,
    pub best_reward: f64,
    /// Episode seed on which `best_reward` was obtained.
    pub best_episode_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StyleRepertoire {
    tables: Repertoire<TableParams>,
    records: Vec<StyleRecord>,
}

impl StyleRepertoire {
    pub fn new(capacity: usize, tau: f64) -> Result<Self> {
        Ok(Self {
            tables: Repertoire::new(capacity, tau)?,
            records: Vec::new(),
        })
    }

    pub fn from_parts(tables: Repertoire<TableParams>, records: Vec<StyleRecord>) -> Result<Self> {
        if records.len() != tables.len() {
            return Err(Error::dim("style records", tables.len(), records.len()));
        }
        for (k, r) in records.iter().enumerate() {
            if tables.task_names()[k] != r.style.name() {
                return Err(Error::Genome(format!(
                    "task {} is {:?} but its record is for {}",
                    k + 1,
                    tables.task_names()[k],
                    r.style
                )));
            }
        }
        Ok(Self { tables, records })
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn tables(&self) -> &Repertoire<TableParams> {
        &self.tables
    }

    pub fn records(&self) -> &[StyleRecord] {
        &self.records
    }

    pub fn styles(&self) -> Vec<Style> {
        self.records.iter().map(|r| r.style).collect()
    }

    /// One-based task index of a trained style.
    pub fn style_index(&self, style: Style) -> Option<usize> {
        self.tables.task_index(style.name())
    }

    pub fn row(&self, k: usize) -> Option<&[f64]> {
        self.tables.row(k)
    }

    /// Composed joint table of task `k`, using its stored row verbatim.
    pub fn joint_table(&self, k: usize, offset_clamp: f64) -> Result<JointTable> {
        let row = self.row(k).ok_or(Error::TaskIndex { k, n: self.len() })?;
        compose_tables(row, self.tables.subcontrollers(), offset_clamp)
    }

    pub fn style_table(&self, style: Style, offset_clamp: f64) -> Result<JointTable> {
        let k = self
            .style_index(style)
            .ok_or_else(|| Error::InvalidParameter(format!("style {style} is not trained")))?;
        self.joint_table(k, offset_clamp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp2Config {
    pub locomotion: LocomotionConfig,
    /// `max_epochs` is the per-style episode budget when accounting is by
    /// evaluations.
    pub optimizer: OptConfig,
    pub tau: f64,
    pub order: Vec<Style>,
    /// Evaluation rollouts per style after training.
    pub eval_episodes: usize,
}

impl Default for Exp2Config {
    fn default() -> Self {
        Self {
            locomotion: LocomotionConfig::default(),
            optimizer: OptConfig {
                max_epochs: 600,
                accounting: EpochAccounting::Evaluations,
                ..OptConfig::default()
            },
            tau: DEFAULT_TAU,
            order: Style::ALL.to_vec(),
            eval_episodes: 5,
        }
    }
}

impl Exp2Config {
    pub fn validate(&self) -> Result<()> {
        self.locomotion.validate()?;
        self.optimizer.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config("tau must be > 0".into()));
        }
        if self.order.is_empty() {
            return Err(Error::Config("style order is empty".into()));
        }
        for (i, s) in self.order.iter().enumerate() {
            if self.order[..i].contains(s) {
                return Err(Error::Config(format!("style {s} is listed twice")));
            }
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be >= 1".into()));
        }
        Ok(())
    }

    pub fn tasks(&self) -> Vec<StyleTask> {
        self.order
            .iter()
            .enumerate()
            .map(|(i, &style)| StyleTask {
                style,
                k: i + 1,
                episode_budget: self.optimizer.max_epochs,
            })
            .collect()
    }
}

const TRAIN_STREAM: u64 = 0x5452_4149;
const EVAL_STREAM: u64 = 0x4556_414c;
const RANDOM_STREAM: u64 = 0x5241_4e44;

/// Episode seed shared by every candidate of one generation.
pub fn training_episode_seed(seed: u64, k: usize, generation: usize) -> u64 {
    derive_seed(seed, &[TRAIN_STREAM, k as u64, generation as u64])
}

pub fn evaluation_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, &[EVAL_STREAM, i as u64])
}

#[derive(Debug, Clone)]
pub struct TrainedStyle {
    pub repertoire: StyleRepertoire,
    pub optimization: OptResult,
}

/// Trains `task` on top of `prior` and returns the extended repertoire. The
/// optimizer maximizes episode reward; aborted episodes keep their partial
/// reward.
pub fn train_style(
    task: StyleTask,
    prior: &StyleRepertoire,
    cfg: &Exp2Config,
    seed: u64,
    parallelism: Parallelism,
) -> Result<TrainedStyle> {
    cfg.validate()?;
    if task.k != prior.len() + 1 {
        return Err(Error::TaskIndex { k: task.k, n: prior.len() });
    }
    if prior.style_index(task.style).is_some() {
        return Err(Error::InvalidParameter(format!("style {} is already trained", task.style)));
    }
    let loco = &cfg.locomotion;
    let n_joints = loco.snake.n_joints();
    let clamp = loco.offset_clamp;
    let opt = OptConfig {
        max_epochs: task.episode_budget,
        rng_seed: derive_seed(seed, &[TRAIN_STREAM, task.k as u64]),
        ..cfg.optimizer.clone()
    };

    let prior_decoded: Vec<(Vec<f64>, Vec<f64>)> =
        prior.tables.subcontrollers().iter().map(|t| t.decode(clamp)).collect();
    let layout = GenotypeLayout::for_task::<TableParams>(&n_joints, task.k);

    let candidate_table = |values: &[f64]| -> Result<JointTable> {
        let row = prior.tables.gating().row_for(&values[layout.sub_params..])?;
        let own = TableParams::from_flat(&n_joints, &values[..layout.sub_params])?.decode(clamp);
        let decoded: Vec<Option<(Vec<f64>, Vec<f64>)>> = row
            .iter()
            .enumerate()
            .map(|(s, &w)| {
                if w == 0.0 {
                    None
                } else if s + 1 == task.k {
                    Some(own.clone())
                } else {
                    Some(prior_decoded[s].clone())
                }
            })
            .collect();
        mix_decoded(&row, &decoded)
    };
    let cost = |values: &[f64], generation: usize| -> f64 {
        let Ok(table) = candidate_table(values) else {
            return f64::INFINITY;
        };
        let episode_seed = training_episode_seed(seed, task.k, generation);
        match run_episode(&table, task.style, loco, episode_seed) {
            Ok(outcome) => -reward(&outcome, task.style, loco),
            Err(_) => f64::INFINITY,
        }
    };

    let result = minimize(cost, layout.len(), &opt, &mut GaussianEs::new(), parallelism)?;
    let genotype = Genotype::from_values(result.best_genotype.clone(), layout)?;
    let (table, coefficients) = genotype_decode::<TableParams>(&genotype, &n_joints)?;
    let mut repertoire = prior.clone();
    repertoire.tables.push(task.style.name(), table, coefficients)?;
    repertoire.records.push(StyleRecord {
        style: task.style,
        episodes_used: result.evaluations,
        best_reward: -result.best_cost,
        best_episode_seed: training_episode_seed(seed, task.k, result.best_generation),
    });
    Ok(TrainedStyle {
        repertoire,
        optimization: result,
    })
}

/// Replays the episode on which a style obtained its best training reward.
pub fn replay_best(repertoire: &StyleRepertoire, k: usize, loco: &LocomotionConfig) -> Result<f64> {
    let record = repertoire
        .records
        .get(k.wrapping_sub(1))
        .ok_or(Error::TaskIndex { k, n: repertoire.len() })?;
    let table = repertoire.joint_table(k, loco.offset_clamp)?;
    let outcome = run_episode(&table, record.style, loco, record.best_episode_seed)?;
    Ok(reward(&outcome, record.style, loco))
}

#[derive(Debug, Clone)]
pub struct StyleEvaluation {
    pub style: Style,
    pub seed: u64,
    pub reward: f64,
    pub outcome: EpisodeOutcome,
}

#[derive(Debug, Clone)]
pub struct Exp2Report {
    pub seed: u64,
    pub repertoire: StyleRepertoire,
    /// Replayed best-episode reward of every style right after it finished
    /// training.
    pub rewards_at_completion: Vec<f64>,
    /// `eval_episodes` rollouts per style, in training order.
    pub evaluations: Vec<StyleEvaluation>,
}

impl Exp2Report {
    pub fn evaluations_for(&self, style: Style) -> impl Iterator<Item = &StyleEvaluation> {
        self.evaluations.iter().filter(move |e| e.style == style)
    }
}

pub fn evaluate_styles(repertoire: &StyleRepertoire, cfg: &Exp2Config, seed: u64) -> Result<Vec<StyleEvaluation>> {
    let loco = &cfg.locomotion;
    let mut out = Vec::new();
    for (i, style) in repertoire.styles().into_iter().enumerate() {
        let table = repertoire.joint_table(i + 1, loco.offset_clamp)?;
        for e in 0..cfg.eval_episodes {
            let episode_seed = evaluation_seed(seed, e);
            let outcome = run_episode(&table, style, loco, episode_seed)?;
            out.push(StyleEvaluation {
                style,
                seed: episode_seed,
                reward: reward(&outcome, style, loco),
                outcome,
            });
        }
    }
    Ok(out)
}

pub fn experiment2(cfg: &Exp2Config, seed: u64, parallelism: Parallelism) -> Result<Exp2Report> {
    cfg.validate()?;
    let mut repertoire = StyleRepertoire::new(cfg.order.len(), cfg.tau)?;
    let mut rewards = Vec::new();
    for task in cfg.tasks() {
        repertoire = train_style(task, &repertoire, cfg, seed, parallelism)?.repertoire;
        rewards.push(replay_best(&repertoire, task.k, &cfg.locomotion)?);
    }
    let evaluations = evaluate_styles(&repertoire, cfg, seed)?;
    Ok(Exp2Report {
        seed,
        repertoire,
        rewards_at_completion: rewards,
        evaluations,
    })
}

/// Tables with encodings drawn uniformly from `[-limit, limit]`.
pub fn random_tables(n_joints: usize, count: usize, limit: f64, seed: u64) -> Vec<TableParams> {
    use rand::Rng;
    let mut rng = rng_from(derive_seed(seed, &[RANDOM_STREAM]));
    (0..count)
        .map(|_| {
            let amp: Vec<f64> = (0..n_joints).map(|_| rng.random_range(-limit..=limit)).collect();
            let off: Vec<f64> = (0..n_joints).map(|_| rng.random_range(-limit..=limit)).collect();
            TableParams::new(amp, off).expect("matching lengths")
        })
        .collect()
}

/// One entry of a rollout schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleSegment {
    pub style: Style,
    pub steps: usize,
}

/// Parses `"straight:40,left:40"`.
pub fn parse_schedule(text: &str) -> Result<Vec<ScheduleSegment>> {
    let segments: Vec<ScheduleSegment> = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|part| {
            let (style, steps) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidParameter(format!("schedule entry {part:?} lacks ':'")))?;
            let steps = steps
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad step count in {part:?}")))?;
            Ok(ScheduleSegment {
                style: style.trim().parse()?,
                steps,
            })
        })
        .collect::<Result<_>>()?;
    if segments.is_empty() {
        return Err(Error::Empty("schedule"));
    }
    Ok(segments)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledRollout {
    pub trajectory: Vec<TrajectoryPoint>,
    /// Style active at each recorded point.
    pub styles: Vec<Style>,
    pub outcome: EpisodeOutcome,
}

/// Runs the body continuously through the schedule. The CPG keeps its state
/// across switches; only the composed table changes. There is no early
/// termination. An abort ends the rollout.
pub fn rollout_schedule(
    repertoire: &StyleRepertoire,
    schedule: &[ScheduleSegment],
    loco: &LocomotionConfig,
    initial_cpg: CpgState,
) -> Result<ScheduledRollout> {
    if schedule.is_empty() {
        return Err(Error::Empty("schedule"));
    }
    let tables: Vec<JointTable> = schedule
        .iter()
        .map(|seg| repertoire.style_table(seg.style, loco.offset_clamp))
        .collect::<Result<_>>()?;
    let mut sim = LocomotionSim::new(loco, initial_cpg)?;
    let mut styles = Vec::new();
    'outer: for (seg, table) in schedule.iter().zip(&tables) {
        for _ in 0..seg.steps {
            if sim.tick(table)?.is_some() {
                break 'outer;
            }
            styles.push(seg.style);
        }
    }
    let outcome = sim.outcome(false);
    Ok(ScheduledRollout {
        trajectory: outcome.trajectory.clone(),
        styles,
        outcome,
    })
}

pub fn rollout_schedule_seeded(
    repertoire: &StyleRepertoire,
    schedule: &[ScheduleSegment],
    loco: &LocomotionConfig,
    seed: u64,
) -> Result<ScheduledRollout> {
    rollout_schedule(repertoire, schedule, loco, initial_cpg_state(loco.snake.n_joints(), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{logistic, DEFAULT_OFFSET_CLAMP};
    use approx::assert_abs_diff_eq;

    fn table(amp: f64, off: f64) -> TableParams {
        TableParams::new(vec![amp; 8], vec![off; 8]).unwrap()
    }

    #[test]
    fn single_table_composes_to_itself() {
        let t = table(0.3, -0.7);
        let (a, x) = t.decode(DEFAULT_OFFSET_CLAMP);
        let j = compose_tables(&[1.0], &[t], DEFAULT_OFFSET_CLAMP).unwrap();
        assert_eq!(j.amplitudes, a);
        assert_eq!(j.offsets, x);
    }

    #[test]
    fn identical_tables_are_a_fixed_point() {
        let t = table(1.1, 0.4);
        let (a, x) = t.decode(DEFAULT_OFFSET_CLAMP);
        let j = compose_tables(&[0.5, 0.5], &[t.clone(), t], DEFAULT_OFFSET_CLAMP).unwrap();
        for i in 0..8 {
            assert_abs_diff_eq!(j.amplitudes[i], a[i], epsilon = 1e-15);
            assert_abs_diff_eq!(j.offsets[i], x[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn decoded_amplitudes_are_mixed() {
        let j = compose_tables(&[0.5, 0.5], &[table(0.0, 0.0), table(2.0, 0.0)], DEFAULT_OFFSET_CLAMP).unwrap();
        let oracle = (0.5 + logistic(2.0)) / 2.0;
        assert_abs_diff_eq!(j.amplitudes[0], oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(j.amplitudes[0], 0.69040, epsilon = 1e-5);
    }

    #[test]
    fn compose_dimension_errors() {
        assert!(compose_tables(&[0.5, 0.5], &[table(0.0, 0.0)], DEFAULT_OFFSET_CLAMP).is_err());
        let short = TableParams::new(vec![0.0; 4], vec![0.0; 4]).unwrap();
        assert!(compose_tables(&[0.5, 0.5], &[table(0.0, 0.0), short], DEFAULT_OFFSET_CLAMP).is_err());
        // zero-weight trailing entry needs no table
        assert!(compose_tables(&[1.0, 0.0], &[table(0.0, 0.0)], DEFAULT_OFFSET_CLAMP).is_ok());
    }

    #[test]
    fn schedule_parsing() {
        let s = parse_schedule("straight:40, left:0,right:7").unwrap();
        assert_eq!(
            s,
            vec![
                ScheduleSegment { style: Style::Straight, steps: 40 },
                ScheduleSegment { style: Style::Left, steps: 0 },
                ScheduleSegment { style: Style::Right, steps: 7 },
            ]
        );
        assert!(parse_schedule("").is_err());
        assert!(parse_schedule("up:3").is_err());
        assert!(parse_schedule("left").is_err());
        assert!(parse_schedule("left:-1").is_err());
    }

    fn tiny_cfg() -> Exp2Config {
        let mut cfg = Exp2Config::default();
        cfg.optimizer.population_size = 4;
        cfg.optimizer.max_epochs = 8;
        cfg.locomotion.episode_steps = 6;
        cfg.eval_episodes = 1;
        cfg
    }

    #[test]
    fn genotype_length_for_third_style() {
        assert_eq!(GenotypeLayout::for_task::<TableParams>(&8, 3).len(), 19);
    }

    #[test]
    fn incremental_training_keeps_prior_tasks() {
        let cfg = tiny_cfg();
        let mut rep = StyleRepertoire::new(3, cfg.tau).unwrap();
        let mut snapshots = Vec::new();
        for task in cfg.tasks() {
            rep = train_style(task, &rep, &cfg, 5, Parallelism::Serial).unwrap().repertoire;
            assert!(rep.records()[task.k - 1].episodes_used <= task.episode_budget);
            snapshots.push((rep.tables().subcontrollers().to_vec(), rep.tables().gating().rows().to_vec()));
        }
        assert_eq!(rep.row(1).unwrap(), &[1.0, 0.0, 0.0]);
        let (final_tables, final_rows) = snapshots.last().unwrap().clone();
        for (tables, rows) in &snapshots {
            assert_eq!(&final_tables[..tables.len()], &tables[..]);
            assert_eq!(&final_rows[..rows.len()], &rows[..]);
        }
        for k in 1..=3 {
            assert_eq!(replay_best(&rep, k, &cfg.locomotion).unwrap(), rep.records()[k - 1].best_reward);
        }
    }

    #[test]
    fn wrong_task_index_is_rejected() {
        let cfg = tiny_cfg();
        let rep = StyleRepertoire::new(3, cfg.tau).unwrap();
        let task = StyleTask { style: Style::Left, k: 2, episode_budget: 8 };
        assert!(train_style(task, &rep, &cfg, 0, Parallelism::Serial).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = Exp2Config::default();
        assert!(cfg.validate().is_ok());
        cfg.order = vec![Style::Left, Style::Left];
        assert!(cfg.validate().is_err());
        cfg.order = vec![];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn random_tables_are_reproducible() {
        let a = random_tables(8, 3, 3.0, 9);
        assert_eq!(a, random_tables(8, 3, 3.0, 9));
        assert_ne!(a, random_tables(8, 3, 3.0, 10));
        assert!(a.iter().all(|t| t.amp_enc.iter().all(|v| v.abs() <= 3.0)));
    }
}
