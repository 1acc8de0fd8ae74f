//! Black-box minimization over flat real genotypes.
//!
//! [`minimize`] runs a generational loop: the [`SamplerStrategy`] proposes a
//! population, every candidate is scored, and the scores are handed back to
//! the sampler. The shipped sampler is [`GaussianEs`], a weighted
//! recombination evolution strategy with success-rule step-size control. Any
//! other candidate generator (for instance one driven by a learned model of
//! the search history) plugs in through the same trait.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::rng_from;

/// How `max_epochs` and `epochs_used` are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochAccounting {
    /// One epoch is one generation of `population_size` evaluations.
    #[default]
    Generations,
    /// One epoch is one cost evaluation. Only whole generations are run.
    Evaluations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptConfig {
    pub population_size: usize,
    /// Defaults to `population_size / 4` when absent.
    pub parent_count: Option<usize>,
    pub initial_step: f64,
    pub max_epochs: usize,
    pub target_cost: f64,
    pub rng_seed: u64,
    pub accounting: EpochAccounting,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            population_size: 16,
            parent_count: None,
            initial_step: 0.5,
            max_epochs: 20_000,
            target_cost: f64::NEG_INFINITY,
            rng_seed: 0,
            accounting: EpochAccounting::Generations,
        }
    }
}

impl OptConfig {
    pub fn parents(&self) -> usize {
        self.parent_count
            .unwrap_or((self.population_size / 4).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let mu = self.parents();
        if self.population_size == 0 || mu == 0 || mu > self.population_size {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= parent_count ({mu}) <= population_size ({})",
                self.population_size
            )));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial_step must be > 0, got {}",
                self.initial_step
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidParameter("max_epochs must be >= 1".into()));
        }
        if self.target_cost.is_nan() {
            return Err(Error::InvalidParameter("target_cost is NaN".into()));
        }
        if self.accounting == EpochAccounting::Evaluations && self.max_epochs < self.population_size {
            return Err(Error::InvalidParameter(
                "evaluation budget is smaller than one generation".into(),
            ));
        }
        Ok(())
    }

    /// Number of whole generations the budget allows.
    pub fn max_generations(&self) -> usize {
        match self.accounting {
            EpochAccounting::Generations => self.max_epochs,
            EpochAccounting::Evaluations => self.max_epochs / self.population_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best_genotype: Vec<f64>,
    pub best_cost: f64,
    /// Zero-based generation in which the best genotype was sampled.
    pub best_generation: usize,
    /// In the unit selected by [`OptConfig::accounting`].
    pub epochs_used: usize,
    pub generations: usize,
    pub evaluations: usize,
    /// `(epoch, best-so-far cost)` after every generation.
    pub cost_history: Vec<(usize, f64)>,
}

/// Candidate generator driven by the minimizer.
pub trait SamplerStrategy {
    /// Resets internal state for a search in `dim` dimensions.
    fn reset(&mut self, dim: usize, config: &OptConfig);

    /// Proposes `count` candidates.
    fn sample(&mut self, rng: &mut dyn RngCore, count: usize) -> Vec<Vec<f64>>;

    /// Receives the costs of the last proposals, in proposal order.
    /// Non-finite costs arrive as `+∞`.
    fn update(&mut self, candidates: &[Vec<f64>], costs: &[f64]);
}

/// Normalized recombination weights proportional to `ln(μ+1) − ln(rank)`.
pub fn rank_weights(mu: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=mu)
        .map(|r| ((mu + 1) as f64).ln() - (r as f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Step-size factor of the one-fifth success rule.
pub fn success_rule_factor(successes: usize, population: usize) -> f64 {
    // 5·successes > population  ⇔  successes / population > 1/5, exactly.
    if 5 * successes > population {
        1.1
    } else if 5 * successes == population {
        1.0
    } else {
        1.0 / 1.1
    }
}

pub const SIGMA_FLOOR: f64 = 1e-12;

/// (μ/μ_w, λ) Gaussian evolution strategy.
///
/// The mean moves to the rank-weighted average of the best μ candidates. A
/// candidate counts as a success when it beats the best cost of the previous
/// generation; every per-dimension step is multiplied by 1.1 when more than a
/// fifth of the population succeeds and divided by 1.1 when fewer do.
#[derive(Debug, Clone, Default)]
pub struct GaussianEs {
    mean: Vec<f64>,
    sigma: Vec<f64>,
    weights: Vec<f64>,
    previous_best: Option<f64>,
}

impl GaussianEs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
}

impl SamplerStrategy for GaussianEs {
    fn reset(&mut self, dim: usize, config: &OptConfig) {
        self.mean = vec![0.0; dim];
        self.sigma = vec![config.initial_step; dim];
        self.weights = rank_weights(config.parents());
        self.previous_best = None;
    }

    fn sample(&mut self, rng: &mut dyn RngCore, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                self.mean
                    .iter()
                    .zip(&self.sigma)
                    .map(|(&m, &s)| {
                        let z: f64 = StandardNormal.sample(rng);
                        m + s * z
                    })
                    .collect()
            })
            .collect()
    }

    fn update(&mut self, candidates: &[Vec<f64>], costs: &[f64]) {
        let order = ranking(costs);
        let mu = self.weights.len().min(order.len());
        let mut mean = vec![0.0; self.mean.len()];
        let wsum: f64 = self.weights[..mu].iter().sum();
        for (&idx, &w) in order.iter().zip(&self.weights[..mu]) {
            for (m, x) in mean.iter_mut().zip(&candidates[idx]) {
                *m += (w / wsum) * x;
            }
        }
        self.mean = mean;

        let gen_best = costs[order[0]];
        if let Some(prev) = self.previous_best {
            let successes = costs.iter().filter(|&&c| c < prev).count();
            let factor = success_rule_factor(successes, costs.len());
            for s in &mut self.sigma {
                *s = (*s * factor).max(SIGMA_FLOOR);
            }
        }
        self.previous_best = Some(gen_best);
    }
}

/// Candidate indices sorted by cost, ties broken by index.
fn ranking(costs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    order
}

/// Worker parallelism for candidate evaluation. Results are always reduced
/// in candidate order, so serial and parallel runs agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    #[default]
    Serial,
    Threads(usize),
}

impl Parallelism {
    /// Reads `COMPO_MOTOR_THREADS` (0 or unset = serial).
    pub fn from_env() -> Self {
        match std::env::var("COMPO_MOTOR_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            None | Some(0) | Some(1) => Parallelism::Serial,
            Some(n) => Parallelism::Threads(n),
        }
    }
}

/// Minimizes `cost_fn(genotype, generation)` over `dim`-dimensional genotypes.
///
/// The generation index lets stochastic objectives pick a per-generation
/// episode seed; for a fixed generation the cost must be a pure function of
/// the genotype.
pub fn minimize<F, S>(
    cost_fn: F,
    dim: usize,
    config: &OptConfig,
    sampler: &mut S,
    parallelism: Parallelism,
) -> Result<OptResult>
where
    F: Fn(&[f64], usize) -> f64 + Sync,
    S: SamplerStrategy + ?Sized,
{
    if dim == 0 {
        return Err(Error::InvalidParameter("dim must be >= 1".into()));
    }
    config.validate()?;
    let pool = match parallelism {
        Parallelism::Serial => None,
        Parallelism::Threads(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?,
        ),
    };

    let lambda = config.population_size;
    let mut rng = rng_from(config.rng_seed);
    sampler.reset(dim, config);

    let mut best_cost = f64::INFINITY;
    let mut best_genotype: Option<Vec<f64>> = None;
    let mut best_generation = 0;
    let mut history = Vec::new();
    let mut generations = 0;
    let max_generations = config.max_generations();

    while generations < max_generations {
        let candidates = sampler.sample(&mut rng, lambda);
        let eval = |x: &Vec<f64>| {
            let c = cost_fn(x, generations);
            if c.is_finite() { c } else { f64::INFINITY }
        };
        let costs: Vec<f64> = match &pool {
            None => candidates.iter().map(eval).collect(),
            Some(pool) => pool.install(|| candidates.par_iter().map(eval).collect()),
        };
        if costs.iter().all(|c| c.is_infinite()) {
            return Err(Error::AllCandidatesNonFinite {
                generation: generations,
            });
        }
        for (x, &c) in candidates.iter().zip(&costs) {
            if c < best_cost {
                best_cost = c;
                best_genotype = Some(x.clone());
                best_generation = generations;
            }
        }
        sampler.update(&candidates, &costs);
        generations += 1;
        history.push((epochs_for(config, generations), best_cost));
        if best_cost <= config.target_cost {
            break;
        }
    }

    Ok(OptResult {
        best_genotype: best_genotype.expect("at least one finite evaluation"),
        best_cost,
        best_generation,
        epochs_used: epochs_for(config, generations),
        generations,
        evaluations: generations * lambda,
        cost_history: history,
    })
}

fn epochs_for(config: &OptConfig, generations: usize) -> usize {
    match config.accounting {
        EpochAccounting::Generations => generations,
        EpochAccounting::Evaluations => generations * config.population_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn sphere(x: &[f64], _: usize) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn rank_weights_for_two_parents() {
        let w = rank_weights(2);
        // (ln 3, ln 3 − ln 2) / ln 4.5
        let total = 3f64.ln() + (3f64.ln() - 2f64.ln());
        assert_abs_diff_eq!(w[0], 3f64.ln() / total, epsilon = 1e-15);
        assert_abs_diff_eq!(w[0], 0.7304, epsilon = 1e-4);
        assert_abs_diff_eq!(w[1], 0.2696, epsilon = 1e-4);
        assert_eq!(rank_weights(1), vec![1.0]);
    }

    #[test]
    fn success_rule_boundary_is_noop() {
        assert_eq!(success_rule_factor(4, 20), 1.0);
        assert_eq!(success_rule_factor(5, 20), 1.1);
        assert_eq!(success_rule_factor(3, 20), 1.0 / 1.1);
    }

    #[test]
    fn single_parent_mean_jumps_to_best() {
        let cfg = OptConfig {
            population_size: 4,
            parent_count: Some(1),
            ..OptConfig::default()
        };
        let mut es = GaussianEs::new();
        es.reset(2, &cfg);
        let cands = vec![vec![1.0, 1.0], vec![2.0, -3.0], vec![0.5, 0.25], vec![9.0, 9.0]];
        es.update(&cands, &[3.0, 1.0, 2.0, 5.0]);
        assert_eq!(es.mean(), &[2.0, -3.0]);
    }

    #[test]
    fn sigma_respects_floor() {
        let cfg = OptConfig {
            population_size: 4,
            initial_step: 1e-12,
            ..OptConfig::default()
        };
        let mut es = GaussianEs::new();
        es.reset(1, &cfg);
        let cands = vec![vec![0.0]; 4];
        for _ in 0..5 {
            es.update(&cands, &[1.0; 4]);
        }
        assert_eq!(es.sigma(), &[SIGMA_FLOOR]);
    }

    #[test]
    fn constant_cost_converges_after_one_epoch() {
        let cfg = OptConfig {
            max_epochs: 5,
            target_cost: 2.5,
            ..OptConfig::default()
        };
        let r = minimize(|_, _| 2.5, 3, &cfg, &mut GaussianEs::new(), Parallelism::Serial).unwrap();
        assert_eq!(r.best_cost, 2.5);
        assert_eq!(r.epochs_used, 1);
    }

    #[test]
    fn one_dimensional_quadratic() {
        let cfg = OptConfig {
            max_epochs: 2000,
            target_cost: 1e-8,
            rng_seed: 3,
            ..OptConfig::default()
        };
        let r = minimize(
            |x, _| (x[0] - 3.0).powi(2),
            1,
            &cfg,
            &mut GaussianEs::new(),
            Parallelism::Serial,
        )
        .unwrap();
        assert!((r.best_genotype[0] - 3.0).abs() < 1e-3, "{:?}", r.best_genotype);
        assert!(r.best_cost <= 1e-8);
    }

    #[test]
    fn sphere_ten_dims() {
        let cfg = OptConfig {
            max_epochs: 2000,
            target_cost: 1e-6,
            rng_seed: 11,
            ..OptConfig::default()
        };
        let r = minimize(sphere, 10, &cfg, &mut GaussianEs::new(), Parallelism::Serial).unwrap();
        assert!(r.best_cost < 1e-6, "best {}", r.best_cost);
        assert!(r.cost_history.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn evaluation_budget_is_respected() {
        let calls = AtomicUsize::new(0);
        let cfg = OptConfig {
            max_epochs: 7,
            ..OptConfig::default()
        };
        let r = minimize(
            |x, _| {
                calls.fetch_add(1, Ordering::Relaxed);
                sphere(x, 0)
            },
            4,
            &cfg,
            &mut GaussianEs::new(),
            Parallelism::Serial,
        )
        .unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 7 * 16);
        assert_eq!(r.epochs_used, 7);
        assert_eq!(r.evaluations, 112);
    }

    #[test]
    fn evaluation_accounting_runs_whole_generations() {
        let calls = AtomicUsize::new(0);
        let cfg = OptConfig {
            max_epochs: 600,
            accounting: EpochAccounting::Evaluations,
            ..OptConfig::default()
        };
        let r = minimize(
            |x, _| {
                calls.fetch_add(1, Ordering::Relaxed);
                sphere(x, 0)
            },
            3,
            &cfg,
            &mut GaussianEs::new(),
            Parallelism::Serial,
        )
        .unwrap();
        assert_eq!(r.generations, 37);
        assert_eq!(r.epochs_used, 592);
        assert_eq!(calls.load(Ordering::Relaxed), 592);
    }

    #[test]
    fn non_finite_costs_are_penalized() {
        let cfg = OptConfig {
            max_epochs: 20,
            rng_seed: 5,
            ..OptConfig::default()
        };
        let r = minimize(
            |x, _| if x[0] > 0.0 { f64::NAN } else { x[0] * x[0] },
            1,
            &cfg,
            &mut GaussianEs::new(),
            Parallelism::Serial,
        )
        .unwrap();
        assert!(r.best_cost.is_finite());
        assert!(r.best_genotype[0] <= 0.0);

        let err = minimize(|_, _| f64::INFINITY, 2, &cfg, &mut GaussianEs::new(), Parallelism::Serial)
            .unwrap_err();
        assert!(matches!(err, Error::AllCandidatesNonFinite { generation: 0 }));
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let cfg = OptConfig {
            max_epochs: 50,
            rng_seed: 9,
            ..OptConfig::default()
        };
        let f = |x: &[f64], g: usize| sphere(x, 0) + (g as f64) * 1e-9;
        let a = minimize(f, 6, &cfg, &mut GaussianEs::new(), Parallelism::Serial).unwrap();
        let b = minimize(f, 6, &cfg, &mut GaussianEs::new(), Parallelism::Threads(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let bad = OptConfig { parent_count: Some(20), ..OptConfig::default() };
        assert!(bad.validate().is_err());
        let bad = OptConfig { initial_step: 0.0, ..OptConfig::default() };
        assert!(bad.validate().is_err());
        let bad = OptConfig { max_epochs: 0, ..OptConfig::default() };
        assert!(bad.validate().is_err());
        assert_eq!(OptConfig::default().parents(), 4);
        assert!(minimize(sphere, 0, &OptConfig::default(), &mut GaussianEs::new(), Parallelism::Serial).is_err());
    }
}
