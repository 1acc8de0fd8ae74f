//! Command-line entry points.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cpg::{cpg_output, cpg_step, CpgState};
use crate::error::Result;
use crate::io::{
    cpg_trace_header, fmt_f64, gating_rows, read_records_file, run_metadata, write_csv, write_records_file, write_trajectory,
    BenchRow, CostRow, Exp1Row, Exp2Row, GenomeFile, Metadata, RunConfig, SummaryRow,
};
use crate::optimizer::{minimize, GaussianEs, OptConfig, Parallelism};
use crate::periodic::{run_trial, summarize, TaskRecord, TrainingMode};
use crate::seeding::{derive_seed, rng_from};
use crate::styles::{experiment2, parse_schedule, rollout_schedule_seeded};

#[derive(Debug, Parser)]
#[command(name = "compo-motor", version, about = "Compositional neuro-controller experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the periodic-function schedule and the from-scratch baselines.
    Exp1Train,
    /// Summarize exp1 metrics into per-target epoch statistics.
    Exp1Report {
        /// Metrics file (defaults to OUT/exp1_metrics.csv).
        #[arg(long, value_name = "PATH")]
        metrics: Option<PathBuf>,
    },
    /// Train the three locomotion styles.
    Exp2Train,
    /// Roll a trained style repertoire through a schedule.
    Exp2Rollout {
        #[arg(long, default_value = "straight:40,left:40,right:40")]
        schedule: String,
        /// Genome file (defaults to OUT/exp2_genome.json).
        #[arg(long, value_name = "PATH")]
        genome: Option<PathBuf>,
    },
    /// Integrate the CPG chain and write its trace.
    CpgSim,
    /// Optimizer benchmark on the sphere function.
    EsBench,
    /// Check a genome file.
    ValidateGenome {
        path: PathBuf,
    },
}

/// Parses arguments, runs the command and returns the process exit status:
/// 0 on success, 1 on usage or validation errors, 2 on runtime failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
    hash: String,
    parallelism: Parallelism,
}

impl Context {
    fn metadata(&self) -> Metadata {
        run_metadata(self.cfg.seed, &self.hash)
    }

    fn genome_metadata(&self, extra: &[(&str, String)]) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("config_hash".to_string(), self.hash.clone());
        m.insert("generator".to_string(), format!("compo-motor {}", env!("CARGO_PKG_VERSION")));
        for (k, v) in extra {
            m.insert(k.to_string(), v.clone());
        }
        m
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn load_context(global: &GlobalArgs) -> Result<Context> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = global.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &global.out {
        cfg.out = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    let out = PathBuf::from(&cfg.out);
    Ok(Context {
        hash: cfg.hash(),
        cfg,
        out,
        parallelism: Parallelism::from_env(),
    })
}

pub fn execute(cli: &Cli) -> Result<()> {
    if let Command::ValidateGenome { path } = &cli.command {
        return validate_genome(path);
    }
    let ctx = load_context(&cli.global)?;
    fs::create_dir_all(&ctx.out)?;
    match &cli.command {
        Command::Exp1Train => exp1_train(&ctx),
        Command::Exp1Report { metrics } => exp1_report(&ctx, metrics.as_deref()),
        Command::Exp2Train => exp2_train(&ctx),
        Command::Exp2Rollout { schedule, genome } => exp2_rollout(&ctx, schedule, genome.as_deref()),
        Command::CpgSim => cpg_sim(&ctx),
        Command::EsBench => es_bench(&ctx),
        Command::ValidateGenome { .. } => unreachable!("handled above"),
    }
}

fn exp1_train(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg.exp1;
    let mut records: Vec<TaskRecord> = Vec::new();
    for trial in 0..ctx.cfg.trials {
        let t = run_trial(cfg, ctx.cfg.seed, trial, ctx.parallelism)?;
        let pretrained: Vec<TaskRecord> =
            t.records.iter().filter(|r| r.mode == TrainingMode::Pretrained).cloned().collect();
        let genome = GenomeFile::from_rnn(
            &t.repertoire,
            &pretrained,
            ctx.cfg.seed,
            ctx.genome_metadata(&[("trial", trial.to_string())]),
        )?;
        genome.write(&ctx.path(&format!("exp1_genome_trial{trial}.json")))?;
        let gating = gating_rows(t.repertoire.task_names(), t.repertoire.gating().rows());
        write_records_file(&ctx.path(&format!("exp1_gating_trial{trial}.csv")), &ctx.metadata(), &gating)?;
        for r in &t.records {
            println!(
                "trial {trial} {} {:<10} epochs {:>5} error {:.4}",
                r.task,
                r.mode.name(),
                r.epochs_used,
                r.final_error
            );
        }
        records.extend(t.records);
    }
    let rows: Vec<Exp1Row> = records.iter().map(Exp1Row::from).collect();
    write_records_file(&ctx.path("exp1_metrics.csv"), &ctx.metadata(), &rows)?;
    write_summary(ctx, &records)
}

fn write_summary(ctx: &Context, records: &[TaskRecord]) -> Result<()> {
    let summary: Vec<SummaryRow> = summarize(records)
        .into_iter()
        .map(|s| SummaryRow {
            task: s.task,
            mode: s.mode,
            trials: s.trials,
            median_epochs: s.median_epochs,
            mean_epochs: s.mean_epochs,
            min_epochs: s.min_epochs,
            max_epochs: s.max_epochs,
            mean_final_error: s.mean_final_error,
        })
        .collect();
    for s in &summary {
        println!(
            "{} {:<10} trials {:>3} median epochs {:>8} mean error {:.4}",
            s.task,
            s.mode.name(),
            s.trials,
            s.median_epochs,
            s.mean_final_error
        );
    }
    write_records_file(&ctx.path("exp1_summary.csv"), &ctx.metadata(), &summary)
}

fn exp1_report(ctx: &Context, metrics: Option<&Path>) -> Result<()> {
    let path = metrics.map_or_else(|| ctx.path("exp1_metrics.csv"), Path::to_path_buf);
    let (_, rows) = read_records_file::<Exp1Row>(&path)?;
    let records: Vec<TaskRecord> = rows
        .into_iter()
        .map(|r| TaskRecord {
            task: r.task,
            trial: r.trial,
            mode: r.mode,
            epochs_used: r.epochs_used,
            final_error: r.final_error,
            gating_row: Vec::new(),
        })
        .collect();
    write_summary(ctx, &records)
}

fn exp2_train(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg.exp2;
    let report = experiment2(cfg, ctx.cfg.seed, ctx.parallelism)?;
    let rep = &report.repertoire;
    GenomeFile::from_styles(rep, ctx.cfg.seed, ctx.genome_metadata(&[])).write(&ctx.path("exp2_genome.json"))?;
    let gating = gating_rows(rep.tables().task_names(), rep.tables().gating().rows());
    write_records_file(&ctx.path("exp2_gating.csv"), &ctx.metadata(), &gating)?;

    let mut rows = Vec::new();
    for record in rep.records() {
        for (i, e) in report.evaluations_for(record.style).enumerate() {
            let o = &e.outcome;
            rows.push(Exp2Row {
                style: record.style,
                episodes_used: record.episodes_used,
                best_reward: record.best_reward,
                d: o.d,
                s: o.s,
                heading_change: o.heading_change,
            });
            if i == 0 {
                let f = std::io::BufWriter::new(fs::File::create(
                    ctx.path(&format!("exp2_trajectory_{}.csv", record.style)),
                )?);
                write_trajectory(f, &ctx.metadata(), cfg.locomotion.snake.n_joints(), &o.trajectory)?;
            }
            println!(
                "{:<8} d {:.3} s {:+.3} heading {:+.1} deg steps {} early {}",
                record.style,
                o.d,
                o.s,
                o.heading_change.to_degrees(),
                o.steps_executed,
                o.early_terminated
            );
        }
    }
    write_records_file(&ctx.path("exp2_metrics.csv"), &ctx.metadata(), &rows)
}

fn exp2_rollout(ctx: &Context, schedule: &str, genome: Option<&Path>) -> Result<()> {
    let schedule = parse_schedule(schedule)?;
    let path = genome.map_or_else(|| ctx.path("exp2_genome.json"), Path::to_path_buf);
    let rep = GenomeFile::read(&path)?.to_style_repertoire()?;
    let loco = &ctx.cfg.exp2.locomotion;
    let rollout = rollout_schedule_seeded(&rep, &schedule, loco, ctx.cfg.seed)?;
    let f = std::io::BufWriter::new(fs::File::create(ctx.path("rollout_trajectory.csv"))?);
    write_trajectory(f, &ctx.metadata(), loco.snake.n_joints(), &rollout.trajectory)?;
    let o = &rollout.outcome;
    println!(
        "steps {} d {:.3} s {:+.3} heading {:+.1} deg",
        o.steps_executed,
        o.d,
        o.s,
        o.heading_change.to_degrees()
    );
    if let Some(reason) = o.aborted {
        println!("aborted: {reason:?}");
    }
    Ok(())
}

fn cpg_sim(ctx: &Context) -> Result<()> {
    let sim = &ctx.cfg.cpg_sim;
    let n = sim.n_joints;
    let mut params = sim.cpg.chain(n)?;
    params.set_targets(&vec![sim.amplitude; n], &vec![sim.offset; n])?;
    let mut rng = rng_from(derive_seed(ctx.cfg.seed, &[0x4350_4753]));
    let mut state = CpgState::random(n, &mut rng);
    let row = |t: f64, s: &CpgState| -> Vec<String> {
        let mut r = vec![fmt_f64(t)];
        r.extend(s.theta.iter().copied().map(fmt_f64));
        r.extend(s.r.iter().copied().map(fmt_f64));
        r.extend(cpg_output(s, &params).into_iter().map(fmt_f64));
        r
    };
    let mut rows = vec![row(0.0, &state)];
    for i in 1..=sim.steps() {
        state = cpg_step(&state, &params, sim.dt, sim.cpg.substeps)?;
        rows.push(row(i as f64 * sim.dt, &state));
    }
    let f = std::io::BufWriter::new(fs::File::create(ctx.path("cpg_trace.csv"))?);
    write_csv(f, &ctx.metadata(), &cpg_trace_header(n), &rows)?;
    println!("wrote {} samples for {n} oscillators", rows.len());
    Ok(())
}

fn es_bench(ctx: &Context) -> Result<()> {
    let bench = &ctx.cfg.es_bench;
    let sphere = |x: &[f64], _: usize| x.iter().map(|v| v * v).sum::<f64>();
    let mut rows = Vec::new();
    for i in 0..ctx.cfg.trials {
        let opt = OptConfig {
            rng_seed: derive_seed(ctx.cfg.seed, &[i as u64]),
            ..bench.optimizer.clone()
        };
        let r = minimize(sphere, bench.dim, &opt, &mut GaussianEs::new(), ctx.parallelism)?;
        let history: Vec<CostRow> = r
            .cost_history
            .iter()
            .map(|&(epoch, best_cost)| CostRow { epoch, best_cost })
            .collect();
        write_records_file(&ctx.path(&format!("es_history_{i}.csv")), &ctx.metadata(), &history)?;
        println!("run {i} generations {} best {:e}", r.generations, r.best_cost);
        rows.push(BenchRow {
            seed: opt.rng_seed,
            generations: r.generations,
            best_cost: r.best_cost,
        });
    }
    write_records_file(&ctx.path("es_bench.csv"), &ctx.metadata(), &rows)
}

fn validate_genome(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path)?;
    let genome = GenomeFile::from_json(&text)?;
    genome.validate()?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{}: {} genome, {} sub-controllers, tau {}",
        path.display(),
        genome.experiment,
        genome.subcontrollers.len(),
        genome.tau
    )?;
    Ok(())
}
