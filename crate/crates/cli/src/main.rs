//! `tscloud` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use tscloud::chaos::chaos_optimize;
use tscloud::cloud::TriangularCloud;
use tscloud::compare::{self, finite_or_null, Method};
use tscloud::hinf::{self, parse_plant_description, UncertainTsPlant};
use tscloud::io::{self, fmt_value, parse_checkpoint, parse_config, Checkpoint, ExperimentConfig, SCHEMA_VERSION};
use tscloud::plant::{j1, j1_or_inf, run_closed_loop, Controller, ZeroController};
use tscloud::tune::{hybrid_optimize, tune_online, HybridConfig, TuningProblem};
use tscloud::Error;

#[derive(Parser)]
#[command(name = "tscloud", version, about = "Cloud-controller tuning and robust H-infinity synthesis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for optimizers and sampling; `simulate` uses it as the noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop run writing trace.csv and summary.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Controller from a tuning checkpoint; otherwise config alphas or the zero controller.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Cloud drops and envelopes on a grid.
    Drops {
        #[command(flatten)]
        common: Common,
    },
    /// Chaos search for the controller parameters.
    TuneOffline {
        #[command(flatten)]
        common: Common,
    },
    /// Windowed on-line CG refinement from a checkpoint.
    TuneOnline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Chaos search followed by CG refinement.
    TuneHybrid {
        #[command(flatten)]
        common: Common,
    },
    /// Robust H-infinity compensator synthesis.
    Hinf {
        #[command(flatten)]
        common: Common,
        /// Plant description file; otherwise the config's `hinf` section.
        #[arg(long)]
        plant: Option<PathBuf>,
    },
    /// Evaluations-to-threshold table for several optimizers.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of chaos,cg,ga,hybrid.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        n_seeds: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Empty(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_config(common: &Common) -> CliResult<ExperimentConfig> {
    match &common.config {
        Some(path) => parse_config(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => Ok(ExperimentConfig::default()),
    }
}

struct Out {
    dir: PathBuf,
}

impl Out {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
    }

    fn json(&self, name: &str, value: &serde_json::Value) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).unwrap_or_default();
        text.push('\n');
        self.write(name, &text)
    }
}

fn simulate(common: &Common, checkpoint: Option<&Path>) -> CliResult<()> {
    let cfg = load_config(common)?;
    let out = Out::new(&common.out)?;
    let seed = common.seed.unwrap_or(cfg.noise_seed);
    let mut problem = cfg.problem();
    let (label, ctl): (&str, Box<dyn Controller>) = match (checkpoint, &cfg.alphas) {
        (Some(path), _) => {
            let ck = parse_checkpoint(&read(path)?)?;
            problem.structure = ck.structure;
            problem.u_bound = ck.u_bound;
            ("checkpoint", Box::new(problem.controller(&ck.alphas)?))
        }
        (None, Some(alphas)) => ("alphas", Box::new(problem.controller(alphas)?)),
        (None, None) => ("zero", Box::new(ZeroController)),
    };
    let (trace, diverged_step) = match run_closed_loop(&problem.plant, ctl.as_ref(), &problem.reference, &problem.loop_cfg, seed) {
        Ok(t) => (t, None),
        Err(Error::DivergedRun { step, partial, .. }) => (*partial, Some(step)),
        Err(e) => return Err(e.into()),
    };
    let j = if diverged_step.is_some() { f64::INFINITY } else { j1(&trace) };
    let baseline = j1_or_inf(&problem.plant, &ZeroController, &problem.reference, &problem.loop_cfg, seed);
    out.write("trace.csv", &trace.to_csv())?;
    out.json(
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "controller": label,
            "seed": seed,
            "steps": problem.loop_cfg.steps,
            "j1": finite_or_null(j),
            "baseline_j1": finite_or_null(baseline),
            "final_abs_e": trace.rows.last().map(|r| r.e.abs()),
            "diverged": diverged_step.is_some(),
            "diverged_step": diverged_step,
        }),
    )?;
    println!("simulate: controller={label} j1={} diverged={}", fmt_value(j), diverged_step.is_some());
    Ok(())
}

fn drops(common: &Common) -> CliResult<()> {
    let cfg = load_config(common)?;
    let out = Out::new(&common.out)?;
    let d = cfg.drops;
    let cloud = TriangularCloud::new(d.ex, d.en, d.he)?;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed.unwrap_or(0));
    let mut csv = String::from("x,mu,y1,y2\n");
    let mut violations = 0usize;
    for i in 0..d.points {
        let x = d.ex - d.en + 2.0 * d.en * i as f64 / (d.points - 1) as f64;
        let env = cloud.envelope(x);
        let (lo, hi) = (env.y1.min(env.y2), env.y1.max(env.y2));
        for _ in 0..d.per_point {
            let drop = cloud.drop(x, &mut rng);
            if drop.mu < lo || drop.mu > hi {
                violations += 1;
            }
            csv.push_str(&format!("{},{},{},{}\n", x, drop.mu, env.y1, env.y2));
        }
    }
    out.write("drops.csv", &csv)?;
    out.json(
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "max_width": cloud.max_width(),
            "grid_max_width": cloud.grid_max_width(10_001),
            "drops": d.points * d.per_point,
            "envelope_violations": violations,
        }),
    )?;
    println!("drops: {} drops, {violations} outside the envelope", d.points * d.per_point);
    Ok(())
}

fn objective(problem: &TuningProblem) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |a: &[f64]| problem.objective(a)
}

fn tune_offline(common: &Common) -> CliResult<()> {
    let cfg = load_config(common)?;
    let out = Out::new(&common.out)?;
    let problem = cfg.problem();
    let r = chaos_optimize(objective(&problem), &problem.bounds(), &cfg.chaos, common.seed.unwrap_or(0))?;
    let ck = Checkpoint::new(&problem, r.best_params.clone(), r.best_j, r.evals)?;
    out.write("checkpoint.json", &(ck.to_json() + "\n"))?;
    out.write("convergence.csv", &io::convergence_csv(&r.history))?;
    println!("tune-offline: best_j={} evals={} reached={}", fmt_value(r.best_j), r.evals, r.reached);
    Ok(())
}

fn tune_hybrid(common: &Common) -> CliResult<()> {
    let cfg = load_config(common)?;
    let out = Out::new(&common.out)?;
    let problem = cfg.problem();
    let free = problem.continuous_slots();
    let h = cfg.hybrid;
    let hybrid = HybridConfig { switch_j: h.switch_j, max_evals: h.max_evals, j_stop: h.j_stop };
    let r = hybrid_optimize(
        objective(&problem),
        &problem.bounds(),
        Some(&free),
        &cfg.chaos,
        &cfg.cg,
        &hybrid,
        common.seed.unwrap_or(0),
    )?;
    let mut ck = Checkpoint::new(&problem, r.best_params.clone(), r.best_j, r.evals())?;
    ck.chaos_evals = Some(r.chaos_evals);
    ck.cg_evals = Some(r.cg_evals);
    out.write("checkpoint.json", &(ck.to_json() + "\n"))?;
    out.write("convergence.csv", &io::convergence_csv(&r.chaos.history))?;
    let mut cg_csv = String::from("iteration,j\n");
    for (i, j) in r.cg.iter().flat_map(|c| c.history.iter()).enumerate() {
        cg_csv.push_str(&format!("{i},{}\n", fmt_value(*j)));
    }
    out.write("cg_history.csv", &cg_csv)?;
    out.json(
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "chaos_evals": r.chaos_evals,
            "cg_evals": r.cg_evals,
            "total_evals": r.evals(),
            "chaos_best_j": finite_or_null(r.chaos.best_j),
            "best_j": finite_or_null(r.best_j),
            "reached": r.reached,
            "cg_termination": r.cg.as_ref().map(|c| c.termination),
        }),
    )?;
    println!(
        "tune-hybrid: chaos phase {} evals, cg phase {} evals, best_j={}",
        r.chaos_evals,
        r.cg_evals,
        fmt_value(r.best_j)
    );
    Ok(())
}

fn tune_online_cmd(common: &Common, checkpoint: &Path) -> CliResult<()> {
    let cfg = load_config(common)?;
    let out = Out::new(&common.out)?;
    let ck = parse_checkpoint(&read(checkpoint)?)?;
    let mut problem = cfg.problem();
    problem.structure = ck.structure;
    problem.u_bound = ck.u_bound;
    if let Some(seed) = common.seed {
        problem.noise_seed = seed;
    }
    let r = tune_online(&problem, &ck.alphas, &cfg.online)?;
    let j = j1(&r.trace);
    let evals: usize = r.updates.iter().map(|u| u.evals).sum();
    let updated = Checkpoint::new(&problem, r.alphas.clone(), j, evals)?;
    out.write("trace.csv", &r.trace.to_csv())?;
    out.write("updates.csv", &r.updates_csv())?;
    out.write("checkpoint.json", &(updated.to_json() + "\n"))?;
    println!("tune-online: {} windows, j1={}", r.updates.len(), fmt_value(j));
    Ok(())
}

fn hinf_cmd(common: &Common, plant_path: Option<&Path>) -> CliResult<()> {
    let cfg = load_config(common)?;
    let out = Out::new(&common.out)?;
    let (plant, eps, n_samples) = match (plant_path, &cfg.hinf) {
        (Some(path), section) => {
            let (plant, eps) = parse_plant_description(&read(path)?)?;
            (plant, eps, section.as_ref().map_or(100, |s| s.n_samples))
        }
        (None, Some(section)) => (UncertainTsPlant::new(section.rules.clone())?, section.eps, section.n_samples),
        (None, None) => return Err(Failure::Usage("hinf needs --plant or a config hinf section".into())),
    };
    let syn = hinf::synthesize(&plant, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed.unwrap_or(0));
    let report = hinf::robust_verify(&plant, &syn.compensators, n_samples, &mut rng)?;
    let mut doc = serde_json::to_value(&syn).unwrap_or_default();
    doc["schema_version"] = SCHEMA_VERSION.into();
    out.json("synthesis.json", &doc)?;
    out.write("robust.csv", &report.to_csv())?;
    let worst = report.samples.iter().map(|s| s.spectral_abscissa).fold(f64::NEG_INFINITY, f64::max);
    out.json(
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "rules": plant.rules.len(),
            "eps": syn.eps,
            "coupling_ok": syn.certificates.iter().all(|c| c.coupling_ok),
            "samples": n_samples,
            "max_spectral_abscissa": finite_or_null(worst),
            "robust": report.pass,
        }),
    )?;
    println!("hinf: {} rules synthesized, robust={}", plant.rules.len(), report.pass);
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("robust verification failed on {} samples", report.failures.len())))
    }
}

fn compare_cmd(common: &Common, methods: Option<&[String]>, n_seeds: Option<usize>, budget: Option<usize>) -> CliResult<()> {
    let cfg = load_config(common)?;
    let out = Out::new(&common.out)?;
    let mut settings = cfg.compare.clone();
    if let Some(list) = methods {
        settings.methods = list.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>()?;
    }
    if let Some(n) = n_seeds {
        settings.n_seeds = n;
    }
    if let Some(b) = budget {
        settings.budget = b;
    }
    let base_seed = common.seed.unwrap_or(0);
    let summaries = compare::compare(&cfg.problem(), &settings, base_seed)?;
    out.write("compare_runs.csv", &compare::runs_csv(&summaries))?;
    out.write("compare_summary.csv", &compare::summary_csv(&summaries))?;
    out.json("compare.json", &compare::report_json(&summaries, &settings, base_seed))?;
    for s in &summaries {
        println!("compare: {} median={}", s.method.name(), s.median_evals.map_or("inf".to_string(), |m| m.to_string()));
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate { common, checkpoint } => simulate(common, checkpoint.as_deref()),
        Command::Drops { common } => drops(common),
        Command::TuneOffline { common } => tune_offline(common),
        Command::TuneOnline { common, checkpoint } => tune_online_cmd(common, checkpoint),
        Command::TuneHybrid { common } => tune_hybrid(common),
        Command::Hinf { common, plant } => hinf_cmd(common, plant.as_deref()),
        Command::Compare { common, methods, n_seeds, budget } => {
            compare_cmd(common, methods.as_deref(), *n_seeds, *budget)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.kind() == clap::error::ErrorKind::InvalidSubcommand => {
            let _ = e.print();
            eprintln!("\ncommands: simulate, drops, tune-offline, tune-online, tune-hybrid, hinf, compare");
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

