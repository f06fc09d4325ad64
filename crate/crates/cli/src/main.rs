use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fairloop::harness::{self, RunConfig, RunManifest, SUMMARY_FILE};
use fairloop::oracle::{self, BudgetMode};
use fairloop::sim::RunSummary;
use fairloop::{PolicyKind, World};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "fairloop", version, about = "Provider-fair ranking under recommendation feedback loops")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write per-episode JSONL plus a summary CSV.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured policy.
        #[arg(long)]
        policy: Option<PolicyKind>,
    },
    /// Solve a tiny instance exactly and optionally score a decision sequence.
    Oracle {
        /// JSON instance: scores, provider_of, k, lambda, optional gamma.
        #[arg(long)]
        instance: PathBuf,
        /// JSON array with one item list per step.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Drop the exposure-budget constraint.
        #[arg(long)]
        relaxed: bool,
    },
    /// Run a policy grid over seeds and write a comparison CSV.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "0..10", value_parser = parse_seeds)]
        seeds: Seeds,
        /// Comma-separated policy ids; all learning policies by default.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<PolicyKind>,
    },
    /// Sweep the trade-off coefficient and write one (CTR, MMF) row per value.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "0..5", value_parser = parse_seeds)]
        seeds: Seeds,
        /// Explicit values in [1e-3, 1].
        #[arg(long, value_delimiter = ',', conflicts_with = "points")]
        lambdas: Vec<f64>,
        /// Log-spaced values over [1e-3, 1].
        #[arg(long, default_value_t = 7)]
        points: usize,
    },
    /// Filter an interaction log and write catalog files.
    Ingest {
        /// CSV with header user_id,item_id,rating,timestamp.
        #[arg(long)]
        interactions: PathBuf,
        /// CSV with header item_id,provider_id.
        #[arg(long)]
        providers: PathBuf,
        #[arg(long, default_value_t = 5)]
        min_degree: usize,
        #[arg(long, default_value = "dataset")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
        if a >= b {
            return Err(format!("empty seed range {s}"));
        }
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad seed `{x}`")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Seeds)
}

/// Loaded configuration and, for file-backed data, the world.
struct Setup {
    config: RunConfig,
    world: Option<World>,
    manifest: RunManifest,
}

fn setup(command: &str, run: &RunArgs) -> Result<Setup> {
    let config = match &run.config {
        Some(p) => harness::load_config(p)?,
        None => RunConfig::default(),
    };
    let mut manifest = RunManifest::new(command, &config);
    let world = match &config.data {
        Some(src) => {
            let (world, report) = harness::load_world(src)?;
            if report.clamped > 0 || report.filled > 0 {
                eprintln!("scores: {} values clamped, {} entries filled with 0", report.clamped, report.filled);
            }
            manifest.data = Some(report);
            Some(world)
        }
        None => None,
    };
    std::fs::create_dir_all(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    Ok(Setup { config, world, manifest })
}

/// Runs every configuration in parallel; results come back in input order.
fn run_all(setup: &Setup, configs: &[fairloop::ExperimentConfig], out: &Path) -> Result<Vec<(RunSummary, String)>> {
    configs
        .par_iter()
        .map(|c| harness::run_into(c, setup.world.as_ref(), out).map_err(anyhow::Error::from))
        .collect()
}

fn record(manifest: &mut RunManifest, runs: &[(RunSummary, String)]) {
    for (s, name) in runs {
        manifest.outputs.push(name.clone());
        manifest.timings_ms.insert(name.clone(), s.wall_ms);
        if !manifest.seeds.contains(&s.seed) {
            manifest.seeds.push(s.seed);
        }
        if !manifest.policies.contains(&s.policy) {
            manifest.policies.push(s.policy);
        }
    }
}

fn simulate(run: RunArgs, seed: Option<u64>, policy: Option<PolicyKind>) -> Result<()> {
    let mut s = setup("simulate", &run)?;
    let mut c = s.config.experiment.clone();
    c.seed = seed.unwrap_or(c.seed);
    c.policy = policy.unwrap_or(c.policy);
    let runs = run_all(&s, std::slice::from_ref(&c), &run.out)?;
    let summaries: Vec<RunSummary> = runs.iter().map(|r| r.0.clone()).collect();
    harness::write_summary(&run.out.join(SUMMARY_FILE), &summaries)?;
    s.manifest.config.insert("seed".into(), c.seed.into());
    s.manifest.config.insert("policy".into(), c.policy.id().into());
    record(&mut s.manifest, &runs);
    s.manifest.outputs.push(SUMMARY_FILE.into());
    s.manifest.write(&run.out)?;
    let r = &summaries[0];
    println!(
        "{} seed {}: ctr {:.6} mmf {:.6} r {:.6} regret {}",
        r.policy,
        r.seed,
        r.ctr,
        r.mmf,
        r.r,
        r.regret.map_or("-".into(), |g| format!("{g:.6}"))
    );
    Ok(())
}

fn run_oracle(instance: &Path, trace: Option<&Path>, relaxed: bool) -> Result<()> {
    let inst = harness::load_offline_instance(instance)?;
    let mode = if relaxed { BudgetMode::Relaxed } else { BudgetMode::Enforced };
    let sol = oracle::solve_offline_optimum(&inst, mode)?;
    println!("R_OPT = {}", sol.value);
    println!("decisions = {}", serde_json::to_string(&sol.decisions)?);
    if let Some(path) = trace {
        let decisions = harness::load_decisions(path)?;
        let realized = inst.realized_objective(&decisions)?;
        println!("realized = {}", realized.value);
        println!("budget_feasible = {}", realized.budget_feasible);
        println!("regret = {}", oracle::regret(realized.value, sol.value));
    }
    Ok(())
}

fn ablate(run: RunArgs, seeds: Seeds, policies: Vec<PolicyKind>) -> Result<()> {
    let mut s = setup("ablate", &run)?;
    let policies = if policies.is_empty() {
        PolicyKind::ALL.into_iter().filter(|p| *p != PolicyKind::OracleGreedy).collect()
    } else {
        policies
    };
    let configs: Vec<_> = policies
        .iter()
        .flat_map(|&policy| {
            let base = &s.config.experiment;
            seeds.0.iter().map(move |&seed| fairloop::ExperimentConfig {
                policy,
                seed,
                ..base.clone()
            })
        })
        .collect();
    let runs = run_all(&s, &configs, &run.out)?;
    let summaries: Vec<RunSummary> = runs.iter().map(|r| r.0.clone()).collect();
    let name = "comparison.csv";
    harness::write_summary(&run.out.join(name), &summaries)?;
    record(&mut s.manifest, &runs);
    s.manifest.outputs.push(name.into());
    s.manifest.write(&run.out)?;

    println!("{:<16} {:>9} {:>9} {:>9}", "policy", "ctr", "mmf", "r");
    for p in &policies {
        let rows: Vec<&RunSummary> = summaries.iter().filter(|r| r.policy == *p).collect();
        let mean = |f: fn(&RunSummary) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
        println!("{:<16} {:>9.5} {:>9.5} {:>9.5}", p.id(), mean(|r| r.ctr), mean(|r| r.mmf), mean(|r| r.r));
    }
    Ok(())
}

fn lambda_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1.0],
        n => (0..n).map(|k| 10f64.powf(-3.0 + 3.0 * k as f64 / (n - 1) as f64)).collect(),
    }
}

fn sweep(run: RunArgs, seeds: Seeds, lambdas: Vec<f64>, points: usize) -> Result<()> {
    let mut s = setup("sweep", &run)?;
    let lambdas = if lambdas.is_empty() { lambda_grid(points) } else { lambdas };
    if lambdas.is_empty() {
        bail!("no lambda values to sweep");
    }
    if let Some(l) = lambdas.iter().find(|l| !(1e-3..=1.0).contains(*l)) {
        bail!("lambda {l} outside [1e-3, 1]");
    }
    let configs: Vec<_> = lambdas
        .iter()
        .flat_map(|&lambda| {
            let base = &s.config.experiment;
            seeds.0.iter().map(move |&seed| fairloop::ExperimentConfig {
                lambda,
                seed,
                ..base.clone()
            })
        })
        .collect();
    let sub = run.out.join("runs");
    std::fs::create_dir_all(&sub)?;
    let runs = run_all(&s, &configs, &sub)?;

    let name = "sweep.csv";
    let mut w = csv::Writer::from_path(run.out.join(name))?;
    w.write_record(["lambda", "policy", "seeds", "ctr", "mmf"])?;
    for (chunk, lambda) in runs.chunks(seeds.0.len()).zip(&lambdas) {
        let n = chunk.len() as f64;
        let ctr = chunk.iter().map(|r| r.0.ctr).sum::<f64>() / n;
        let mmf = chunk.iter().map(|r| r.0.mmf).sum::<f64>() / n;
        w.serialize((lambda, s.config.experiment.policy.id(), chunk.len(), ctr, mmf))?;
        println!("lambda {lambda:<10.4e} ctr {ctr:.6} mmf {mmf:.6}");
    }
    w.flush()?;
    let summaries: Vec<RunSummary> = runs.iter().map(|r| r.0.clone()).collect();
    harness::write_summary(&run.out.join(SUMMARY_FILE), &summaries)?;
    record(&mut s.manifest, &runs);
    s.manifest.outputs = s.manifest.outputs.iter().map(|o| format!("runs/{o}")).collect();
    s.manifest.timings_ms = std::mem::take(&mut s.manifest.timings_ms)
        .into_iter()
        .map(|(k, v)| (format!("runs/{k}"), v))
        .collect();
    s.manifest.outputs.extend([name.to_string(), SUMMARY_FILE.to_string()]);
    s.manifest.write(&run.out)?;
    Ok(())
}

fn ingest(interactions: &Path, providers: &Path, min_degree: usize, out: &Path) -> Result<()> {
    let started = Instant::now();
    let table = harness::load_interactions(interactions)?;
    let map = harness::load_provider_map(providers)?;
    let ds = harness::preprocess(&table, &map, min_degree)?;
    let files = harness::write_dataset(&ds, out)?;
    println!(
        "{} users, {} items, {} providers; {} train / {} test interactions ({} ms)",
        ds.users.len(),
        ds.items.len(),
        ds.providers.len(),
        ds.train.len(),
        ds.test.len(),
        started.elapsed().as_millis()
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate { run, seed, policy } => simulate(run, seed, policy),
        Command::Oracle {
            instance,
            trace,
            relaxed,
        } => run_oracle(&instance, trace.as_deref(), relaxed),
        Command::Ablate { run, seeds, policies } => ablate(run, seeds, policies),
        Command::Sweep {
            run,
            seeds,
            lambdas,
            points,
        } => sweep(run, seeds, lambdas, points),
        Command::Ingest {
            interactions,
            providers,
            min_degree,
            out,
        } => ingest(&interactions, &providers, min_degree, &out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
