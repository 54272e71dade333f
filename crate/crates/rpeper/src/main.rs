use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use rpeper::config::RunConfig;
use rpeper::core::envs::{make_env, ENV_NAMES};
use rpeper::core::replay::{BufferConfig, PrioritizedBuffer, Transition};
use rpeper::harness::{self, EvalRecord, ExperimentResult, RunOptions};
use rpeper::{Error, Result};

const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "rpeper", version, about = "Reward-prediction-error prioritized replay experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write CSVs and a summary.
    Train {
        config: PathBuf,
        /// Seeds to run concurrently.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        quiet: bool,
    },
    /// Train several variants and write a comparison table.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Table path; defaults to `compare_<env>.csv` in the first variant's output dir.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        quiet: bool,
    },
    /// Print an environment's spec as JSON.
    EnvSpec { name: String },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Time buffer insert, sample and priority update.
    BufferBench {
        #[arg(long, default_value_t = 100_000)]
        capacity: usize,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 2_000)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn progress(label: &str, seed: u64, r: &EvalRecord) {
    eprintln!("{label} seed {seed} step {:>8} return {:>10.3} +- {:.3}", r.env_step, r.mean, r.std);
}

fn options(workers: usize, quiet: bool) -> RunOptions<'static> {
    RunOptions {
        workers,
        progress: if quiet { None } else { Some(&progress) },
    }
}

fn exit_for(results: &[ExperimentResult]) -> ExitCode {
    for r in results {
        for s in r.summary.seeds.iter().filter(|s| s.score.is_none()) {
            eprintln!("{}: seed {} diverged", r.summary.label, s.seed);
        }
    }
    if results.iter().any(ExperimentResult::any_diverged) {
        ExitCode::from(EXIT_DIVERGED)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Train { config, workers, quiet } => {
            let cfg = RunConfig::load(&config)?;
            let result = harness::run_experiment_with(&cfg, &options(workers, quiet))?;
            let s = &result.summary;
            println!(
                "{}: score {:.3} +- {:.3} over {} seeds (scripted {:.3}); summary at {}",
                s.label,
                s.score.mean,
                s.score.half_width.unwrap_or(f64::NAN),
                s.completed,
                s.scripted_return,
                result.summary_path().display()
            );
            Ok(exit_for(&[result]))
        }
        Command::Compare {
            configs,
            out,
            workers,
            quiet,
        } => {
            let cfgs = configs.iter().map(|p| RunConfig::load(p)).collect::<Result<Vec<_>>>()?;
            for c in &cfgs {
                c.validate()?;
            }
            let first = &cfgs[0];
            if let Some(c) = cfgs.iter().find(|c| c.eval_grid() != first.eval_grid()) {
                return Err(Error::config("eval_every", format!("variant `{}` has a different evaluation grid", c.label())));
            }
            let opts = options(workers, quiet);
            let results = cfgs
                .iter()
                .map(|c| harness::run_experiment_with(c, &opts))
                .collect::<Result<Vec<_>>>()?;
            let table = harness::compare(&results)?;
            let path = out.unwrap_or_else(|| first.resolved_output_dir().join(format!("compare_{}.csv", first.env)));
            let csv = table.to_csv();
            harness::write_atomic(&path, csv.as_bytes())?;
            print!("{csv}");
            Ok(exit_for(&results))
        }
        Command::EnvSpec { name } => {
            let env = make_env(&name).ok_or_else(|| {
                Error::config("env", format!("unknown env `{name}`; expected one of {ENV_NAMES:?}"))
            })?;
            let s = env.spec();
            let doc = json!({
                "name": s.name,
                "state_dim": s.state_dim,
                "action_dim": s.action_dim,
                "action_low": s.action_low,
                "action_high": s.action_high,
                "horizon": s.horizon,
                "reward_range": [s.reward_range.0, s.reward_range.1],
                "dt": s.dt,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            cfg.validate()?;
            println!("{}: ok ({} seeds, {} evaluation points)", cfg.label(), cfg.seeds.len(), cfg.eval_grid().len());
            Ok(ExitCode::SUCCESS)
        }
        Command::BufferBench {
            capacity,
            batch,
            iters,
            seed,
        } => {
            buffer_bench(capacity, batch, iters, seed)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn buffer_bench(capacity: usize, batch: usize, iters: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (name, alpha) in [("uniform", 0.0), ("prioritized", 0.7)] {
        let mut cfg = BufferConfig::new(capacity, 4, 2);
        cfg.alpha = alpha;
        let mut buffer = PrioritizedBuffer::new(cfg)?;
        let transition = |rng: &mut ChaCha8Rng| Transition {
            state: (0..4).map(|_| rng.random()).collect(),
            action: (0..2).map(|_| rng.random()).collect(),
            reward: rng.random(),
            next_state: (0..4).map(|_| rng.random()).collect(),
            terminal: false,
        };

        let start = Instant::now();
        for _ in 0..capacity {
            let t = transition(&mut rng);
            let score = rng.random::<f64>();
            buffer.insert(t, Some(score))?;
        }
        let insert_ns = start.elapsed().as_nanos() as f64 / capacity as f64;

        let mut sample_ns = 0.0;
        let mut update_ns = 0.0;
        for _ in 0..iters {
            let start = Instant::now();
            let b = buffer.sample(batch, &mut rng)?;
            sample_ns += start.elapsed().as_nanos() as f64;
            let scores: Vec<f64> = (0..b.len()).map(|_| rng.random()).collect();
            let start = Instant::now();
            buffer.update_priorities(&b.slots, &scores)?;
            update_ns += start.elapsed().as_nanos() as f64;
        }
        let doc = json!({
            "sampler": name,
            "capacity": capacity,
            "batch": batch,
            "insert_ns": insert_ns,
            "sample_batch_us": sample_ns / iters as f64 / 1e3,
            "update_batch_us": update_ns / iters as f64 / 1e3,
        });
        println!("{doc}");
    }
    Ok(())
}
