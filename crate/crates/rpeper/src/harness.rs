//! Seeded experiment runs, evaluation curves and variant comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rpeper_core::agents::{evaluate_policy, Agent, EpisodeLoop};
use rpeper_core::envs::{make_env, Env};
use rpeper_core::replay::PrioritizedBuffer;

use crate::config::RunConfig;
use crate::stats::{self, Interval};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "env_step,return_mean,return_std,episodes";

/// Evaluation episodes use reset seeds `EVAL_SEED_BASE + k`, shared by every
/// run and by the scripted controller so that curves are comparable.
pub const EVAL_SEED_BASE: u64 = 1_000_000;

/// Number of trailing evaluation points averaged into a run's score.
pub const SCORE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub env_step: u64,
    pub returns: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl EvalRecord {
    pub fn new(env_step: u64, returns: Vec<f64>) -> Self {
        Self {
            env_step,
            mean: stats::mean(&returns),
            std: stats::sample_std(&returns),
            returns,
        }
    }
}

/// A row read back from a per-seed CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub env_step: u64,
    pub return_mean: f64,
    pub return_std: f64,
    pub episodes: usize,
}

pub fn eval_seeds(episodes: usize) -> Vec<u64> {
    (0..episodes as u64).map(|k| EVAL_SEED_BASE + k).collect()
}

/// Trailing moving average. Early entries average over the history that
/// exists, so the output has the input's length.
pub fn smooth(curve: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::config("window", "must be at least 1"));
    }
    let mut out = Vec::with_capacity(curve.len());
    let mut sum = 0.0;
    for (i, &v) in curve.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= curve[i - window];
        }
        let n = (i + 1).min(window);
        // Recompute short windows exactly; the running sum drifts.
        let value = if i % 64 == 0 {
            let lo = (i + 1).saturating_sub(window);
            let exact: f64 = curve[lo..=i].iter().sum();
            sum = exact;
            exact / n as f64
        } else {
            sum / n as f64
        };
        out.push(value);
    }
    Ok(out)
}

/// Mean of the last [`SCORE_WINDOW`] values.
pub fn final_score(means: &[f64]) -> f64 {
    let k = means.len().min(SCORE_WINDOW);
    stats::mean(&means[means.len() - k..])
}

pub fn to_csv(records: &[EvalRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(out, "{},{:?},{:?},{}", r.env_step, r.mean, r.std, r.returns.len()).expect("string write");
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::format("evaluation csv", format!("header must be `{CSV_HEADER}`")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| Error::format("evaluation csv", format!("line {}: bad {what}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad("column count"));
            }
            Ok(CsvRow {
                env_step: f[0].parse().map_err(|_| bad("env_step"))?,
                return_mean: f[1].parse().map_err(|_| bad("return_mean"))?,
                return_std: f[2].parse().map_err(|_| bad("return_std"))?,
                episodes: f[3].parse().map_err(|_| bad("episodes"))?,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    parse_csv(&fs::read_to_string(path).map_err(Error::io(path))?)
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(Error::io(dir))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(Error::io(&tmp))?;
    fs::rename(&tmp, path).map_err(Error::io(path))
}

/// Undiscounted returns of the agent's deterministic policy on `seeds`.
pub fn evaluate_agent(agent: &Agent, env: &mut dyn Env, seeds: &[u64]) -> Result<Vec<f64>> {
    // Greedy actions never consume randomness.
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    Ok(evaluate_policy(env, seeds, &mut |_, obs| agent.select_action(obs, false, &mut unused))?)
}

/// Returns of the env's scripted controller on `seeds`.
pub fn evaluate_scripted(env: &mut dyn Env, seeds: &[u64]) -> Result<Vec<f64>> {
    Ok(evaluate_policy(env, seeds, &mut |env, obs| Ok(env.scripted_action(obs)))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeedStatus {
    Completed,
    Diverged { env_step: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub status: SeedStatus,
    pub records: Vec<EvalRecord>,
    pub csv: PathBuf,
}

impl SeedRun {
    pub fn completed(&self) -> bool {
        self.status == SeedStatus::Completed
    }

    pub fn means(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    #[serde(flatten)]
    pub status: SeedStatus,
    pub csv: String,
    pub final_return: Option<f64>,
    pub final_smoothed_return: Option<f64>,
    /// Mean of the last ten evaluation means.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub env_step: u64,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub env: String,
    pub agent: String,
    pub sampler: String,
    pub total_steps: u64,
    pub eval_steps: Vec<u64>,
    pub eval_episodes: usize,
    pub smoothing_window: usize,
    pub scripted_return: f64,
    pub seeds: Vec<SeedSummary>,
    pub completed: usize,
    pub failed: usize,
    /// Across completed seeds, per evaluation step.
    pub curve: Vec<CurvePoint>,
    pub smoothed_curve: Vec<f64>,
    /// Interval over completed seeds of the per-seed scores.
    pub score: Interval,
    pub final_smoothed_return: Interval,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: RunConfig,
    pub dir: PathBuf,
    pub runs: Vec<SeedRun>,
    pub summary: Summary,
}

impl ExperimentResult {
    pub fn any_diverged(&self) -> bool {
        self.runs.iter().any(|r| !r.completed())
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join("summary.json")
    }
}

/// Called after each evaluation with the run label and seed.
pub type Progress = dyn Fn(&str, u64, &EvalRecord) + Sync;

/// Knobs that affect scheduling but never results.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Seeds run on up to this many threads; 0 and 1 both mean sequential.
    pub workers: usize,
    pub progress: Option<&'a Progress>,
}

fn is_divergence(e: &rpeper_core::Error) -> bool {
    matches!(
        e,
        rpeper_core::Error::Divergence { .. } | rpeper_core::Error::NonFiniteGradient(_)
    )
}

/// Trains and evaluates one seed. Divergence ends the run early with a
/// failed status; other errors propagate.
pub fn run_seed(
    cfg: &RunConfig,
    seed: u64,
    progress: Option<&Progress>,
) -> Result<(SeedStatus, Vec<EvalRecord>)> {
    let env = make_env(&cfg.env).ok_or_else(|| Error::config("env", "unknown env"))?;
    let spec = env.spec().clone();
    let mut eval_env = make_env(&cfg.env).expect("same name");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = Agent::new(cfg.agent_config()?, &spec, &mut rng)?;
    let buffer = PrioritizedBuffer::new(cfg.buffer_config(spec.state_dim, spec.action_dim))?;
    let mut episodes = EpisodeLoop::new(env, buffer, cfg.loop_config(seed))?;
    let seeds = eval_seeds(cfg.eval_episodes);
    let label = cfg.label();

    let mut records = Vec::new();
    for step in cfg.eval_grid() {
        let todo = step - episodes.env_steps();
        if let Err(e) = episodes.run(&mut agent, todo, &mut rng, &mut |_| {}) {
            if is_divergence(&e) {
                let status = SeedStatus::Diverged {
                    env_step: episodes.env_steps(),
                    reason: e.to_string(),
                };
                return Ok((status, records));
            }
            return Err(e.into());
        }
        let record = EvalRecord::new(step, evaluate_agent(&agent, &mut *eval_env, &seeds)?);
        if !record.mean.is_finite() {
            let status = SeedStatus::Diverged {
                env_step: step,
                reason: "non-finite evaluation return".into(),
            };
            return Ok((status, records));
        }
        if let Some(p) = progress {
            p(&label, seed, &record);
        }
        records.push(record);
    }
    Ok((SeedStatus::Completed, records))
}

/// Runs every seed of `cfg` and writes `seed_<n>.csv`, `config.json` and
/// `summary.json` under `<output_dir>/<label>/`.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, &RunOptions::default())
}

pub fn run_experiment_with(cfg: &RunConfig, opts: &RunOptions<'_>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let dir = cfg.resolved_output_dir().join(cfg.label());
    fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
    write_atomic(&dir.join("config.json"), cfg.to_json().as_bytes())?;

    let outcomes: Vec<Result<(SeedStatus, Vec<EvalRecord>)>> = if opts.workers <= 1 {
        cfg.seeds.iter().map(|&s| run_seed(cfg, s, opts.progress)).collect()
    } else {
        let mut slots: Vec<Option<Result<_>>> = (0..cfg.seeds.len()).map(|_| None).collect();
        let chunk = cfg.seeds.len().div_ceil(opts.workers);
        std::thread::scope(|scope| {
            for (seeds, out) in cfg.seeds.chunks(chunk).zip(slots.chunks_mut(chunk)) {
                scope.spawn(move || {
                    for (&s, slot) in seeds.iter().zip(out) {
                        *slot = Some(run_seed(cfg, s, opts.progress));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every seed ran")).collect()
    };

    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for (&seed, outcome) in cfg.seeds.iter().zip(outcomes) {
        let (status, records) = outcome?;
        let csv = dir.join(format!("seed_{seed}.csv"));
        write_atomic(&csv, to_csv(&records).as_bytes())?;
        runs.push(SeedRun {
            seed,
            status,
            records,
            csv,
        });
    }

    let mut env = make_env(&cfg.env).expect("validated env");
    let scripted = stats::mean(&evaluate_scripted(&mut *env, &eval_seeds(cfg.eval_episodes))?);
    let summary = summarize(cfg, &runs, scripted)?;
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    write_atomic(&dir.join("summary.json"), text.as_bytes())?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        dir,
        runs,
        summary,
    })
}

/// Aggregates per-seed evaluation curves. Only the evaluation means enter,
/// so the summary can be rebuilt from the CSV files alone.
pub fn summarize(cfg: &RunConfig, runs: &[SeedRun], scripted_return: f64) -> Result<Summary> {
    let grid = cfg.eval_grid();
    let done: Vec<&SeedRun> = runs.iter().filter(|r| r.completed()).collect();
    let mut seeds = Vec::with_capacity(runs.len());
    let mut scores = Vec::new();
    let mut finals = Vec::new();
    for r in runs {
        let means = r.means();
        let (final_return, final_smoothed, score) = if r.completed() {
            let smoothed = smooth(&means, cfg.smoothing_window)?;
            let fs = *smoothed.last().expect("grid is non-empty");
            let sc = final_score(&means);
            scores.push(sc);
            finals.push(fs);
            (means.last().copied(), Some(fs), Some(sc))
        } else {
            (None, None, None)
        };
        seeds.push(SeedSummary {
            seed: r.seed,
            status: r.status.clone(),
            csv: r
                .csv
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            final_return,
            final_smoothed_return: final_smoothed,
            score,
        });
    }
    let curve: Vec<CurvePoint> = grid
        .iter()
        .enumerate()
        .map(|(i, &step)| {
            let at: Vec<f64> = done.iter().map(|r| r.records[i].mean).collect();
            CurvePoint {
                env_step: step,
                mean: if at.is_empty() { f64::NAN } else { stats::mean(&at) },
                std: stats::sample_std(&at),
                seeds: at.len(),
            }
        })
        .collect();
    let smoothed_curve = smooth(&curve.iter().map(|p| p.mean).collect::<Vec<_>>(), cfg.smoothing_window)?;
    Ok(Summary {
        label: cfg.label(),
        env: cfg.env.clone(),
        agent: serde_json::to_value(cfg.agent)?.as_str().unwrap_or_default().to_owned(),
        sampler: cfg.sampler.name().into(),
        total_steps: cfg.total_steps,
        eval_steps: grid,
        eval_episodes: cfg.eval_episodes,
        smoothing_window: cfg.smoothing_window,
        scripted_return,
        completed: done.len(),
        failed: runs.len() - done.len(),
        seeds,
        curve,
        smoothed_curve,
        score: Interval::of(&scores),
        final_smoothed_return: Interval::of(&finals),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub variant: String,
    pub env: String,
    pub agent: String,
    pub sampler: String,
    pub seeds: usize,
    pub completed: usize,
    pub score: Interval,
    pub rank: usize,
    pub winner: bool,
}

pub const COMPARE_HEADER: &str =
    "variant,env,agent,sampler,seeds,completed,score_mean,score_std,ci_low,ci_high,rank,winner";

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let mut out = String::from(COMPARE_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{:?},{:?},{},{},{},{}",
                r.variant,
                r.env,
                r.agent,
                r.sampler,
                r.seeds,
                r.completed,
                r.score.mean,
                r.score.std,
                opt(r.score.low()),
                opt(r.score.high()),
                r.rank,
                r.winner
            )
            .expect("string write");
        }
        out
    }
}

/// Ranks variants by the across-seed mean of their scores. Variants must
/// share the env and evaluation grid.
pub fn compare(results: &[ExperimentResult]) -> Result<ComparisonTable> {
    let first = results
        .first()
        .ok_or_else(|| Error::config("variants", "need at least one variant"))?;
    for r in results {
        let s = &r.summary;
        if s.env != first.summary.env {
            return Err(Error::config("env", format!("variant `{}` uses a different env", s.label)));
        }
        if s.total_steps != first.summary.total_steps {
            return Err(Error::config("total_steps", format!("variant `{}` differs", s.label)));
        }
        if s.eval_steps != first.summary.eval_steps || s.eval_episodes != first.summary.eval_episodes {
            return Err(Error::config("eval_every", format!("variant `{}` has a different evaluation grid", s.label)));
        }
    }
    let mut labels: Vec<&str> = results.iter().map(|r| r.summary.label.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::config("name", "variant labels must be distinct"));
    }

    let mut order: Vec<usize> = (0..results.len()).collect();
    let key = |i: usize| {
        let m = results[i].summary.score.mean;
        if m.is_nan() {
            f64::NEG_INFINITY
        } else {
            m
        }
    };
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    let mut rank = vec![0; results.len()];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos + 1;
    }
    let rows = results
        .iter()
        .enumerate()
        .map(|(i, r)| ComparisonRow {
            variant: r.summary.label.clone(),
            env: r.summary.env.clone(),
            agent: r.summary.agent.clone(),
            sampler: r.summary.sampler.clone(),
            seeds: r.summary.seeds.len(),
            completed: r.summary.completed,
            score: r.summary.score,
            rank: rank[i],
            winner: rank[i] == 1 && r.summary.completed > 0,
        })
        .collect();
    Ok(ComparisonTable { rows })
}

/// Copies of `base` that differ only in the reward-loss weight.
pub fn xi2_sweep(base: &RunConfig, values: &[f64]) -> Vec<RunConfig> {
    values
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            cfg.xi[1] = v;
            cfg.name = Some(format!("{}_xi2_{v}", base.label()));
            cfg
        })
        .collect()
}
