//! End-to-end experiment pipelines behind the command-line interface:
//! simulate one day under a chosen controller, train the agent over the
//! configured episode budget, and evaluate a checkpoint against the rule
//! baseline. Every artifact lands under the configured output directory.

use crate::baseline::rbc_action;
use crate::config::{ConfigError, ControllerKind, ExperimentConfig};
use crate::env::{ClusterEnv, EnvError};
use crate::hub::SimRecord;
use crate::plot::{write_svg, Chart, Series};
use crate::sac::checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
use crate::sac::{evaluate_policy, EvalLog, Real, SacAgent, SacError, Trainer};
use crate::seeds::seeded_rng;
use crate::unit::base_name;
use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Sac(#[from] SacError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(
        "checkpoint expects a {ckpt_obs}-dim observation / {ckpt_act}-dim action \
         environment, but this configuration produces {env_obs}/{env_act}"
    )]
    DimensionMismatch {
        ckpt_obs: usize,
        ckpt_act: usize,
        env_obs: usize,
        env_act: usize,
    },
    #[error(
        "training aborted at episode {episode} after a non-finite update; \
         last good checkpoint: {last_good}"
    )]
    Aborted {
        episode: u64,
        last_good: String,
        #[source]
        source: SacError,
    },
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Scalar aggregates of one evaluation rollout, for comparison reporting.
#[derive(Debug, Clone, Copy)]
pub struct RolloutSummary {
    pub episode_return: f64,
    /// Highest cluster demand over the day, W.
    pub peak_power: f64,
    /// Sum of the unweighted comfort penalty over the day.
    pub comfort_penalty: f64,
    /// Steps whose demand stayed at or below the threshold.
    pub steps_within_threshold: usize,
    pub steps: usize,
}

impl RolloutSummary {
    pub fn from_log(log: &EvalLog, p_max: f64) -> Self {
        let peak_power = log
            .steps
            .iter()
            .map(|s| s.aggregate_power)
            .fold(f64::NEG_INFINITY, f64::max);
        RolloutSummary {
            episode_return: log.episode_return,
            peak_power,
            comfort_penalty: log.steps.iter().map(|s| s.breakdown.p_temp).sum(),
            steps_within_threshold: log
                .steps
                .iter()
                .filter(|s| s.aggregate_power <= p_max)
                .count(),
            steps: log.steps.len(),
        }
    }

    /// Fraction of steps with demand at or below the threshold.
    pub fn within_fraction(&self) -> f64 {
        if self.steps == 0 {
            return 1.0;
        }
        self.steps_within_threshold as f64 / self.steps as f64
    }
}

/// Output of `simulate` (and of the policy half of `evaluate`).
#[derive(Debug, Clone)]
pub struct SimulateArtifacts {
    pub csv_paths: Vec<PathBuf>,
    pub plot_paths: Vec<PathBuf>,
    pub summary: RolloutSummary,
}

/// Output of `train`.
#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub log_path: PathBuf,
    pub final_checkpoint: PathBuf,
    pub best_checkpoint: PathBuf,
    pub curve_path: PathBuf,
    /// Episodes completed across all runs of this output directory.
    pub episodes_done: u64,
    pub best_return: f64,
}

/// Output of `evaluate`: the policy rollout artifacts plus the baseline
/// comparison.
#[derive(Debug, Clone)]
pub struct EvaluateArtifacts {
    pub policy: SimulateArtifacts,
    pub baseline_csv_paths: Vec<PathBuf>,
    pub comparison_path: PathBuf,
    pub policy_summary: RolloutSummary,
    pub baseline_summary: RolloutSummary,
}

/// Rolls the fixed-setpoint rule over one day by injecting physical
/// setpoints directly, bypassing the normalized action mapping.
pub fn rollout_rbc(
    env: &mut ClusterEnv,
    config: &ExperimentConfig,
    day: usize,
    seed: u64,
) -> Result<EvalLog, ExperimentError> {
    let actions = rbc_action(env.action_spec(), &config.rbc)?;
    env.reset(seed, day)?;
    let mut episode_return = 0.0;
    let mut steps = Vec::new();
    loop {
        let result = env.step_physical(&actions)?;
        episode_return += result.reward;
        steps.push(crate::sac::EvalStep {
            reward: result.reward,
            breakdown: result.info.breakdown,
            aggregate_power: result.info.aggregate_power,
        });
        if result.done {
            break;
        }
    }
    Ok(EvalLog {
        episode_return,
        steps,
    })
}

/// Hour of day at the start of step `k`.
fn step_hours(config: &ExperimentConfig, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| k as f64 * config.hub.step_seconds / 3600.0)
        .collect()
}

fn power_chart(config: &ExperimentConfig, log: &EvalLog, label: &str) -> Chart {
    let hours = step_hours(config, log.steps.len());
    let points = hours
        .iter()
        .zip(&log.steps)
        .map(|(&h, s)| (h, s.aggregate_power))
        .collect();
    Chart::new("Cluster HVAC demand", "hour of day", "power [W]")
        .with_series(Series::new(label, points))
        .with_threshold(
            format!("threshold {:.0} W", config.reward.p_max),
            config.reward.p_max,
        )
}

fn reward_chart(config: &ExperimentConfig, log: &EvalLog) -> Chart {
    let hours = step_hours(config, log.steps.len());
    let series_of = |label: &str, f: fn(&crate::sac::EvalStep) -> f64| {
        Series::new(
            label,
            hours
                .iter()
                .zip(&log.steps)
                .map(|(&h, s)| (h, f(s)))
                .collect(),
        )
    };
    Chart::new("Reward components", "hour of day", "value")
        .with_series(series_of("reward", |s| s.reward))
        .with_series(series_of("power penalty", |s| s.breakdown.p_hvac))
        .with_series(series_of("comfort penalty", |s| s.breakdown.p_temp))
        .with_series(series_of("peak penalty", |s| s.breakdown.p_peak))
}

/// Pulls every zone/floor air temperature column out of the run record.
fn zone_temperature_series(record: &SimRecord) -> Vec<Series> {
    let mut series = Vec::new();
    for table in &record.units {
        for (col, name) in table.output_names.iter().enumerate() {
            let base = base_name(name);
            if base != "Zone Air Temperature" && base != "Floor Air Temperature" {
                continue;
            }
            let points = table
                .outputs
                .iter()
                .enumerate()
                .map(|(k, row)| (k as f64, row[col]))
                .collect();
            series.push(Series::new(format!("{} {}", table.label, name), points));
        }
    }
    series
}

fn temperature_chart(config: &ExperimentConfig, record: &SimRecord) -> Chart {
    let mut chart = Chart::new("Zone temperatures", "step", "temperature [C]");
    let step_seconds = config.hub.step_seconds;
    for mut s in zone_temperature_series(record) {
        // Re-scale the x axis from steps to hours for readability.
        for p in &mut s.points {
            p.0 = p.0 * step_seconds / 3600.0;
        }
        chart.series.push(s);
    }
    chart = chart.with_threshold(format!("comfort low {}", config.reward.t_low), config.reward.t_low);
    chart.thresholds.last_mut().expect("just pushed").color = "#555555".into();
    chart = chart.with_threshold(
        format!("comfort high {}", config.reward.t_high),
        config.reward.t_high,
    );
    chart.thresholds.last_mut().expect("just pushed").color = "#555555".into();
    chart.x_label = "hour of day".into();
    chart
}

/// Writes the three per-rollout plots (demand vs threshold, reward
/// components, zone temperatures) into `dir`.
fn write_rollout_plots(
    config: &ExperimentConfig,
    env: &ClusterEnv,
    log: &EvalLog,
    label: &str,
    dir: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut paths = Vec::new();
    let power_path = dir.join("power.svg");
    write_svg(&power_path, &power_chart(config, log, label)).map_err(io_at(&power_path))?;
    paths.push(power_path);
    let reward_path = dir.join("reward_breakdown.svg");
    write_svg(&reward_path, &reward_chart(config, log)).map_err(io_at(&reward_path))?;
    paths.push(reward_path);
    let temps_path = dir.join("zone_temperatures.svg");
    write_svg(&temps_path, &temperature_chart(config, env.hub().record()))
        .map_err(io_at(&temps_path))?;
    paths.push(temps_path);
    Ok(paths)
}

fn ensure_dir(dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(io_at(dir))
}

/// Runs the configured controller over the test day and writes per-unit
/// CSVs, the reward trace, and the three rollout plots.
///
/// With the learned controller selected, the policy is a freshly
/// initialized network acting deterministically (the command takes no
/// checkpoint); use `evaluate` to roll out a trained checkpoint.
pub fn simulate(config: &ExperimentConfig) -> Result<SimulateArtifacts, ExperimentError> {
    config.validate()?;
    let mut env = config.build_env()?;
    let label = match config.controller {
        ControllerKind::Rbc => "rule baseline",
        ControllerKind::Sac => "policy",
    };
    let log = match config.controller {
        ControllerKind::Rbc => rollout_rbc(&mut env, config, config.test_day, config.master_seed)?,
        ControllerKind::Sac => {
            let mut init_rng = seeded_rng(config.master_seed, "sac-init");
            let agent: SacAgent<f64> = SacAgent::new(
                config.sac.clone(),
                env.observation_spec().dim(),
                env.action_spec().dim(),
                &mut init_rng,
            );
            evaluate_policy(&agent, &mut env, config.test_day, config.master_seed)?
        }
    };
    ensure_dir(&config.output_dir)?;
    let csv_paths = env.export_csv(&config.output_dir)?;
    let plot_paths = write_rollout_plots(config, &env, &log, label, &config.output_dir)?;
    Ok(SimulateArtifacts {
        csv_paths,
        plot_paths,
        summary: RolloutSummary::from_log(&log, config.reward.p_max),
    })
}

const LOG_HEADER: &str = "episode,return,alpha,logprob,actor_loss,critic1_loss,critic2_loss";

/// Reads (episode, return) rows back from an existing training log so a
/// resumed run extends the curve and the best-return tracking.
fn read_history(path: &Path) -> Result<Vec<(u64, f64)>, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        let mut fields = line.split(',');
        let (Some(ep), Some(ret)) = (fields.next(), fields.next()) else {
            continue;
        };
        if let (Ok(ep), Ok(ret)) = (ep.parse::<u64>(), ret.parse::<f64>()) {
            rows.push((ep, ret));
        }
    }
    Ok(rows)
}

fn learning_curve_chart(history: &[(u64, f64)]) -> Chart {
    let returns: Vec<(f64, f64)> = history.iter().map(|&(e, r)| (e as f64, r)).collect();
    let window = 25usize.min(history.len().max(1));
    let smoothed: Vec<(f64, f64)> = history
        .iter()
        .enumerate()
        .map(|(i, &(e, _))| {
            let lo = (i + 1).saturating_sub(window);
            let mean = history[lo..=i].iter().map(|&(_, r)| r).sum::<f64>()
                / (i - lo + 1) as f64;
            (e as f64, mean)
        })
        .collect();
    Chart::new("Training return", "episode", "return")
        .with_series(Series::new("episode return", returns))
        .with_series(Series::new(format!("mean of last {window}"), smoothed))
}

/// Trains the agent for the configured number of episodes, cycling the
/// training days. Artifacts: `training_log.csv` (appended on resume), a
/// rolling recovery checkpoint, a best-return checkpoint, a final
/// checkpoint, and the learning-curve plot. A non-finite update aborts
/// with an error naming the last good checkpoint.
pub fn train<R: Real>(
    config: &ExperimentConfig,
    resume: Option<&Path>,
) -> Result<TrainArtifacts, ExperimentError> {
    config.validate()?;
    let mut env = config.build_env()?;
    let obs_dim = env.observation_spec().dim();
    let act_dim = env.action_spec().dim();
    ensure_dir(&config.output_dir)?;

    let mut trainer: Trainer<R> = match resume {
        Some(path) => {
            let trainer = load_checkpoint::<R>(path)?;
            if trainer.agent.obs_dim() != obs_dim || trainer.agent.act_dim() != act_dim {
                return Err(ExperimentError::DimensionMismatch {
                    ckpt_obs: trainer.agent.obs_dim(),
                    ckpt_act: trainer.agent.act_dim(),
                    env_obs: obs_dim,
                    env_act: act_dim,
                });
            }
            trainer
        }
        None => Trainer::new(config.sac.clone(), obs_dim, act_dim, config.master_seed)?,
    };

    let log_path = config.output_dir.join("training_log.csv");
    let mut history = Vec::new();
    let mut log_file = if resume.is_some() && log_path.exists() {
        history = read_history(&log_path)?;
        OpenOptions::new()
            .append(true)
            .open(&log_path)
            .map_err(io_at(&log_path))?
    } else {
        let mut f = File::create(&log_path).map_err(io_at(&log_path))?;
        writeln!(f, "{LOG_HEADER}").map_err(io_at(&log_path))?;
        f
    };
    let mut best_return = history
        .iter()
        .map(|&(_, r)| r)
        .fold(f64::NEG_INFINITY, f64::max);

    let final_path = config.output_dir.join("checkpoint_final.json");
    let best_path = config.output_dir.join("checkpoint_best.json");
    let last_path = config.output_dir.join("checkpoint_last.json");
    // Guarantee a recovery point exists before any update can go wrong.
    save_checkpoint(&trainer, &last_path)?;

    let target = config.episodes as u64;
    while trainer.episode < target {
        let day = config.training_days[(trainer.episode as usize) % config.training_days.len()];
        let episode_log = match trainer.run_episode(&mut env, day) {
            Ok(log) => log,
            Err(err @ SacError::NonFinite { .. }) => {
                let episode = trainer.episode;
                // Still draw the curve for the episodes that did finish.
                let curve_path = config.output_dir.join("learning_curve.svg");
                let _ = write_svg(&curve_path, &learning_curve_chart(&history));
                return Err(ExperimentError::Aborted {
                    episode,
                    last_good: last_path.display().to_string(),
                    source: err,
                });
            }
            Err(err) => return Err(err.into()),
        };
        writeln!(
            log_file,
            "{},{},{},{},{},{},{}",
            episode_log.episode,
            episode_log.episode_return,
            episode_log.alpha,
            episode_log.mean_log_prob,
            episode_log.actor_loss,
            episode_log.critic1_loss,
            episode_log.critic2_loss,
        )
        .map_err(io_at(&log_path))?;
        history.push((episode_log.episode, episode_log.episode_return));
        if episode_log.episode_return > best_return {
            best_return = episode_log.episode_return;
            save_checkpoint(&trainer, &best_path)?;
        }
        if trainer.episode.is_multiple_of(config.checkpoint_every as u64) {
            save_checkpoint(&trainer, &last_path)?;
        }
    }

    save_checkpoint(&trainer, &final_path)?;
    if !best_path.exists() {
        // No episode ran this invocation (already at the target); make the
        // artifact set complete anyway.
        save_checkpoint(&trainer, &best_path)?;
    }
    let curve_path = config.output_dir.join("learning_curve.svg");
    write_svg(&curve_path, &learning_curve_chart(&history)).map_err(io_at(&curve_path))?;
    Ok(TrainArtifacts {
        log_path,
        final_checkpoint: final_path,
        best_checkpoint: best_path,
        curve_path,
        episodes_done: trainer.episode,
        best_return,
    })
}

fn comparison_chart(
    config: &ExperimentConfig,
    policy: &EvalLog,
    baseline: &EvalLog,
) -> Chart {
    let hours = step_hours(config, policy.steps.len());
    let points = |log: &EvalLog| {
        hours
            .iter()
            .zip(&log.steps)
            .map(|(&h, s)| (h, s.aggregate_power))
            .collect()
    };
    Chart::new(
        "Cluster HVAC demand: policy vs rule baseline",
        "hour of day",
        "power [W]",
    )
    .with_series(Series::new("policy", points(policy)))
    .with_series(Series::new("rule baseline", points(baseline)))
    .with_threshold(
        format!("threshold {:.0} W", config.reward.p_max),
        config.reward.p_max,
    )
}

/// Rolls a trained checkpoint and the rule baseline over the test day,
/// writing both CSV sets, the three policy rollout plots, and a demand
/// comparison plot with the threshold line.
pub fn evaluate<R: Real>(
    config: &ExperimentConfig,
    checkpoint: &Path,
) -> Result<EvaluateArtifacts, ExperimentError> {
    config.validate()?;
    let mut env = config.build_env()?;
    let obs_dim = env.observation_spec().dim();
    let act_dim = env.action_spec().dim();
    let trainer = load_checkpoint::<R>(checkpoint)?;
    if trainer.agent.obs_dim() != obs_dim || trainer.agent.act_dim() != act_dim {
        return Err(ExperimentError::DimensionMismatch {
            ckpt_obs: trainer.agent.obs_dim(),
            ckpt_act: trainer.agent.act_dim(),
            env_obs: obs_dim,
            env_act: act_dim,
        });
    }

    ensure_dir(&config.output_dir)?;
    let policy_dir = config.output_dir.join("policy");
    let baseline_dir = config.output_dir.join("baseline");
    ensure_dir(&policy_dir)?;
    ensure_dir(&baseline_dir)?;

    let policy_log = evaluate_policy(&trainer.agent, &mut env, config.test_day, config.master_seed)?;
    let policy_csv = env.export_csv(&policy_dir)?;
    let plot_paths = write_rollout_plots(config, &env, &policy_log, "policy", &config.output_dir)?;

    let baseline_log = rollout_rbc(&mut env, config, config.test_day, config.master_seed)?;
    let baseline_csv = env.export_csv(&baseline_dir)?;

    let comparison_path = config.output_dir.join("comparison.svg");
    write_svg(
        &comparison_path,
        &comparison_chart(config, &policy_log, &baseline_log),
    )
    .map_err(io_at(&comparison_path))?;

    let p_max = config.reward.p_max;
    Ok(EvaluateArtifacts {
        policy: SimulateArtifacts {
            csv_paths: policy_csv,
            plot_paths,
            summary: RolloutSummary::from_log(&policy_log, p_max),
        },
        baseline_csv_paths: baseline_csv,
        comparison_path,
        policy_summary: RolloutSummary::from_log(&policy_log, p_max),
        baseline_summary: RolloutSummary::from_log(&baseline_log, p_max),
    })
}

/// Reads the scalar width (4 or 8 bytes) recorded in a checkpoint
/// manifest, so callers can dispatch to the matching `evaluate::<R>`.
pub fn checkpoint_scalar_width(path: &Path) -> Result<u8, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ExperimentError::Checkpoint(e.into()))?;
    let width = doc
        .get("scalar_width")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| {
            ExperimentError::Checkpoint(CheckpointError::Corrupt(
                "manifest has no scalar_width".into(),
            ))
        })?;
    Ok(width as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    /// One small office, two short synthetic days, tiny networks: fast
    /// enough for unit tests of the pipelines.
    fn tiny_config(out: &Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::case_study(out);
        config.hub.units.truncate(1);
        config.weather.truncate(2);
        config.training_days = vec![0];
        config.test_day = 1;
        config.reward = crate::env::RewardConfig::with_threshold(12_000.0);
        config.sac.hidden = vec![8];
        config.sac.batch_size = 16;
        config.sac.buffer_capacity = 4096;
        config.episodes = 2;
        config.checkpoint_every = 1;
        config
    }

    #[test]
    fn simulate_writes_csvs_and_plots() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let artifacts = simulate(&config).unwrap();
        // One unit CSV plus the reward trace.
        assert_eq!(artifacts.csv_paths.len(), 2);
        assert_eq!(artifacts.plot_paths.len(), 3);
        for path in artifacts.csv_paths.iter().chain(&artifacts.plot_paths) {
            assert!(path.exists(), "{} missing", path.display());
            assert!(path.starts_with(dir.path()));
        }
        assert_eq!(artifacts.summary.steps, 96);
        assert!(artifacts.summary.peak_power > 0.0);
    }

    #[test]
    fn simulate_is_deterministic() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = simulate(&tiny_config(dir_a.path())).unwrap();
        let b = simulate(&tiny_config(dir_b.path())).unwrap();
        assert_eq!(a.summary.episode_return, b.summary.episode_return);
        for (pa, pb) in a.csv_paths.iter().zip(&b.csv_paths) {
            let ca = std::fs::read(pa).unwrap();
            let cb = std::fs::read(pb).unwrap();
            assert_eq!(ca, cb, "{} differs", pa.display());
        }
    }

    #[test]
    fn simulate_with_untrained_policy_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path());
        config.controller = ControllerKind::Sac;
        let artifacts = simulate(&config).unwrap();
        assert_eq!(artifacts.summary.steps, 96);
    }

    #[test]
    fn train_writes_log_checkpoints_and_curve() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let artifacts = train::<f64>(&config, None).unwrap();
        assert_eq!(artifacts.episodes_done, 2);
        let log = std::fs::read_to_string(&artifacts.log_path).unwrap();
        let lines: Vec<&str> = log.lines().collect();
        assert_eq!(lines[0], LOG_HEADER);
        assert_eq!(lines.len(), 3); // header + 2 episodes
        assert!(lines[1].starts_with("1,"));
        assert!(lines[2].starts_with("2,"));
        assert!(artifacts.final_checkpoint.exists());
        assert!(artifacts.best_checkpoint.exists());
        assert!(artifacts.curve_path.exists());
        assert!(artifacts.best_return.is_finite());
    }

    #[test]
    fn resume_continues_episode_numbering_and_appends() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path());
        config.episodes = 1;
        let first = train::<f64>(&config, None).unwrap();
        assert_eq!(first.episodes_done, 1);
        config.episodes = 3;
        let second = train::<f64>(&config, Some(&first.final_checkpoint)).unwrap();
        assert_eq!(second.episodes_done, 3);
        let log = std::fs::read_to_string(&second.log_path).unwrap();
        let episodes: Vec<&str> = log
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(episodes, vec!["1", "2", "3"]);
    }

    #[test]
    fn resumed_training_matches_uninterrupted_run() {
        let dir_a = tempfile::tempdir().unwrap();
        let config_a = tiny_config(dir_a.path());
        let straight = train::<f64>(&config_a, None).unwrap();

        let dir_b = tempfile::tempdir().unwrap();
        let mut config_b = tiny_config(dir_b.path());
        config_b.episodes = 1;
        let part = train::<f64>(&config_b, None).unwrap();
        config_b.episodes = 2;
        let resumed = train::<f64>(&config_b, Some(&part.final_checkpoint)).unwrap();

        let tail = |path: &Path| -> String {
            std::fs::read_to_string(path)
                .unwrap()
                .lines()
                .last()
                .unwrap()
                .to_string()
        };
        assert_eq!(tail(&straight.log_path), tail(&resumed.log_path));
    }

    #[test]
    fn evaluate_compares_policy_against_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let trained = train::<f64>(&config, None).unwrap();
        let artifacts = evaluate::<f64>(&config, &trained.final_checkpoint).unwrap();
        assert!(artifacts.comparison_path.exists());
        assert_eq!(artifacts.policy.csv_paths.len(), 2);
        assert_eq!(artifacts.baseline_csv_paths.len(), 2);
        assert_eq!(artifacts.policy_summary.steps, 96);
        assert_eq!(artifacts.baseline_summary.steps, 96);
        // Both rollouts live in distinct subdirectories of the output dir.
        assert!(artifacts.policy.csv_paths[0].starts_with(dir.path().join("policy")));
        assert!(artifacts.baseline_csv_paths[0].starts_with(dir.path().join("baseline")));
    }

    #[test]
    fn evaluate_rejects_mismatched_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let trained = train::<f64>(&config, None).unwrap();
        // Same checkpoint, but now the fleet grows to four units.
        let mut other = ExperimentConfig::case_study(dir.path());
        other.output_dir = dir.path().join("other");
        let err = evaluate::<f64>(&other, &trained.final_checkpoint).unwrap_err();
        match err {
            ExperimentError::DimensionMismatch {
                ckpt_obs,
                ckpt_act,
                env_obs,
                env_act,
            } => {
                assert_eq!((ckpt_obs, ckpt_act), (14, 6));
                assert_eq!((env_obs, env_act), (53, 24));
            }
            other => panic!("expected dimension mismatch, got {other}"),
        }
    }

    #[test]
    fn checkpoint_width_is_readable() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let trained = train::<f64>(&config, None).unwrap();
        assert_eq!(
            checkpoint_scalar_width(&trained.final_checkpoint).unwrap(),
            8
        );
    }

    #[test]
    fn rbc_rollout_summary_counts_threshold_steps() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let mut env = config.build_env().unwrap();
        let log = rollout_rbc(&mut env, &config, config.test_day, 0).unwrap();
        let summary = RolloutSummary::from_log(&log, f64::INFINITY);
        assert_eq!(summary.steps_within_threshold, summary.steps);
        let strict = RolloutSummary::from_log(&log, -1.0);
        assert_eq!(strict.steps_within_threshold, 0);
    }
}
