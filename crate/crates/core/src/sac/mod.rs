//! Soft actor-critic built from scratch on the dense-network kernels in
//! this module tree: replay, twin critics, reparameterized policies, a
//! learned temperature, and a trainer that couples the agent to the
//! building-cluster environment.

pub mod adam;
pub mod agent;
pub mod checkpoint;
pub mod mlp;
pub mod policy;
pub mod real;
pub mod replay;
pub mod special;

pub use agent::{concat_sa, CriticId, SacAgent, UpdateStats};
pub use mlp::{Activation, InitKind, Mlp};
pub use policy::{PolicyKind, PolicyNet};
pub use real::Real;
pub use replay::{Batch, ReplayBuffer, Transition};

use crate::env::{ClusterEnv, EnvError, RewardBreakdown};
use crate::seeds::seeded_rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SacError {
    #[error("invalid hyperparameter `{field}`: {reason}")]
    InvalidHyperparameter {
        field: &'static str,
        reason: String,
    },
    #[error("non-finite value detected in {context} (episode {episode})")]
    NonFinite { context: String, episode: u64 },
    #[error("environment failure: {0}")]
    Env(#[from] EnvError),
}

/// Learning configuration. Every field has a working default; JSON
/// configs may override any subset but unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SacHyperparameters {
    /// Discount factor.
    pub gamma: f64,
    /// Target-network blend rate per update.
    pub tau: f64,
    /// Entropy floor the temperature controller steers toward.
    pub target_entropy: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_alpha: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Hidden-layer widths shared by actor and critics.
    pub hidden: Vec<usize>,
    /// Negative-side slope of the hidden activation.
    pub activation_slope: f64,
    pub weight_init: InitKind,
    pub layer_norm: bool,
    pub log_std_min: f64,
    pub log_std_max: f64,
    pub policy: PolicyKind,
    pub initial_alpha: f64,
}

impl Default for SacHyperparameters {
    fn default() -> Self {
        SacHyperparameters {
            gamma: 0.995,
            tau: 0.005,
            target_entropy: -24.0,
            lr_actor: 3e-4,
            lr_critic: 3e-4,
            lr_alpha: 3e-4,
            buffer_capacity: 1_000_000,
            batch_size: 256,
            hidden: vec![256, 256],
            activation_slope: 0.2,
            weight_init: InitKind::KaimingUniform,
            layer_norm: true,
            log_std_min: -20.0,
            log_std_max: 3.0,
            policy: PolicyKind::GaussianTanh,
            initial_alpha: 1.0,
        }
    }
}

impl SacHyperparameters {
    pub fn validate(&self) -> Result<(), SacError> {
        let fail = |field: &'static str, reason: String| {
            Err(SacError::InvalidHyperparameter { field, reason })
        };
        if !(0.0 < self.gamma && self.gamma <= 1.0) {
            return fail("gamma", format!("must be in (0, 1], got {}", self.gamma));
        }
        if !(0.0 < self.tau && self.tau <= 1.0) {
            return fail("tau", format!("must be in (0, 1], got {}", self.tau));
        }
        for (field, lr) in [
            ("lr_actor", self.lr_actor),
            ("lr_critic", self.lr_critic),
            ("lr_alpha", self.lr_alpha),
        ] {
            if !(lr.is_finite() && lr > 0.0) {
                return fail(field, format!("must be positive, got {lr}"));
            }
        }
        if self.batch_size == 0 {
            return fail("batch_size", "must be positive".into());
        }
        if self.buffer_capacity < self.batch_size {
            return fail(
                "buffer_capacity",
                format!(
                    "must hold at least one batch ({} < {})",
                    self.buffer_capacity, self.batch_size
                ),
            );
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail("hidden", "needs at least one non-empty layer".into());
        }
        if !(self.activation_slope >= 0.0 && self.activation_slope < 1.0) {
            return fail(
                "activation_slope",
                format!("must be in [0, 1), got {}", self.activation_slope),
            );
        }
        if self.log_std_min >= self.log_std_max {
            return fail(
                "log_std_min",
                format!(
                    "must be below log_std_max ({} >= {})",
                    self.log_std_min, self.log_std_max
                ),
            );
        }
        if !(self.initial_alpha.is_finite() && self.initial_alpha > 0.0) {
            return fail(
                "initial_alpha",
                format!("must be positive, got {}", self.initial_alpha),
            );
        }
        if !self.target_entropy.is_finite() {
            return fail("target_entropy", "must be finite".into());
        }
        Ok(())
    }
}

/// Per-episode training summary; loss fields are means over the updates
/// run during the episode (NaN when no update ran yet).
#[derive(Debug, Clone, Copy)]
pub struct EpisodeLog {
    pub episode: u64,
    pub day: usize,
    pub steps: usize,
    pub updates: u64,
    pub episode_return: f64,
    pub alpha: f64,
    pub mean_log_prob: f64,
    pub actor_loss: f64,
    pub critic1_loss: f64,
    pub critic2_loss: f64,
}

/// One step of a deterministic evaluation rollout.
#[derive(Debug, Clone, Copy)]
pub struct EvalStep {
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub aggregate_power: f64,
}

/// Deterministic evaluation rollout over one day.
#[derive(Debug, Clone)]
pub struct EvalLog {
    pub episode_return: f64,
    pub steps: Vec<EvalStep>,
}

/// Owns the agent, the replay buffer, and the training RNG stream; the
/// environment is borrowed per episode so callers control day scheduling.
pub struct Trainer<R: Real> {
    pub agent: SacAgent<R>,
    pub buffer: ReplayBuffer<R>,
    pub rng: ChaCha8Rng,
    pub episode: u64,
    pub updates: u64,
}

impl<R: Real> Trainer<R> {
    /// Two independent seeded streams: one consumed once for network
    /// initialization, one that persists for training.
    pub fn new(
        hp: SacHyperparameters,
        obs_dim: usize,
        act_dim: usize,
        master_seed: u64,
    ) -> Result<Self, SacError> {
        hp.validate()?;
        let mut init_rng = seeded_rng(master_seed, "sac-init");
        let buffer = ReplayBuffer::new(hp.buffer_capacity);
        let agent = SacAgent::new(hp, obs_dim, act_dim, &mut init_rng);
        Ok(Trainer {
            agent,
            buffer,
            rng: seeded_rng(master_seed, "sac-train"),
            episode: 0,
            updates: 0,
        })
    }

    /// Runs one exploration episode on `day`, training after every step
    /// once the buffer holds a full batch. The episode counter doubles as
    /// the environment reset seed so resumed runs replay identically.
    pub fn run_episode(
        &mut self,
        env: &mut ClusterEnv,
        day: usize,
    ) -> Result<EpisodeLog, SacError> {
        let mut obs = env.reset(self.episode, day)?;
        let batch_size = self.agent.hp.batch_size;
        let mut episode_return = 0.0;
        let mut steps = 0usize;
        let mut updates = 0u64;
        let mut sum_lp = 0.0;
        let mut sum_actor = 0.0;
        let mut sum_c1 = 0.0;
        let mut sum_c2 = 0.0;
        let mut alpha = self.agent.alpha();
        loop {
            let action = self.agent.act_stochastic(&obs, &mut self.rng);
            let result = env.step(&action)?;
            self.buffer.push(Transition {
                state: obs.iter().map(|&v| R::from_f64(v)).collect(),
                action: action.iter().map(|&v| R::from_f64(v)).collect(),
                reward: R::from_f64(result.reward),
                next_state: result.observation.iter().map(|&v| R::from_f64(v)).collect(),
                done: result.done,
            });
            episode_return += result.reward;
            steps += 1;
            obs = result.observation;
            if self.buffer.len() >= batch_size {
                let batch = self.buffer.sample(batch_size, &mut self.rng);
                let stats = self.agent.update(&batch, &mut self.rng);
                let finite = stats.critic1_loss.is_finite()
                    && stats.critic2_loss.is_finite()
                    && stats.actor_loss.is_finite()
                    && stats.mean_log_prob.is_finite()
                    && stats.alpha.is_finite();
                if !finite || !self.agent.all_finite() {
                    return Err(SacError::NonFinite {
                        context: "gradient update".into(),
                        episode: self.episode,
                    });
                }
                sum_lp += stats.mean_log_prob;
                sum_actor += stats.actor_loss;
                sum_c1 += stats.critic1_loss;
                sum_c2 += stats.critic2_loss;
                alpha = stats.alpha;
                updates += 1;
                self.updates += 1;
            }
            if result.done {
                break;
            }
        }
        self.episode += 1;
        let denom = if updates > 0 { updates as f64 } else { f64::NAN };
        Ok(EpisodeLog {
            episode: self.episode,
            day,
            steps,
            updates,
            episode_return,
            alpha,
            mean_log_prob: sum_lp / denom,
            actor_loss: sum_actor / denom,
            critic1_loss: sum_c1 / denom,
            critic2_loss: sum_c2 / denom,
        })
    }
}

/// Rolls the deterministic policy over one day without touching the
/// buffer, the optimizers, or any RNG stream.
pub fn evaluate_policy<R: Real>(
    agent: &SacAgent<R>,
    env: &mut ClusterEnv,
    day: usize,
    seed: u64,
) -> Result<EvalLog, SacError> {
    let mut obs = env.reset(seed, day)?;
    let mut episode_return = 0.0;
    let mut steps = Vec::new();
    loop {
        let action = agent.act_deterministic(&obs);
        let result = env.step(&action)?;
        episode_return += result.reward;
        steps.push(EvalStep {
            reward: result.reward,
            breakdown: result.info.breakdown,
            aggregate_power: result.info.aggregate_power,
        });
        obs = result.observation;
        if result.done {
            break;
        }
    }
    Ok(EvalLog {
        episode_return,
        steps,
    })
}
