//! Soft actor-critic agent: twin critics with slow-moving targets, a
//! reparameterized stochastic policy, and a learned temperature.
//!
//! One `update` consumes one minibatch and runs the four phases in a fixed
//! order — critics, actor, temperature, target blend — drawing target noise
//! before actor noise so the whole step is a deterministic function of
//! (parameters, batch, RNG state).

use super::adam::{Adam, ScalarAdam};
use super::mlp::{Activation, Mlp, MlpGrads};
use super::policy::PolicyNet;
use super::replay::Batch;
use super::SacHyperparameters;
use crate::sac::real::Real;
use ndarray::{Array1, Array2};
use rand::Rng;

/// Which of the twin critics a helper should touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticId {
    One,
    Two,
}

/// Scalar diagnostics from one gradient step.
#[derive(Debug, Clone, Copy)]
pub struct UpdateStats {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
    pub mean_log_prob: f64,
    /// Temperature after this step's adjustment.
    pub alpha: f64,
}

pub struct SacAgent<R: Real> {
    pub hp: SacHyperparameters,
    pub actor: PolicyNet<R>,
    pub q1: Mlp<R>,
    pub q2: Mlp<R>,
    pub q1_target: Mlp<R>,
    pub q2_target: Mlp<R>,
    /// Log of the entropy temperature; optimized in f64.
    pub log_alpha: f64,
    pub actor_opt: Adam<R>,
    pub q1_opt: Adam<R>,
    pub q2_opt: Adam<R>,
    pub alpha_opt: ScalarAdam,
    obs_dim: usize,
    act_dim: usize,
}

/// Concatenates states and actions row-wise into critic input.
pub fn concat_sa<R: Real>(states: &Array2<R>, actions: &Array2<R>) -> Array2<R> {
    assert_eq!(states.nrows(), actions.nrows(), "batch size mismatch");
    let (b, s_dim) = states.dim();
    let a_dim = actions.ncols();
    Array2::from_shape_fn((b, s_dim + a_dim), |(i, j)| {
        if j < s_dim {
            states[(i, j)]
        } else {
            actions[(i, j - s_dim)]
        }
    })
}

impl<R: Real> SacAgent<R> {
    /// Draws fresh networks. RNG consumption order: actor, critic 1,
    /// critic 2; the targets start as exact copies of the critics.
    pub fn new<G: Rng>(
        hp: SacHyperparameters,
        obs_dim: usize,
        act_dim: usize,
        rng: &mut G,
    ) -> Self {
        let act = Activation::LeakyRelu(hp.activation_slope);
        let actor_net = Mlp::feedforward(
            obs_dim,
            &hp.hidden,
            2 * act_dim,
            act,
            hp.layer_norm,
            hp.weight_init,
            rng,
        );
        let actor = PolicyNet::new(actor_net, hp.policy, hp.log_std_min, hp.log_std_max);
        let q1 = Mlp::feedforward(
            obs_dim + act_dim,
            &hp.hidden,
            1,
            act,
            hp.layer_norm,
            hp.weight_init,
            rng,
        );
        let q2 = Mlp::feedforward(
            obs_dim + act_dim,
            &hp.hidden,
            1,
            act,
            hp.layer_norm,
            hp.weight_init,
            rng,
        );
        let q1_target = q1.clone();
        let q2_target = q2.clone();
        let actor_opt = Adam::new(hp.lr_actor, actor.net.param_count());
        let q1_opt = Adam::new(hp.lr_critic, q1.param_count());
        let q2_opt = Adam::new(hp.lr_critic, q2.param_count());
        let alpha_opt = ScalarAdam::new(hp.lr_alpha);
        let log_alpha = hp.initial_alpha.ln();
        SacAgent {
            hp,
            actor,
            q1,
            q2,
            q1_target,
            q2_target,
            log_alpha,
            actor_opt,
            q1_opt,
            q2_opt,
            alpha_opt,
            obs_dim,
            act_dim,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    fn obs_row(&self, obs: &[f64]) -> Array2<R> {
        assert_eq!(obs.len(), self.obs_dim, "observation length");
        Array2::from_shape_fn((1, self.obs_dim), |(_, j)| R::from_f64(obs[j]))
    }

    /// Exploration action: one reparameterized draw.
    pub fn act_stochastic<G: Rng>(&self, obs: &[f64], rng: &mut G) -> Vec<f64> {
        let s = self.obs_row(obs);
        let sample = self.actor.sample(&s, rng);
        sample.a.row(0).iter().map(|v| v.to_f64()).collect()
    }

    /// Evaluation action: the distribution's central value, no noise.
    pub fn act_deterministic(&self, obs: &[f64]) -> Vec<f64> {
        let s = self.obs_row(obs);
        let a = self.actor.deterministic(&s);
        a.row(0).iter().map(|v| v.to_f64()).collect()
    }

    /// Soft Bellman targets y = r + γ(1−d)·(min(Q̄₁,Q̄₂)(s′,a′) − α·logπ(a′|s′))
    /// with a′ drawn from the current policy using the supplied noise.
    pub fn compute_targets(&self, batch: &Batch<R>, noise: &Array2<R>) -> Array1<R> {
        let alpha = self.alpha();
        let gamma = self.hp.gamma;
        let sample = self.actor.sample_with_noise(&batch.next_states, noise);
        let sa = concat_sa(&batch.next_states, &sample.a);
        let q1t = self.q1_target.infer(&sa);
        let q2t = self.q2_target.infer(&sa);
        Array1::from_shape_fn(batch.rewards.len(), |i| {
            let qmin = q1t[(i, 0)].to_f64().min(q2t[(i, 0)].to_f64());
            let soft = qmin - alpha * sample.log_prob[i].to_f64();
            let not_done = 1.0 - batch.dones[i].to_f64();
            R::from_f64(batch.rewards[i].to_f64() + gamma * not_done * soft)
        })
    }

    /// Mean-squared Bellman error and its parameter gradients for one
    /// critic, with the targets held fixed.
    pub fn critic_loss_and_grads(
        &self,
        which: CriticId,
        states: &Array2<R>,
        actions: &Array2<R>,
        targets: &Array1<R>,
    ) -> (f64, MlpGrads<R>) {
        let net = match which {
            CriticId::One => &self.q1,
            CriticId::Two => &self.q2,
        };
        let sa = concat_sa(states, actions);
        let cache = net.forward(&sa);
        let b = states.nrows();
        let bf = b as f64;
        let mut loss = 0.0;
        let mut d_out = Array2::from_elem((b, 1), R::zero());
        {
            let q = cache.output();
            for i in 0..b {
                let diff = q[(i, 0)].to_f64() - targets[i].to_f64();
                loss += diff * diff;
                d_out[(i, 0)] = R::from_f64(2.0 * diff / bf);
            }
        }
        loss /= bf;
        let (grads, _) = net.backward(&cache, &d_out);
        (loss, grads)
    }

    /// Policy loss mean(α·logπ − min(Q₁,Q₂)), its gradients, and the batch
    /// mean log-probability (reused by the temperature step). Critics are
    /// held fixed; only the per-sample minimum passes gradient to the actor.
    pub fn actor_loss_and_grads(
        &self,
        states: &Array2<R>,
        noise: &Array2<R>,
    ) -> (f64, f64, MlpGrads<R>) {
        let alpha = self.alpha();
        let b = states.nrows();
        let bf = b as f64;
        let sample = self.actor.sample_with_noise(states, noise);
        let sa = concat_sa(states, &sample.a);
        let c1 = self.q1.forward(&sa);
        let c2 = self.q2.forward(&sa);
        let mut d1 = Array2::from_elem((b, 1), R::zero());
        let mut d2 = Array2::from_elem((b, 1), R::zero());
        let mut loss = 0.0;
        let mut lp_sum = 0.0;
        {
            let q1v = c1.output();
            let q2v = c2.output();
            for i in 0..b {
                let v1 = q1v[(i, 0)].to_f64();
                let v2 = q2v[(i, 0)].to_f64();
                let lp = sample.log_prob[i].to_f64();
                lp_sum += lp;
                if v1 <= v2 {
                    loss += alpha * lp - v1;
                    d1[(i, 0)] = R::from_f64(-1.0 / bf);
                } else {
                    loss += alpha * lp - v2;
                    d2[(i, 0)] = R::from_f64(-1.0 / bf);
                }
            }
        }
        loss /= bf;
        let mean_lp = lp_sum / bf;
        let (_, din1) = self.q1.backward(&c1, &d1);
        let (_, din2) = self.q2.backward(&c2, &d2);
        let s_dim = self.obs_dim;
        let dl_da = Array2::from_shape_fn((b, self.act_dim), |(i, j)| {
            din1[(i, s_dim + j)] + din2[(i, s_dim + j)]
        });
        let grads = self.actor.backward(&sample, &dl_da, alpha / bf);
        (loss, mean_lp, grads)
    }

    /// Gradient of the temperature loss −log α·(logπ̄ + H̄) w.r.t. log α.
    pub fn temperature_grad(&self, mean_log_prob: f64) -> f64 {
        -(mean_log_prob + self.hp.target_entropy)
    }

    /// One full gradient step on a minibatch.
    pub fn update<G: Rng>(&mut self, batch: &Batch<R>, rng: &mut G) -> UpdateStats {
        let b = batch.states.nrows();
        let target_noise = self.actor.draw_noise(b, rng);
        let actor_noise = self.actor.draw_noise(b, rng);
        // Critics first, against targets from the slow networks.
        let y = self.compute_targets(batch, &target_noise);
        let (c1_loss, g1) =
            self.critic_loss_and_grads(CriticId::One, &batch.states, &batch.actions, &y);
        self.q1_opt.step(&mut self.q1, &g1);
        let (c2_loss, g2) =
            self.critic_loss_and_grads(CriticId::Two, &batch.states, &batch.actions, &y);
        self.q2_opt.step(&mut self.q2, &g2);
        // Actor against the just-updated critics.
        let (actor_loss, mean_lp, ga) = self.actor_loss_and_grads(&batch.states, &actor_noise);
        self.actor_opt.step(&mut self.actor.net, &ga);
        // Temperature, then target blend.
        let g_alpha = self.temperature_grad(mean_lp);
        self.alpha_opt.step(&mut self.log_alpha, g_alpha);
        self.q1_target.polyak_from(&self.q1, self.hp.tau);
        self.q2_target.polyak_from(&self.q2, self.hp.tau);
        UpdateStats {
            critic1_loss: c1_loss,
            critic2_loss: c2_loss,
            actor_loss,
            mean_log_prob: mean_lp,
            alpha: self.alpha(),
        }
    }

    /// True when every parameter and optimizer moment is finite.
    pub fn all_finite(&self) -> bool {
        self.actor.net.all_finite()
            && self.q1.all_finite()
            && self.q2.all_finite()
            && self.q1_target.all_finite()
            && self.q2_target.all_finite()
            && self.log_alpha.is_finite()
    }
}
