//! Stochastic policy heads: squashed Gaussian (default), unsquashed
//! Gaussian, and an affinely rescaled Beta — one shared interface.
//!
//! The network emits two heads per action dimension, split at `act_dim`:
//! mean and log-std for the Gaussian kinds, or the two pre-softplus
//! concentrations for the Beta kind. Sampling is reparameterized in every
//! kind — actions are deterministic functions of (state, noise) — so
//! pathwise gradients flow from the critic into the policy parameters.

use super::mlp::{Mlp, MlpCache, MlpGrads};
use super::real::Real;
use super::special::{beta_cdf_da, beta_cdf_db, beta_ln_pdf, beta_quantile, digamma, ln_beta};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Fixed stabilizer inside the tanh Jacobian log term; part of the
/// documented log-density definition, not a tunable.
pub const JACOBIAN_STABILIZER: f64 = 1e-6;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Keeps Beta draws strictly inside (0, 1).
const BETA_X_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// a = tanh(μ + σε) with the change-of-variables correction.
    GaussianTanh,
    /// a = μ + σε, unbounded (the action mapping clamps downstream).
    Gaussian,
    /// a = 2x − 1 with x ~ Beta(p, q), p,q = softplus(head)+1.
    Beta,
}

/// Policy network plus distribution bookkeeping.
#[derive(Debug, Clone)]
pub struct PolicyNet<R: Real> {
    pub net: Mlp<R>,
    pub kind: PolicyKind,
    pub act_dim: usize,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

/// One reparameterized draw with everything backward needs.
pub struct PolicySample<R: Real> {
    /// Actions, (batch, act_dim).
    pub a: Array2<R>,
    /// Per-sample joint log-density of `a`.
    pub log_prob: Array1<R>,
    /// μ for the Gaussian kinds; first concentration p for Beta.
    pub mean: Array2<R>,
    /// σ (post-clamp) for the Gaussian kinds; second concentration q for Beta.
    pub spread: Array2<R>,
    /// Pre-squash draw u = μ + σε (Gaussian kinds only).
    pub u: Option<Array2<R>>,
    /// Beta draw on (0, 1), pre-affine (Beta kind only).
    pub x: Option<Array2<R>>,
    /// The noise consumed: standard-normal ε, or uniform v for Beta.
    pub noise: Array2<R>,
    cache: MlpCache<R>,
}

fn softplus(x: f64) -> f64 {
    if x > 20.0 {
        x
    } else if x < -20.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl<R: Real> PolicyNet<R> {
    pub fn new(net: Mlp<R>, kind: PolicyKind, log_std_min: f64, log_std_max: f64) -> Self {
        let act_dim = net.out_dim() / 2;
        assert_eq!(net.out_dim(), 2 * act_dim, "policy net needs 2 heads per dim");
        PolicyNet {
            net,
            kind,
            act_dim,
            log_std_min,
            log_std_max,
        }
    }

    /// Draws the per-sample noise matrix appropriate for the kind.
    pub fn draw_noise<G: Rng>(&self, batch: usize, rng: &mut G) -> Array2<R> {
        Array2::from_shape_fn((batch, self.act_dim), |_| match self.kind {
            PolicyKind::GaussianTanh | PolicyKind::Gaussian => {
                R::from_f64(rng.sample::<f64, _>(StandardNormal))
            }
            // Strictly interior uniforms keep the quantile finite.
            PolicyKind::Beta => R::from_f64(rng.random_range(1e-9..(1.0 - 1e-9))),
        })
    }

    /// Reparameterized sample using freshly drawn noise.
    pub fn sample<G: Rng>(&self, states: &Array2<R>, rng: &mut G) -> PolicySample<R> {
        let noise = self.draw_noise(states.nrows(), rng);
        self.sample_with_noise(states, &noise)
    }

    /// Reparameterized sample as a deterministic function of the noise —
    /// the form finite-difference checks rely on.
    pub fn sample_with_noise(&self, states: &Array2<R>, noise: &Array2<R>) -> PolicySample<R> {
        assert_eq!(noise.dim(), (states.nrows(), self.act_dim), "noise shape");
        let cache = self.net.forward(states);
        let heads = cache.output();
        let batch = states.nrows();
        let a_dim = self.act_dim;
        let mut a = Array2::from_elem((batch, a_dim), R::zero());
        let mut mean = Array2::from_elem((batch, a_dim), R::zero());
        let mut spread = Array2::from_elem((batch, a_dim), R::zero());
        let mut log_prob = Array1::from_elem(batch, R::zero());
        let mut u_store = match self.kind {
            PolicyKind::Beta => None,
            _ => Some(Array2::from_elem((batch, a_dim), R::zero())),
        };
        let mut x_store = match self.kind {
            PolicyKind::Beta => Some(Array2::from_elem((batch, a_dim), R::zero())),
            _ => None,
        };
        for i in 0..batch {
            let mut lp = 0.0f64;
            for j in 0..a_dim {
                let h1 = heads[(i, j)].to_f64();
                let h2 = heads[(i, a_dim + j)].to_f64();
                match self.kind {
                    PolicyKind::GaussianTanh | PolicyKind::Gaussian => {
                        let mu = h1;
                        let ls = h2.clamp(self.log_std_min, self.log_std_max);
                        let sigma = ls.exp();
                        let eps = noise[(i, j)].to_f64();
                        let u = mu + sigma * eps;
                        mean[(i, j)] = R::from_f64(mu);
                        spread[(i, j)] = R::from_f64(sigma);
                        u_store.as_mut().expect("gaussian path")[(i, j)] = R::from_f64(u);
                        lp += -0.5 * eps * eps - ls - HALF_LN_2PI;
                        let act = if matches!(self.kind, PolicyKind::GaussianTanh) {
                            let t = u.tanh();
                            lp -= (1.0 - t * t + JACOBIAN_STABILIZER).ln();
                            t
                        } else {
                            u
                        };
                        a[(i, j)] = R::from_f64(act);
                    }
                    PolicyKind::Beta => {
                        let p = softplus(h1) + 1.0;
                        let q = softplus(h2) + 1.0;
                        let v = noise[(i, j)].to_f64();
                        let x = beta_quantile(v, p, q).clamp(BETA_X_EPS, 1.0 - BETA_X_EPS);
                        mean[(i, j)] = R::from_f64(p);
                        spread[(i, j)] = R::from_f64(q);
                        x_store.as_mut().expect("beta path")[(i, j)] = R::from_f64(x);
                        a[(i, j)] = R::from_f64(2.0 * x - 1.0);
                        // Affine a = 2x − 1 contributes −ln 2 per dim.
                        lp += (p - 1.0) * x.ln() + (q - 1.0) * (1.0 - x).ln()
                            - ln_beta(p, q)
                            - 2.0f64.ln();
                    }
                }
            }
            log_prob[i] = R::from_f64(lp);
        }
        PolicySample {
            a,
            log_prob,
            mean,
            spread,
            u: u_store,
            x: x_store,
            noise: noise.clone(),
            cache,
        }
    }

    /// Noise-free action for evaluation: tanh(μ), μ, or the Beta mean.
    pub fn deterministic(&self, states: &Array2<R>) -> Array2<R> {
        let heads = self.net.infer(states);
        let a_dim = self.act_dim;
        Array2::from_shape_fn((states.nrows(), a_dim), |(i, j)| {
            let h1 = heads[(i, j)].to_f64();
            match self.kind {
                PolicyKind::GaussianTanh => R::from_f64(h1.tanh()),
                PolicyKind::Gaussian => R::from_f64(h1),
                PolicyKind::Beta => {
                    let p = softplus(h1) + 1.0;
                    let q = softplus(heads[(i, a_dim + j)].to_f64()) + 1.0;
                    R::from_f64(2.0 * p / (p + q) - 1.0)
                }
            }
        })
    }

    /// Backpropagates a loss of the form
    /// `L = coef_logp·Σ_samples logπ + Σ_samples Σ_dims dl_da ∘ a`
    /// into parameter gradients. `dl_da` must already carry any batch
    /// scaling and sign; `coef_logp` is typically α/batch.
    pub fn backward(
        &self,
        sample: &PolicySample<R>,
        dl_da: &Array2<R>,
        coef_logp: f64,
    ) -> MlpGrads<R> {
        let batch = sample.a.nrows();
        let a_dim = self.act_dim;
        let heads = sample.cache.output();
        let mut d_heads = Array2::from_elem((batch, 2 * a_dim), R::zero());
        for i in 0..batch {
            for j in 0..a_dim {
                let g_a = dl_da[(i, j)].to_f64();
                match self.kind {
                    PolicyKind::GaussianTanh => {
                        let a = sample.a[(i, j)].to_f64();
                        let sigma = sample.spread[(i, j)].to_f64();
                        let eps = sample.noise[(i, j)].to_f64();
                        let one_m_a2 = 1.0 - a * a;
                        let dlp_du = 2.0 * a * one_m_a2 / (one_m_a2 + JACOBIAN_STABILIZER);
                        let dl_du = coef_logp * dlp_du + g_a * one_m_a2;
                        // log-std head: through u (du/dls = σε) and the
                        // explicit −ls density term; zero where clamped.
                        let h2 = heads[(i, a_dim + j)].to_f64();
                        let clamped = h2 <= self.log_std_min || h2 >= self.log_std_max;
                        let dl_dls = if clamped {
                            0.0
                        } else {
                            dl_du * sigma * eps - coef_logp
                        };
                        d_heads[(i, j)] = R::from_f64(dl_du);
                        d_heads[(i, a_dim + j)] = R::from_f64(dl_dls);
                    }
                    PolicyKind::Gaussian => {
                        // a = u; the density term depends on σ only.
                        let sigma = sample.spread[(i, j)].to_f64();
                        let eps = sample.noise[(i, j)].to_f64();
                        let h2 = heads[(i, a_dim + j)].to_f64();
                        let clamped = h2 <= self.log_std_min || h2 >= self.log_std_max;
                        let dl_dls = if clamped {
                            0.0
                        } else {
                            g_a * sigma * eps - coef_logp
                        };
                        d_heads[(i, j)] = R::from_f64(g_a);
                        d_heads[(i, a_dim + j)] = R::from_f64(dl_dls);
                    }
                    PolicyKind::Beta => {
                        let p = sample.mean[(i, j)].to_f64();
                        let q = sample.spread[(i, j)].to_f64();
                        let x = sample.x.as_ref().expect("beta path")[(i, j)].to_f64();
                        // Implicit reparameterization: x = F⁻¹(v; p, q) with
                        // v fixed, so ∂x/∂θ = −(∂F/∂θ)/pdf(x).
                        let pdf = beta_ln_pdf(x, p, q).exp().max(1e-30);
                        let dx_dp = -beta_cdf_da(x, p, q) / pdf;
                        let dx_dq = -beta_cdf_db(x, p, q) / pdf;
                        let dlp_dx = (p - 1.0) / x - (q - 1.0) / (1.0 - x);
                        let psi_pq = digamma(p + q);
                        let dlp_dp = x.ln() - digamma(p) + psi_pq + dlp_dx * dx_dp;
                        let dlp_dq = (1.0 - x).ln() - digamma(q) + psi_pq + dlp_dx * dx_dq;
                        let dl_dp = coef_logp * dlp_dp + g_a * 2.0 * dx_dp;
                        let dl_dq = coef_logp * dlp_dq + g_a * 2.0 * dx_dq;
                        let h1 = heads[(i, j)].to_f64();
                        let h2 = heads[(i, a_dim + j)].to_f64();
                        d_heads[(i, j)] = R::from_f64(dl_dp * sigmoid(h1));
                        d_heads[(i, a_dim + j)] = R::from_f64(dl_dq * sigmoid(h2));
                    }
                }
            }
        }
        self.net.backward(&sample.cache, &d_heads).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sac::mlp::{Activation, InitKind};
    use crate::seeds::seeded_rng;

    fn tiny_policy(kind: PolicyKind) -> PolicyNet<f64> {
        let mut rng = seeded_rng(17, "policy-test");
        let net = Mlp::feedforward(
            5,
            &[8, 8],
            6, // 3 action dims
            Activation::LeakyRelu(0.2),
            true,
            InitKind::KaimingUniform,
            &mut rng,
        );
        PolicyNet::new(net, kind, -20.0, 3.0)
    }

    fn states(batch: usize) -> Array2<f64> {
        Array2::from_shape_fn((batch, 5), |(i, j)| ((i * 5 + j) as f64 * 0.7).sin() * 0.5)
    }

    #[test]
    fn zero_net_standard_normal_log_prob() {
        // All-zero parameters give μ = 0, log_std = 0 → σ = 1. With ε = 0,
        // per-dim log-prob is −½ln2π minus the (near-zero) Jacobian term.
        let mut policy = tiny_policy(PolicyKind::GaussianTanh);
        let zeros = vec![0.0; policy.net.param_count()];
        policy.net.load_flat(&zeros);
        let s = states(1);
        let noise = Array2::from_elem((1, 3), 0.0);
        let sample = policy.sample_with_noise(&s, &noise);
        assert!(sample.a.iter().all(|&v| v == 0.0));
        let expect = 3.0 * (-HALF_LN_2PI - JACOBIAN_STABILIZER.ln_1p());
        assert!((sample.log_prob[0] - expect).abs() < 1e-12);
        // 24 dims at the mode ≈ −22.054 (the case-study figure).
        let per_dim = -HALF_LN_2PI - JACOBIAN_STABILIZER.ln_1p();
        assert!((24.0 * per_dim - (-22.054)).abs() < 5e-3);
    }

    #[test]
    fn log_prob_identity_gaussian_tanh() {
        // Eq.-style identity: returned log-prob equals the independent
        // change-of-variables recomputation from (u, μ, σ).
        let policy = tiny_policy(PolicyKind::GaussianTanh);
        let s = states(7);
        let mut rng = seeded_rng(3, "lp-identity");
        let sample = policy.sample(&s, &mut rng);
        let u = sample.u.as_ref().unwrap();
        for i in 0..7 {
            let mut lp = 0.0;
            for j in 0..3 {
                let mu = sample.mean[(i, j)];
                let sigma = sample.spread[(i, j)];
                let uu = u[(i, j)];
                let z = (uu - mu) / sigma;
                let t = uu.tanh();
                lp += -0.5 * z * z - sigma.ln() - HALF_LN_2PI;
                lp -= (1.0 - t * t + JACOBIAN_STABILIZER).ln();
            }
            assert!(
                (lp - sample.log_prob[i]).abs() < 1e-10,
                "sample {i}: {} vs {}",
                lp,
                sample.log_prob[i]
            );
        }
    }

    #[test]
    fn log_prob_rises_then_falls_toward_saturation() {
        let mut policy = tiny_policy(PolicyKind::GaussianTanh);
        let zeros = vec![0.0; policy.net.param_count()];
        policy.net.load_flat(&zeros);
        let s = states(1);
        let lp_at = |eps: f64| {
            let noise = Array2::from_elem((1, 3), eps);
            policy.sample_with_noise(&s, &noise).log_prob[0]
        };
        // Squashing a unit Gaussian through tanh piles density toward the
        // interval edges first (Jacobian grows faster than the Gaussian
        // falls), then the −½ε² term wins.
        assert!(lp_at(2.0) > lp_at(0.0));
        assert!(lp_at(2.0) > lp_at(4.0));
        assert!(lp_at(4.0) > lp_at(6.0));
        // The stabilizer caps the Jacobian term, so even deep saturation
        // stays finite.
        assert!(lp_at(40.0).is_finite());
    }

    #[test]
    fn gaussian_kind_matches_normal_density() {
        let policy = tiny_policy(PolicyKind::Gaussian);
        let s = states(4);
        let mut rng = seeded_rng(5, "gauss");
        let sample = policy.sample(&s, &mut rng);
        for i in 0..4 {
            let mut lp = 0.0;
            for j in 0..3 {
                let sigma: f64 = sample.spread[(i, j)];
                let eps: f64 = sample.noise[(i, j)];
                lp += -0.5 * eps * eps - sigma.ln() - HALF_LN_2PI;
            }
            assert!((lp - sample.log_prob[i]).abs() < 1e-12);
        }
        // Unsquashed action equals u.
        assert_eq!(sample.a, sample.u.unwrap());
    }

    #[test]
    fn beta_kind_samples_inside_interval() {
        let policy = tiny_policy(PolicyKind::Beta);
        let s = states(16);
        let mut rng = seeded_rng(6, "beta");
        let sample = policy.sample(&s, &mut rng);
        assert!(sample
            .a
            .iter()
            .all(|&v| (-1.0..=1.0).contains(&v)));
        // Concentrations are ≥ 1 by construction.
        assert!(sample.mean.iter().all(|&p| p >= 1.0));
        assert!(sample.spread.iter().all(|&q| q >= 1.0));
        // Log-prob matches a direct density recomputation.
        let x = sample.x.as_ref().unwrap();
        for i in 0..16 {
            let mut lp = 0.0;
            for j in 0..3 {
                lp += beta_ln_pdf(x[(i, j)], sample.mean[(i, j)], sample.spread[(i, j)])
                    - 2.0f64.ln();
            }
            assert!((lp - sample.log_prob[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_actions_per_kind() {
        let s = states(2);
        let tanh_policy = tiny_policy(PolicyKind::GaussianTanh);
        let a = tanh_policy.deterministic(&s);
        assert!(a.iter().all(|&v| (-1.0..=1.0).contains(&v)));
        // Deterministic equals tanh of the mean head.
        let sample = tanh_policy.sample_with_noise(&s, &Array2::from_elem((2, 3), 0.0));
        for (av, mv) in a.iter().zip(sample.mean.iter()) {
            assert!((av - mv.tanh()).abs() < 1e-12);
        }
        let beta_policy = tiny_policy(PolicyKind::Beta);
        let ab = beta_policy.deterministic(&s);
        assert!(ab.iter().all(|&v| (-1.0..1.0).contains(&v)));
    }

    #[test]
    fn deterministic_rollouts_are_reproducible() {
        let policy = tiny_policy(PolicyKind::GaussianTanh);
        let s = states(3);
        assert_eq!(policy.deterministic(&s), policy.deterministic(&s));
    }

    /// Finite-difference check of the full per-kind backward pass on the
    /// surrogate L = coef·Σ logπ + Σ w∘a with fixed noise.
    fn check_policy_gradients(kind: PolicyKind, tol: f64) {
        let policy = tiny_policy(kind);
        let s = states(4);
        let mut rng = seeded_rng(8, "fd-noise");
        let noise = policy.draw_noise(4, &mut rng);
        let weights = Array2::from_shape_fn((4, 3), |(i, j)| ((i + 2 * j) as f64 * 0.43).cos());
        let coef = 0.37;
        let loss_of = |p: &PolicyNet<f64>| {
            let sample = p.sample_with_noise(&s, &noise);
            let lp_sum: f64 = sample.log_prob.iter().sum();
            let weighted: f64 = (&sample.a * &weights).sum();
            coef * lp_sum + weighted
        };
        let sample = policy.sample_with_noise(&s, &noise);
        let grads = policy.backward(&sample, &weights, coef);
        let analytic = grads.flatten();
        let base = policy.net.flatten();
        let mut work = policy.clone();
        let h = 1e-5;
        let mut max_rel: f64 = 0.0;
        for k in 0..base.len() {
            let mut up = base.clone();
            up[k] += h;
            work.net.load_flat(&up);
            let f_up = loss_of(&work);
            let mut dn = base.clone();
            dn[k] -= h;
            work.net.load_flat(&dn);
            let f_dn = loss_of(&work);
            let fd = (f_up - f_dn) / (2.0 * h);
            let scale = analytic[k].abs().max(fd.abs()).max(1e-5);
            max_rel = max_rel.max((analytic[k] - fd).abs() / scale);
        }
        assert!(max_rel < tol, "{kind:?}: max rel err {max_rel}");
    }

    #[test]
    fn gaussian_tanh_gradients_match_finite_differences() {
        // Central differences at h = 1e-5 carry a few 1e-6..1e-5 of
        // truncation noise on the high-curvature Jacobian term.
        check_policy_gradients(PolicyKind::GaussianTanh, 5e-5);
    }

    #[test]
    fn gaussian_gradients_match_finite_differences() {
        check_policy_gradients(PolicyKind::Gaussian, 5e-5);
    }

    #[test]
    fn beta_gradients_match_finite_differences() {
        // The quantile is iterative and the CDF derivative itself uses a
        // small internal step, so the tolerance is looser.
        check_policy_gradients(PolicyKind::Beta, 1e-3);
    }
}
