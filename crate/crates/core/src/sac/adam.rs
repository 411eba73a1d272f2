//! Adam optimizer with bias correction, over whole networks and over the
//! scalar temperature parameter.

use super::mlp::{Mlp, MlpGrads};
use super::real::Real;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Moment buffers for one network, flat in canonical tensor order.
#[derive(Debug, Clone)]
pub struct Adam<R: Real> {
    pub lr: f64,
    pub t: u64,
    pub m: Vec<R>,
    pub v: Vec<R>,
}

impl<R: Real> Adam<R> {
    pub fn new(lr: f64, param_count: usize) -> Self {
        Adam {
            lr,
            t: 0,
            m: vec![R::zero(); param_count],
            v: vec![R::zero(); param_count],
        }
    }

    /// One bias-corrected step: θ ← θ − lr·m̂/(√v̂ + ε).
    pub fn step(&mut self, net: &mut Mlp<R>, grads: &MlpGrads<R>) {
        self.t += 1;
        let b1 = R::from_f64(ADAM_BETA1);
        let b2 = R::from_f64(ADAM_BETA2);
        let one = R::one();
        let eps = R::from_f64(ADAM_EPS);
        let corr1 = R::from_f64(1.0 - ADAM_BETA1.powi(self.t as i32));
        let corr2 = R::from_f64(1.0 - ADAM_BETA2.powi(self.t as i32));
        let lr = R::from_f64(self.lr);
        let mut k = 0;
        let grad_slices = grads.tensor_slices();
        let mut param_slices = net.tensor_slices_mut();
        assert_eq!(grad_slices.len(), param_slices.len(), "tensor count");
        for (params, gs) in param_slices.iter_mut().zip(grad_slices) {
            assert_eq!(params.len(), gs.len(), "tensor shape");
            for (p, &g) in params.iter_mut().zip(gs) {
                let m = b1 * self.m[k] + (one - b1) * g;
                let v = b2 * self.v[k] + (one - b2) * g * g;
                self.m[k] = m;
                self.v[k] = v;
                let m_hat = m / corr1;
                let v_hat = v / corr2;
                *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
                k += 1;
            }
        }
        debug_assert_eq!(k, self.m.len(), "gradient length matches moments");
    }
}

/// Adam over a single scalar (the log-temperature), at f64 precision.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScalarAdam {
    pub lr: f64,
    pub t: u64,
    pub m: f64,
    pub v: f64,
}

impl ScalarAdam {
    pub fn new(lr: f64) -> Self {
        ScalarAdam {
            lr,
            t: 0,
            m: 0.0,
            v: 0.0,
        }
    }

    pub fn step(&mut self, param: &mut f64, grad: f64) {
        self.t += 1;
        self.m = ADAM_BETA1 * self.m + (1.0 - ADAM_BETA1) * grad;
        self.v = ADAM_BETA2 * self.v + (1.0 - ADAM_BETA2) * grad * grad;
        let m_hat = self.m / (1.0 - ADAM_BETA1.powi(self.t as i32));
        let v_hat = self.v / (1.0 - ADAM_BETA2.powi(self.t as i32));
        *param -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sac::mlp::{Activation, InitKind, LayerSpec};
    use crate::seeds::seeded_rng;
    use ndarray::Array2;

    fn small_net() -> Mlp<f64> {
        let mut rng = seeded_rng(21, "adam-test");
        Mlp::new(
            &[LayerSpec {
                in_dim: 3,
                out_dim: 2,
                layer_norm: false,
                act: Activation::Identity,
            }],
            InitKind::XavierUniform,
            &mut rng,
        )
    }

    fn grads_of(net: &Mlp<f64>, value: f64) -> MlpGrads<f64> {
        let x = Array2::from_elem((1, 3), 1.0);
        let cache = net.forward(&x);
        let d_out = Array2::from_elem((1, 2), value);
        net.backward(&cache, &d_out).0
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut net = small_net();
        let before = net.flatten();
        let zero_grads = grads_of(&net, 0.0);
        let mut opt = Adam::new(1e-3, net.param_count());
        opt.step(&mut net, &zero_grads);
        assert_eq!(net.flatten(), before);
    }

    #[test]
    fn first_step_is_lr_sized_for_constant_gradient() {
        // With bias correction, step 1 moves each param by exactly
        // lr·g/(|g| + ε) ≈ lr·sign(g).
        let mut p = 1.0;
        let mut opt = ScalarAdam::new(0.01);
        opt.step(&mut p, 2.5);
        assert!((p - (1.0 - 0.01 * 2.5 / (2.5 + ADAM_EPS))).abs() < 1e-12);
        let mut q = -3.0;
        let mut opt = ScalarAdam::new(0.05);
        opt.step(&mut q, -0.4);
        assert!((q - (-3.0 + 0.05 * 0.4 / (0.4 + ADAM_EPS))).abs() < 1e-12);
    }

    #[test]
    fn identical_runs_identical_trajectories() {
        let run = || {
            let mut net = small_net();
            let mut opt = Adam::new(1e-2, net.param_count());
            for i in 0..10 {
                let grads = grads_of(&net, 0.1 * (i + 1) as f64);
                opt.step(&mut net, &grads);
            }
            net.flatten()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn descends_a_quadratic() {
        // Minimize (w·x − 2)² over repeated steps.
        let mut net = small_net();
        let x = Array2::from_elem((1, 3), 1.0);
        let mut opt = Adam::new(0.05, net.param_count());
        let loss = |n: &Mlp<f64>| {
            let out = n.infer(&x);
            (out[(0, 0)] - 2.0f64).powi(2) + (out[(0, 1)] - 2.0f64).powi(2)
        };
        let initial = loss(&net);
        for _ in 0..400 {
            let cache = net.forward(&x);
            let d_out = cache.output().mapv(|v| 2.0 * (v - 2.0));
            let (grads, _) = net.backward(&cache, &d_out);
            opt.step(&mut net, &grads);
        }
        let after = loss(&net);
        assert!(after < initial * 1e-4, "initial {initial}, after {after}");
    }
}
