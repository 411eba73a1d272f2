//! Fully-connected networks with layer normalization and analytic
//! backpropagation.
//!
//! Shapes follow the (batch, features) convention. Every tensor is stored
//! contiguously so optimizers and serializers can walk the parameters as
//! flat slices in one canonical order: per layer — weights (row-major),
//! bias, then layer-norm gain and offset when present.

use super::real::Real;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Variance stabilizer inside the layer-norm square root.
const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// max(x, slope·x); the slope rides in the enum payload.
    LeakyRelu(f64),
    Tanh,
    Identity,
}

impl Activation {
    fn apply<R: Real>(self, x: R) -> R {
        match self {
            Activation::LeakyRelu(slope) => {
                if x > R::zero() {
                    x
                } else {
                    R::from_f64(slope) * x
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative in terms of the pre-activation and the output value.
    fn derivative<R: Real>(self, pre: R, post: R) -> R {
        match self {
            Activation::LeakyRelu(slope) => {
                if pre > R::zero() {
                    R::one()
                } else {
                    R::from_f64(slope)
                }
            }
            Activation::Tanh => R::one() - post * post,
            Activation::Identity => R::one(),
        }
    }
}

/// Weight initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    KaimingUniform,
    KaimingNormal,
    XavierUniform,
    Orthogonal,
}

/// Activation-dependent gain used by the Kaiming schemes.
fn activation_gain(act: Activation) -> f64 {
    match act {
        Activation::LeakyRelu(slope) => (2.0 / (1.0 + slope * slope)).sqrt(),
        Activation::Tanh => 5.0 / 3.0,
        Activation::Identity => 1.0,
    }
}

/// Per-feature affine transform applied after normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams<R: Real> {
    pub gain: Array1<R>,
    pub offset: Array1<R>,
}

/// One dense layer: linear map, optional layer norm, then activation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<R: Real> {
    /// (out, in) — rows are output features.
    pub w: Array2<R>,
    pub b: Array1<R>,
    pub ln: Option<LayerNormParams<R>>,
    pub act: Activation,
}

impl<R: Real> DenseLayer<R> {
    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }
}

/// Shape and feature switches of one layer, used when building networks.
#[derive(Debug, Clone, Copy)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub layer_norm: bool,
    pub act: Activation,
}

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<R: Real> {
    pub layers: Vec<DenseLayer<R>>,
}

/// Everything the backward pass needs from one layer's forward pass.
pub struct LayerCache<R: Real> {
    /// Layer input (batch, in).
    x: Array2<R>,
    /// Normalized values before gain/offset (layer-norm layers only).
    y: Option<Array2<R>>,
    /// Per-row 1/σ (layer-norm layers only).
    inv_std: Option<Array1<R>>,
    /// Input of the activation function.
    pre_act: Array2<R>,
    /// Layer output.
    out: Array2<R>,
}

/// Forward-pass record for a whole network.
pub struct MlpCache<R: Real> {
    layers: Vec<LayerCache<R>>,
}

impl<R: Real> MlpCache<R> {
    pub fn output(&self) -> &Array2<R> {
        &self.layers.last().expect("non-empty network").out
    }
}

/// Parameter-shaped gradient container.
#[derive(Debug, Clone)]
pub struct LayerGrads<R: Real> {
    pub dw: Array2<R>,
    pub db: Array1<R>,
    pub dgain: Option<Array1<R>>,
    pub doffset: Option<Array1<R>>,
}

#[derive(Debug, Clone)]
pub struct MlpGrads<R: Real> {
    pub layers: Vec<LayerGrads<R>>,
}

fn draw_uniform<R: Real, G: Rng>(rng: &mut G, lo: f64, hi: f64) -> R {
    // Drawn at f64 so the RNG stream advances identically regardless of
    // the scalar type in use.
    R::from_f64(rng.random_range(lo..hi))
}

/// Fills a (out, in) weight matrix per the chosen scheme.
fn init_weight<R: Real, G: Rng>(
    rng: &mut G,
    out_dim: usize,
    in_dim: usize,
    kind: InitKind,
    act: Activation,
) -> Array2<R> {
    match kind {
        InitKind::KaimingUniform => {
            let bound = activation_gain(act) * (3.0 / in_dim as f64).sqrt();
            Array2::from_shape_fn((out_dim, in_dim), |_| draw_uniform(rng, -bound, bound))
        }
        InitKind::KaimingNormal => {
            let std = activation_gain(act) / (in_dim as f64).sqrt();
            Array2::from_shape_fn((out_dim, in_dim), |_| {
                R::from_f64(rng.sample::<f64, _>(StandardNormal) * std)
            })
        }
        InitKind::XavierUniform => {
            let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
            Array2::from_shape_fn((out_dim, in_dim), |_| draw_uniform(rng, -bound, bound))
        }
        InitKind::Orthogonal => orthogonal_matrix(rng, out_dim, in_dim),
    }
}

/// Orthogonal init: a Gaussian matrix orthonormalized along its shorter
/// side with twice-applied modified Gram-Schmidt.
fn orthogonal_matrix<R: Real, G: Rng>(rng: &mut G, out_dim: usize, in_dim: usize) -> Array2<R> {
    // Work in f64 regardless of R so the factorization is well-conditioned.
    let rows = out_dim.min(in_dim);
    let cols = out_dim.max(in_dim);
    let mut m: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    for _pass in 0..2 {
        for i in 0..rows {
            let (done, rest) = m.split_at_mut(i);
            let row = &mut rest[0];
            for prev in done.iter() {
                let dot: f64 = row.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (x, &y) in row.iter_mut().zip(prev) {
                    *x -= dot * y;
                }
            }
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            for x in row.iter_mut() {
                *x /= norm;
            }
        }
    }
    Array2::from_shape_fn((out_dim, in_dim), |(r, c)| {
        // Transpose back when the matrix is taller than wide.
        let v = if out_dim <= in_dim { m[r][c] } else { m[c][r] };
        R::from_f64(v)
    })
}

impl<R: Real> Mlp<R> {
    /// Builds a network from layer specs: weights per the scheme, biases
    /// zero, layer-norm gain 1 and offset 0.
    pub fn new<G: Rng>(specs: &[LayerSpec], init: InitKind, rng: &mut G) -> Self {
        let layers = specs
            .iter()
            .map(|s| DenseLayer {
                w: init_weight(rng, s.out_dim, s.in_dim, init, s.act),
                b: Array1::from_elem(s.out_dim, R::zero()),
                ln: s.layer_norm.then(|| LayerNormParams {
                    gain: Array1::from_elem(s.out_dim, R::one()),
                    offset: Array1::from_elem(s.out_dim, R::zero()),
                }),
                act: s.act,
            })
            .collect();
        Mlp { layers }
    }

    /// Standard trunk: hidden layers with layer norm + activation, then a
    /// plain linear output layer.
    pub fn feedforward<G: Rng>(
        in_dim: usize,
        hidden: &[usize],
        out_dim: usize,
        hidden_act: Activation,
        layer_norm: bool,
        init: InitKind,
        rng: &mut G,
    ) -> Self {
        let mut specs = Vec::new();
        let mut d = in_dim;
        for &h in hidden {
            specs.push(LayerSpec {
                in_dim: d,
                out_dim: h,
                layer_norm,
                act: hidden_act,
            });
            d = h;
        }
        specs.push(LayerSpec {
            in_dim: d,
            out_dim,
            layer_norm: false,
            act: Activation::Identity,
        });
        Mlp::new(&specs, init, rng)
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().expect("non-empty network").in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty network").out_dim()
    }

    /// Forward pass keeping everything backward needs.
    pub fn forward(&self, input: &Array2<R>) -> MlpCache<R> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let z = x.dot(&layer.w.t()) + &layer.b;
            let (pre_act, y, inv_std) = match &layer.ln {
                Some(ln) => {
                    let h = z.ncols();
                    let h_r = R::from_f64(h as f64);
                    let eps = R::from_f64(LAYER_NORM_EPS);
                    let rows = z.nrows();
                    let mut y = z;
                    let mut inv_std = Array1::from_elem(rows, R::zero());
                    for (mut row, s) in y.rows_mut().into_iter().zip(inv_std.iter_mut()) {
                        let mean = row.iter().fold(R::zero(), |a, &v| a + v) / h_r;
                        let var = row
                            .iter()
                            .fold(R::zero(), |a, &v| a + (v - mean) * (v - mean))
                            / h_r;
                        let is = R::one() / (var + eps).sqrt();
                        *s = is;
                        row.mapv_inplace(|v| (v - mean) * is);
                    }
                    let pre_act = &y * &ln.gain + &ln.offset;
                    (pre_act, Some(y), Some(inv_std))
                }
                None => (z, None, None),
            };
            let out = pre_act.mapv(|v| layer.act.apply(v));
            caches.push(LayerCache {
                x,
                y,
                inv_std,
                pre_act,
                out: out.clone(),
            });
            x = out;
        }
        MlpCache { layers: caches }
    }

    /// Output without keeping the cache.
    pub fn infer(&self, input: &Array2<R>) -> Array2<R> {
        self.forward(input).output().clone()
    }

    /// Backpropagates `d_out` (gradient of the loss w.r.t. the network
    /// output) through the cached forward pass. Returns parameter gradients
    /// and the gradient w.r.t. the network input.
    pub fn backward(&self, cache: &MlpCache<R>, d_out: &Array2<R>) -> (MlpGrads<R>, Array2<R>) {
        let mut grads: Vec<LayerGrads<R>> = Vec::with_capacity(self.layers.len());
        let mut d = d_out.clone();
        for (layer, lc) in self.layers.iter().zip(&cache.layers).rev() {
            // Through the activation.
            let mut da = d.clone();
            da.zip_mut_with(&lc.pre_act, |g, &p| {
                *g = *g * layer.act.derivative(p, layer.act.apply(p))
            });
            // Through layer norm (if any) onto the linear output z.
            let (dz, dgain, doffset) = match (&layer.ln, &lc.y, &lc.inv_std) {
                (Some(ln), Some(y), Some(inv_std)) => {
                    let dgain = (&da * y).sum_axis(Axis(0));
                    let doffset = da.sum_axis(Axis(0));
                    let mut dy = da;
                    let shape = dy.dim();
                    dy.zip_mut_with(
                        &ln.gain.broadcast(shape).expect("gain broadcast"),
                        |g, &gain| *g = *g * gain,
                    );
                    let h_r = R::from_f64(y.ncols() as f64);
                    let mut dz = dy.clone();
                    for ((mut dz_row, dy_row), (y_row, &is)) in dz
                        .rows_mut()
                        .into_iter()
                        .zip(dy.rows())
                        .zip(y.rows().into_iter().zip(inv_std.iter()))
                    {
                        let mean_dy = dy_row.iter().fold(R::zero(), |a, &v| a + v) / h_r;
                        let mean_dy_y = dy_row
                            .iter()
                            .zip(y_row.iter())
                            .fold(R::zero(), |a, (&g, &yy)| a + g * yy)
                            / h_r;
                        for (g, &yy) in dz_row.iter_mut().zip(y_row.iter()) {
                            *g = is * (*g - mean_dy - yy * mean_dy_y);
                        }
                    }
                    (dz, Some(dgain), Some(doffset))
                }
                _ => (da, None, None),
            };
            let dw = dz.t().dot(&lc.x);
            let db = dz.sum_axis(Axis(0));
            d = dz.dot(&layer.w);
            grads.push(LayerGrads {
                dw,
                db,
                dgain,
                doffset,
            });
        }
        grads.reverse();
        (MlpGrads { layers: grads }, d)
    }

    /// Number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                l.w.len() + l.b.len() + l.ln.as_ref().map_or(0, |ln| ln.gain.len() + ln.offset.len())
            })
            .sum()
    }

    /// Parameters as contiguous mutable slices in canonical order.
    pub fn tensor_slices_mut(&mut self) -> Vec<&mut [R]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.w.as_slice_mut().expect("contiguous weights"));
            out.push(layer.b.as_slice_mut().expect("contiguous bias"));
            if let Some(ln) = &mut layer.ln {
                out.push(ln.gain.as_slice_mut().expect("contiguous gain"));
                out.push(ln.offset.as_slice_mut().expect("contiguous offset"));
            }
        }
        out
    }

    /// Parameters as contiguous slices in canonical order.
    pub fn tensor_slices(&self) -> Vec<&[R]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.push(layer.w.as_slice().expect("contiguous weights"));
            out.push(layer.b.as_slice().expect("contiguous bias"));
            if let Some(ln) = &layer.ln {
                out.push(ln.gain.as_slice().expect("contiguous gain"));
                out.push(ln.offset.as_slice().expect("contiguous offset"));
            }
        }
        out
    }

    /// Flattens all parameters to f64 in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensor_slices()
            .into_iter()
            .flatten()
            .map(|v| v.to_f64())
            .collect()
    }

    /// Loads parameters from a flat f64 vector (canonical order).
    pub fn load_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut k = 0;
        for slice in self.tensor_slices_mut() {
            for v in slice.iter_mut() {
                *v = R::from_f64(flat[k]);
                k += 1;
            }
        }
    }

    /// θ̄ ← τθ + (1−τ)θ̄ elementwise; panics on shape mismatch.
    pub fn polyak_from(&mut self, online: &Mlp<R>, tau: f64) {
        let t = R::from_f64(tau);
        let keep = R::one() - t;
        let online_slices = online.tensor_slices();
        let mut mine = self.tensor_slices_mut();
        assert_eq!(online_slices.len(), mine.len(), "tensor count mismatch");
        for (target, source) in mine.iter_mut().zip(online_slices) {
            assert_eq!(target.len(), source.len(), "tensor shape mismatch");
            for (tv, &sv) in target.iter_mut().zip(source) {
                *tv = t * sv + keep * *tv;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensor_slices()
            .into_iter()
            .flatten()
            .all(|v| v.is_finite())
    }
}

impl<R: Real> MlpGrads<R> {
    /// Gradients as contiguous slices in the same canonical order as the
    /// network's parameters.
    pub fn tensor_slices(&self) -> Vec<&[R]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.push(layer.dw.as_slice().expect("contiguous dw"));
            out.push(layer.db.as_slice().expect("contiguous db"));
            if let Some(g) = &layer.dgain {
                out.push(g.as_slice().expect("contiguous dgain"));
            }
            if let Some(o) = &layer.doffset {
                out.push(o.as_slice().expect("contiguous doffset"));
            }
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensor_slices()
            .into_iter()
            .flatten()
            .map(|v| v.to_f64())
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.tensor_slices()
            .into_iter()
            .flatten()
            .all(|v| v.is_finite())
    }
}
