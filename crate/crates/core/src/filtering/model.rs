use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::patch::PatchFeatureMap;
use crate::error::{invalid, Error, Result};
use crate::rng::stream;

const LEAK: f64 = 0.2;
const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Truncated hinge on discriminator outputs `z`:
    /// `max(0, th+ - z(noisy)) + max(0, z(clean) + th-)`.
    #[default]
    Hinge,
    /// Binary cross-entropy on `sigmoid(z)`, clean = 0, noisy = 1.
    Logistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Feature maps per optimizer step.
    pub batch: usize,
    pub noise_sigma: f64,
    pub lr_discriminator: f64,
    pub lr_adaptor: f64,
    pub weight_decay: f64,
    pub th_plus: f64,
    pub th_minus: f64,
    pub loss: LossKind,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 160,
            batch: 4,
            noise_sigma: 0.015,
            lr_discriminator: 2e-4,
            lr_adaptor: 1e-4,
            weight_decay: 1e-5,
            th_plus: 0.5,
            th_minus: 0.5,
            loss: LossKind::Hinge,
            hidden: 1024,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch == 0 || self.hidden == 0 {
            return Err(invalid("epochs, batch and hidden must be positive"));
        }
        if !(self.noise_sigma > 0.0) || !self.noise_sigma.is_finite() {
            return Err(invalid("noise_sigma must be positive"));
        }
        for (name, v) in [("th_plus", self.th_plus), ("th_minus", self.th_minus)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(alloc::format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.lr_discriminator > 0.0 && self.lr_adaptor >= 0.0 && self.weight_decay >= 0.0) {
            return Err(invalid("learning rates must be positive and weight decay nonnegative"));
        }
        Ok(())
    }
}

/// Standardization, a `dim x dim` affine adaptor, and a discriminator:
/// linear layer, batch normalization, LeakyReLU(0.2), linear scalar output.
/// With running statistics the normalization is affine, so a trained model
/// scores with two affine layers around one nonlinearity.
///
/// Trainable parameters live in one flat vector: adaptor weights (row-major)
/// and bias, first-layer weights (`hidden x dim`), normalization scale and
/// shift (`hidden` each), output weights (`hidden`), output bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterModel {
    dim: usize,
    hidden: usize,
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    params: Vec<f64>,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
    config: TrainConfig,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

fn leaky(y: f64) -> f64 {
    if y > 0.0 {
        y
    } else {
        LEAK * y
    }
}

pub fn param_count(dim: usize, hidden: usize) -> usize {
    dim * dim + dim + hidden * dim + 3 * hidden + 1
}

/// Offsets of the parameter blocks.
#[derive(Clone, Copy)]
struct Layout {
    d: usize,
    k: usize,
}

impl Layout {
    fn adaptor_w(self) -> usize {
        0
    }
    fn adaptor_b(self) -> usize {
        self.d * self.d
    }
    fn w1(self) -> usize {
        self.d * self.d + self.d
    }
    fn gamma(self) -> usize {
        self.w1() + self.k * self.d
    }
    fn beta(self) -> usize {
        self.gamma() + self.k
    }
    fn w2(self) -> usize {
        self.beta() + self.k
    }
    fn b2(self) -> usize {
        self.w2() + self.k
    }
}

/// Training-mode pass over one batch.
pub struct BatchPass {
    pub loss: f64,
    pub grad: Vec<f64>,
    /// Per-unit batch mean and biased variance of the first layer.
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
}

impl FilterModel {
    /// Reassembles a model from stored parts.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dim: usize,
        hidden: usize,
        mean: Vec<f64>,
        inv_std: Vec<f64>,
        params: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
        config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if dim == 0 || hidden != config.hidden {
            return Err(invalid("model dims disagree with its configuration"));
        }
        if mean.len() != dim
            || inv_std.len() != dim
            || params.len() != param_count(dim, hidden)
            || running_mean.len() != hidden
            || running_var.len() != hidden
        {
            return Err(invalid("model parameter blocks have the wrong length"));
        }
        if let Some(index) = mean
            .iter()
            .chain(&inv_std)
            .chain(&params)
            .chain(&running_mean)
            .chain(&running_var)
            .position(|v| !v.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        if running_var.iter().any(|v| *v < 0.0) {
            return Err(invalid("negative running variance"));
        }
        Ok(Self { dim, hidden, mean, inv_std, params, running_mean, running_var, config })
    }

    /// Identity adaptor, unit normalization, and seeded uniform weights
    /// scaled by `1/sqrt(fan_in)`.
    pub fn init(dim: usize, mean: Vec<f64>, inv_std: Vec<f64>, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let k = config.hidden;
        let l = Layout { d: dim, k };
        let mut rng = stream(config.seed, &[u64::MAX]);
        let mut params = vec![0.0; param_count(dim, k)];
        for i in 0..dim {
            params[i * dim + i] = 1.0;
        }
        let b1 = 1.0 / libm::sqrt(dim as f64);
        for p in &mut params[l.w1()..l.gamma()] {
            *p = rng.random_range(-b1..b1);
        }
        params[l.gamma()..l.beta()].fill(1.0);
        let b2 = 1.0 / libm::sqrt(k as f64);
        for p in &mut params[l.w2()..] {
            *p = rng.random_range(-b2..b2);
        }
        Self::from_parts(dim, k, mean, inv_std, params, vec![0.0; k], vec![1.0; k], *config)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn inv_std(&self) -> &[f64] {
        &self.inv_std
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn running_mean(&self) -> &[f64] {
        &self.running_mean
    }

    pub fn running_var(&self) -> &[f64] {
        &self.running_var
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    fn layout(&self) -> Layout {
        Layout { d: self.dim, k: self.hidden }
    }

    /// Number of leading parameters that belong to the adaptor.
    pub fn adaptor_len(&self) -> usize {
        self.dim * self.dim + self.dim
    }

    pub fn standardize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.mean).zip(&self.inv_std).map(|((v, m), s)| (v - m) * s).collect()
    }

    fn adapt(&self, x: &[f64], a: &mut [f64]) {
        let (d, l, p) = (self.dim, self.layout(), &self.params);
        for i in 0..d {
            let row = &p[l.adaptor_w() + i * d..l.adaptor_w() + (i + 1) * d];
            a[i] = p[l.adaptor_b() + i] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    fn first_layer(&self, a: &[f64], h: &mut [f64]) {
        let (d, l, p) = (self.dim, self.layout(), &self.params);
        for (u, hu) in h.iter_mut().enumerate() {
            let row = &p[l.w1() + u * d..l.w1() + (u + 1) * d];
            *hu = row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Inference-mode output for a standardized vector (running statistics).
    pub fn logit(&self, x: &[f64]) -> f64 {
        let l = self.layout();
        let p = &self.params;
        let mut a = vec![0.0; self.dim];
        let mut h = vec![0.0; self.hidden];
        self.adapt(x, &mut a);
        self.first_layer(&a, &mut h);
        let mut out = p[l.b2()];
        for u in 0..self.hidden {
            let xh = (h[u] - self.running_mean[u]) / libm::sqrt(self.running_var[u] + BN_EPS);
            out += p[l.w2() + u] * leaky(p[l.gamma() + u] * xh + p[l.beta() + u]);
        }
        out
    }

    /// Logistic anomaly score in [0, 1] for a raw (unstandardized) vector.
    pub fn score(&self, raw: &[f64]) -> f64 {
        sigmoid(self.logit(&self.standardize(raw)))
    }

    /// Loss, exact gradient, and batch statistics of one training-mode pass.
    /// `clean` and `noisy` hold standardized row-major vectors; both halves
    /// share the batch normalization statistics.
    pub fn batch_pass(&self, clean: &[f64], noisy: &[f64]) -> Result<BatchPass> {
        let (d, k, l) = (self.dim, self.hidden, self.layout());
        if !clean.len().is_multiple_of(d) || !noisy.len().is_multiple_of(d) {
            return Err(invalid("batch length is not a multiple of the feature dimension"));
        }
        let n_clean = clean.len() / d;
        let m = n_clean + noisy.len() / d;
        if m < 2 {
            return Err(invalid("a training batch needs at least two vectors"));
        }
        let p = &self.params;
        let cfg = &self.config;
        let x: Vec<&[f64]> = clean.chunks_exact(d).chain(noisy.chunks_exact(d)).collect();

        let mut a = vec![0.0; m * d];
        let mut h = vec![0.0; m * k];
        for n in 0..m {
            self.adapt(x[n], &mut a[n * d..(n + 1) * d]);
            self.first_layer(&a[n * d..(n + 1) * d], &mut h[n * k..(n + 1) * k]);
        }
        let mut mu = vec![0.0; k];
        let mut var = vec![0.0; k];
        for u in 0..k {
            mu[u] = (0..m).map(|n| h[n * k + u]).sum::<f64>() / m as f64;
            var[u] = (0..m).map(|n| (h[n * k + u] - mu[u]) * (h[n * k + u] - mu[u])).sum::<f64>() / m as f64;
        }
        let inv_sd: Vec<f64> = var.iter().map(|v| 1.0 / libm::sqrt(v + BN_EPS)).collect();
        let mut xh = vec![0.0; m * k];
        let mut y = vec![0.0; m * k];
        let mut g_out = vec![0.0; m];
        let mut loss = 0.0;
        for n in 0..m {
            let mut z = p[l.b2()];
            for u in 0..k {
                let i = n * k + u;
                xh[i] = (h[i] - mu[u]) * inv_sd[u];
                y[i] = p[l.gamma() + u] * xh[i] + p[l.beta() + u];
                z += p[l.w2() + u] * leaky(y[i]);
            }
            let noisy = n >= n_clean;
            g_out[n] = match (cfg.loss, noisy) {
                (LossKind::Hinge, false) if z + cfg.th_minus > 0.0 => {
                    loss += z + cfg.th_minus;
                    1.0
                }
                (LossKind::Hinge, true) if cfg.th_plus - z > 0.0 => {
                    loss += cfg.th_plus - z;
                    -1.0
                }
                (LossKind::Hinge, _) => 0.0,
                (LossKind::Logistic, false) => {
                    loss += softplus(z);
                    sigmoid(z)
                }
                (LossKind::Logistic, true) => {
                    loss += softplus(-z);
                    sigmoid(z) - 1.0
                }
            };
        }

        let mut grad = vec![0.0; p.len()];
        grad[l.b2()] = g_out.iter().sum();
        // dL/d(xhat), then through the normalization to dL/dh.
        let mut g_xh = vec![0.0; m * k];
        for n in 0..m {
            if g_out[n] == 0.0 {
                continue;
            }
            for u in 0..k {
                let i = n * k + u;
                grad[l.w2() + u] += g_out[n] * leaky(y[i]);
                let g_y = g_out[n] * p[l.w2() + u] * if y[i] > 0.0 { 1.0 } else { LEAK };
                grad[l.gamma() + u] += g_y * xh[i];
                grad[l.beta() + u] += g_y;
                g_xh[i] = g_y * p[l.gamma() + u];
            }
        }
        let mut g_h = vec![0.0; m * k];
        for u in 0..k {
            let s1: f64 = (0..m).map(|n| g_xh[n * k + u]).sum();
            let s2: f64 = (0..m).map(|n| g_xh[n * k + u] * xh[n * k + u]).sum();
            for n in 0..m {
                let i = n * k + u;
                g_h[i] = inv_sd[u] / m as f64 * (m as f64 * g_xh[i] - s1 - xh[i] * s2);
            }
        }
        let mut g_a = vec![0.0; d];
        for n in 0..m {
            g_a.fill(0.0);
            for u in 0..k {
                let gh = g_h[n * k + u];
                if gh == 0.0 {
                    continue;
                }
                let row = l.w1() + u * d;
                for j in 0..d {
                    grad[row + j] += gh * a[n * d + j];
                    g_a[j] += gh * p[row + j];
                }
            }
            for i in 0..d {
                grad[l.adaptor_b() + i] += g_a[i];
                for j in 0..d {
                    grad[l.adaptor_w() + i * d + j] += g_a[i] * x[n][j];
                }
            }
        }
        Ok(BatchPass { loss, grad, batch_mean: mu, batch_var: var })
    }
}

/// Summed batch loss and its exact gradient with respect to every trainable
/// parameter, in training mode. `clean` and `noisy` hold standardized
/// row-major vectors.
pub fn loss_and_grad(model: &FilterModel, clean: &[f64], noisy: &[f64]) -> Result<(f64, Vec<f64>)> {
    let pass = model.batch_pass(clean, noisy)?;
    Ok((pass.loss, pass.grad))
}

/// Per-feature mean and inverse std over all training vectors; constant
/// features get an inverse std of 1.
fn standardization(maps: &[PatchFeatureMap], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = maps.iter().map(|m| m.grid_h() * m.grid_w()).sum::<usize>() as f64;
    let mut mean = vec![0.0; dim];
    for v in maps.iter().flat_map(|m| m.vectors()) {
        for j in 0..dim {
            mean[j] += v[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for v in maps.iter().flat_map(|m| m.vectors()) {
        for j in 0..dim {
            var[j] += (v[j] - mean[j]) * (v[j] - mean[j]);
        }
    }
    let inv_std = var
        .iter()
        .zip(&mean)
        .map(|(v, m)| {
            let s = libm::sqrt(v / n);
            if s <= 1e-12 * (1.0 + m.abs()) {
                1.0
            } else {
                1.0 / s
            }
        })
        .collect();
    (mean, inv_std)
}

/// Trains the filter on normal feature maps against Gaussian-noised copies.
///
/// Each epoch visits the maps in a seeded shuffle, `batch` maps per Adam step.
/// Noise is drawn in standardized space from the stream `(seed, epoch, step)`.
/// Weight decay is added to the gradient (L2), as in classic Adam.
pub fn train_filter(maps: &[PatchFeatureMap], cfg: &TrainConfig) -> Result<FilterModel> {
    cfg.validate()?;
    let first = maps.first().ok_or_else(|| invalid("no training feature maps"))?;
    let dim = first.dim();
    if maps.iter().any(|m| m.dim() != dim) {
        return Err(invalid("training feature maps disagree on dimension"));
    }
    let (mean, inv_std) = standardization(maps, dim);
    let mut model = FilterModel::init(dim, mean, inv_std, cfg)?;
    let standardized: Vec<Vec<f64>> =
        maps.iter().map(|m| m.vectors().flat_map(|v| model.standardize(v)).collect()).collect();

    let n_params = model.params.len();
    let split = model.adaptor_len();
    let (mut m1, mut m2) = (vec![0.0; n_params], vec![0.0; n_params]);
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|_| invalid("bad noise sigma"))?;
    let mut t = 0i32;
    let mut order: Vec<usize> = (0..maps.len()).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream(cfg.seed, &[epoch as u64]));
        for (step, chunk) in order.chunks(cfg.batch).enumerate() {
            let clean: Vec<f64> = chunk.iter().flat_map(|&i| standardized[i].iter().copied()).collect();
            if clean.len() / dim + clean.len() / dim < 2 {
                continue;
            }
            let mut rng = stream(cfg.seed, &[epoch as u64, step as u64]);
            let noisy: Vec<f64> = clean.iter().map(|v| v + noise.sample(&mut rng)).collect();
            let pass = model.batch_pass(&clean, &noisy)?;
            if !pass.loss.is_finite() || pass.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            let m = (clean.len() / dim * 2) as f64;
            for u in 0..model.hidden {
                model.running_mean[u] = (1.0 - BN_MOMENTUM) * model.running_mean[u] + BN_MOMENTUM * pass.batch_mean[u];
                let unbiased = pass.batch_var[u] * m / (m - 1.0);
                model.running_var[u] = (1.0 - BN_MOMENTUM) * model.running_var[u] + BN_MOMENTUM * unbiased;
            }
            t += 1;
            let c1 = 1.0 - libm::pow(ADAM_BETA1, t as f64);
            let c2 = 1.0 - libm::pow(ADAM_BETA2, t as f64);
            let mut grad = pass.grad;
            for (i, g) in grad.iter_mut().enumerate() {
                let p = &mut model.params[i];
                *g += cfg.weight_decay * *p;
                m1[i] = ADAM_BETA1 * m1[i] + (1.0 - ADAM_BETA1) * *g;
                m2[i] = ADAM_BETA2 * m2[i] + (1.0 - ADAM_BETA2) * *g * *g;
                let lr = if i < split { cfg.lr_adaptor } else { cfg.lr_discriminator };
                *p -= lr * (m1[i] / c1) / (libm::sqrt(m2[i] / c2) + ADAM_EPS);
            }
        }
    }
    Ok(model)
}
