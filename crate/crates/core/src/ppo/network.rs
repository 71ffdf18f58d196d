//! Policy/value networks over the flat observation vector.
//!
//! Two layouts share one parameter format. [`Architecture::Dense`] feeds the
//! whole observation through a fully connected trunk. [`Architecture::PerDebris`]
//! scores every debris slot with the same weights: slot `j` sees its nine
//! orbital features, the chaser position and its own visited flag, and each
//! layer also receives the mean of the previous layer over all slots.
//!
//! Parameters live in one flat vector so the optimizer, gradient clipping
//! and finite-difference checks can treat them uniformly. Each dense layer
//! stores its weights row-major (`out x in`) followed by its bias.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::PpoError;
use crate::env::{observation_len, DEBRIS_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Dense,
    #[default]
    PerDebris,
}

/// Inputs seen by one debris slot in the per-debris layout.
pub const SLOT_FEATURES: usize = DEBRIS_FEATURES + 3 + 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub n_actions: usize,
    pub architecture: Architecture,
}

impl Topology {
    pub fn new(input_dim: usize, hidden: Vec<usize>, n_actions: usize) -> Self {
        Self {
            input_dim,
            hidden,
            activation: Activation::Tanh,
            n_actions,
            architecture: Architecture::Dense,
        }
    }

    /// Per-debris layout for `n` debris.
    pub fn per_debris(n: usize, hidden: Vec<usize>) -> Self {
        Self {
            architecture: Architecture::PerDebris,
            ..Self::new(observation_len(n), hidden, n)
        }
    }

    /// Trunk layers, then the policy head, then the value head.
    fn layers(&self) -> Vec<Dense> {
        let mut layers = Vec::with_capacity(self.hidden.len() + 2);
        let mut offset = 0;
        let mut push = |inputs: usize, outputs: usize| {
            layers.push(Dense {
                inputs,
                outputs,
                offset,
            });
            offset += outputs * (inputs + 1);
        };
        match self.architecture {
            Architecture::Dense => {
                let mut width = self.input_dim;
                for &h in &self.hidden {
                    push(width, h);
                    width = h;
                }
                push(width, self.n_actions);
                push(width, 1);
            }
            Architecture::PerDebris => {
                let mut width = SLOT_FEATURES;
                for &h in &self.hidden {
                    push(2 * width, h);
                    width = h;
                }
                push(width, 1);
                push(width, 1);
            }
        }
        layers
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.outputs * (l.inputs + 1)).sum()
    }

    fn validate(&self) -> Result<(), PpoError> {
        if self.input_dim == 0 || self.n_actions == 0 || self.hidden.contains(&0) {
            return Err(PpoError::Config(format!("degenerate topology {self:?}")));
        }
        if self.architecture == Architecture::PerDebris
            && (self.hidden.is_empty() || self.input_dim != observation_len(self.n_actions))
        {
            return Err(PpoError::Config(format!(
                "per-debris layout needs hidden layers and input width {}",
                observation_len(self.n_actions)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dense {
    inputs: usize,
    outputs: usize,
    offset: usize,
}

impl Dense {
    fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.outputs * self.inputs]
    }

    fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        let start = self.offset + self.outputs * self.inputs;
        &params[start..start + self.outputs]
    }

    fn apply(&self, params: &[f64], x: &[f64], out: &mut Vec<f64>) {
        let w = self.weights(params);
        out.clear();
        out.extend(
            self.bias(params)
                .iter()
                .zip(w.chunks_exact(self.inputs))
                .map(|(b, row)| b + dot(row, x)),
        );
    }

    /// Accumulates parameter gradients for upstream `dy` and returns `dx`.
    fn backward(&self, params: &[f64], x: &[f64], dy: &[f64], grad: &mut [f64], dx: Option<&mut Vec<f64>>) {
        let w_end = self.offset + self.outputs * self.inputs;
        let (gw, gb) = grad[self.offset..w_end + self.outputs].split_at_mut(self.outputs * self.inputs);
        for ((row, gb), &d) in gw.chunks_exact_mut(self.inputs).zip(gb.iter_mut()).zip(dy) {
            *gb += d;
            for (g, xi) in row.iter_mut().zip(x) {
                *g += d * xi;
            }
        }
        if let Some(dx) = dx {
            dx.clear();
            dx.resize(self.inputs, 0.0);
            let w = self.weights(params);
            for (row, &d) in w.chunks_exact(self.inputs).zip(dy) {
                for (g, wi) in dx.iter_mut().zip(row) {
                    *g += d * wi;
                }
            }
        }
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// `acts[0]` is the input, `acts[k]` the output of trunk layer `k`.
    acts: Vec<Vec<f64>>,
    /// Per-debris layout: `slots[k][j]` is layer `k`'s output for slot `j`.
    slots: Vec<Vec<Vec<f64>>>,
    pub logits: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpPolicy {
    pub topology: Topology,
    pub params: Vec<f64>,
    /// Length scale the observations were built with, km.
    pub r_norm: f64,
}

/// Gaussian matrix orthonormalized through QR, scaled by `gain`.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    let tall = rows >= cols;
    let (r, c) = if tall { (rows, cols) } else { (cols, rows) };
    let g = DMatrix::<f64>::from_fn(r, c, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    // Sign fix so the result is uniformly distributed.
    let diag = qr.r().diagonal();
    for (j, d) in diag.iter().enumerate() {
        if *d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let q = if tall { q } else { q.transpose() };
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(gain * q[(i, j)]);
        }
    }
    out
}

impl MlpPolicy {
    /// Orthogonal init: gain √2 in the trunk, 0.01 on the policy head, 1 on the value head.
    pub fn new<R: Rng + ?Sized>(topology: Topology, r_norm: f64, rng: &mut R) -> Result<Self, PpoError> {
        topology.validate()?;
        let layers = topology.layers();
        let last = layers.len() - 1;
        let mut params = Vec::with_capacity(topology.param_count());
        for (k, l) in layers.iter().enumerate() {
            let gain = match k {
                _ if k == last => 1.0,
                _ if k == last - 1 => 0.01,
                _ => std::f64::consts::SQRT_2,
            };
            params.extend(orthogonal(l.outputs, l.inputs, gain, rng));
            params.extend(std::iter::repeat_n(0.0, l.outputs));
        }
        Ok(Self {
            topology,
            params,
            r_norm,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.topology.n_actions
    }

    pub fn input_dim(&self) -> usize {
        self.topology.input_dim
    }

    pub fn validate(&self) -> Result<(), PpoError> {
        self.topology.validate()?;
        if self.params.len() != self.topology.param_count() {
            return Err(PpoError::Config(format!(
                "expected {} parameters, found {}",
                self.topology.param_count(),
                self.params.len()
            )));
        }
        if let Some(k) = self.params.iter().position(|p| !p.is_finite()) {
            return Err(PpoError::NonFinite(format!("parameter {k}")));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> (Vec<f64>, f64) {
        let mut cache = ForwardCache::default();
        self.forward_cached(input, &mut cache);
        (cache.logits, cache.value)
    }

    pub fn forward_cached(&self, input: &[f64], cache: &mut ForwardCache) {
        assert_eq!(input.len(), self.input_dim(), "observation width");
        if self.topology.architecture == Architecture::PerDebris {
            return self.forward_slots(input, cache);
        }
        let layers = self.topology.layers();
        let trunk = &layers[..layers.len() - 2];
        cache.acts.resize_with(trunk.len() + 1, Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(input);
        for (k, l) in trunk.iter().enumerate() {
            let (done, rest) = cache.acts.split_at_mut(k + 1);
            let out = &mut rest[0];
            l.apply(&self.params, &done[k], out);
            out.iter_mut().for_each(|v| *v = v.tanh());
        }
        let features = &cache.acts[trunk.len()];
        layers[layers.len() - 2].apply(&self.params, features, &mut cache.logits);
        let mut value = Vec::with_capacity(1);
        layers[layers.len() - 1].apply(&self.params, features, &mut value);
        cache.value = value[0];
    }

    /// Adds the parameter gradient of a scalar loss with upstream
    /// derivatives `d_logits` and `d_value` into `grad`.
    pub fn backward(&self, cache: &ForwardCache, d_logits: &[f64], d_value: f64, grad: &mut [f64]) {
        if self.topology.architecture == Architecture::PerDebris {
            return self.backward_slots(cache, d_logits, d_value, grad);
        }
        let layers = self.topology.layers();
        let n_trunk = layers.len() - 2;
        let features = &cache.acts[n_trunk];
        let mut d_feat = Vec::new();
        let mut d_tmp = Vec::new();
        layers[n_trunk].backward(&self.params, features, d_logits, grad, Some(&mut d_feat));
        layers[n_trunk + 1].backward(&self.params, features, &[d_value], grad, Some(&mut d_tmp));
        d_feat.iter_mut().zip(&d_tmp).for_each(|(a, b)| *a += b);
        for k in (0..n_trunk).rev() {
            // Through tanh: dy/dz = 1 - y².
            let y = &cache.acts[k + 1];
            d_feat.iter_mut().zip(y).for_each(|(d, y)| *d *= 1.0 - y * y);
            let dx = (k > 0).then_some(&mut d_tmp);
            layers[k].backward(&self.params, &cache.acts[k], &d_feat, grad, dx);
            if k > 0 {
                std::mem::swap(&mut d_feat, &mut d_tmp);
            }
        }
    }
}

fn slot_mean(xs: &[Vec<f64>]) -> Vec<f64> {
    let mut m = vec![0.0; xs[0].len()];
    for x in xs {
        m.iter_mut().zip(x).for_each(|(a, b)| *a += b);
    }
    let n = xs.len() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// Four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn concat(a: &[f64], b: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(a);
    out.extend_from_slice(b);
}

impl MlpPolicy {
    fn forward_slots(&self, input: &[f64], cache: &mut ForwardCache) {
        let n = self.n_actions();
        let layers = self.topology.layers();
        let trunk = &layers[..layers.len() - 2];
        let chaser = &input[DEBRIS_FEATURES * n..DEBRIS_FEATURES * n + 3];
        let visited = &input[DEBRIS_FEATURES * n + 3..];
        cache.slots.resize_with(trunk.len() + 1, Vec::new);
        cache.slots[0] = (0..n)
            .map(|j| {
                let mut u = input[DEBRIS_FEATURES * j..DEBRIS_FEATURES * (j + 1)].to_vec();
                u.extend_from_slice(chaser);
                u.push(visited[j]);
                u
            })
            .collect();
        for (k, l) in trunk.iter().enumerate() {
            // The slot-mean half of every row is shared by all slots.
            let half = l.inputs / 2;
            let w = l.weights(&self.params);
            let mean = slot_mean(&cache.slots[k]);
            let shared: Vec<f64> = l
                .bias(&self.params)
                .iter()
                .zip(w.chunks_exact(l.inputs))
                .map(|(b, row)| b + dot(&row[half..], &mean))
                .collect();
            // Rows outer so each weight row is read once for all slots.
            let mut next = vec![Vec::with_capacity(l.outputs); n];
            for (c, row) in shared.iter().zip(w.chunks_exact(l.inputs)) {
                for (out, x) in next.iter_mut().zip(&cache.slots[k]) {
                    out.push(c + dot(&row[..half], x));
                }
            }
            next.iter_mut().flatten().for_each(|v| *v = v.tanh());
            cache.slots[k + 1] = next;
        }
        let top = &cache.slots[trunk.len()];
        let mut out = Vec::with_capacity(1);
        cache.logits.clear();
        for h in top {
            layers[trunk.len()].apply(&self.params, h, &mut out);
            cache.logits.push(out[0]);
        }
        layers[trunk.len() + 1].apply(&self.params, &slot_mean(top), &mut out);
        cache.value = out[0];
    }

    fn backward_slots(&self, cache: &ForwardCache, d_logits: &[f64], d_value: f64, grad: &mut [f64]) {
        let n = self.n_actions();
        let nf = n as f64;
        let layers = self.topology.layers();
        let n_trunk = layers.len() - 2;
        let top = &cache.slots[n_trunk];
        let mut d_pool = Vec::new();
        layers[n_trunk + 1].backward(&self.params, &slot_mean(top), &[d_value], grad, Some(&mut d_pool));
        let mut d_h: Vec<Vec<f64>> = top
            .iter()
            .zip(d_logits)
            .map(|(h, &dl)| {
                let mut dx = Vec::new();
                layers[n_trunk].backward(&self.params, h, &[dl], grad, Some(&mut dx));
                dx.iter_mut().zip(&d_pool).for_each(|(a, b)| *a += b / nf);
                dx
            })
            .collect();
        let mut joined = Vec::new();
        let mut d_joined = Vec::new();
        for k in (0..n_trunk).rev() {
            let xs = &cache.slots[k];
            let width = xs[0].len();
            let mean = slot_mean(xs);
            let mut d_mean = vec![0.0; width];
            let mut d_prev = Vec::with_capacity(n);
            for (j, (x, y)) in xs.iter().zip(&cache.slots[k + 1]).enumerate() {
                d_h[j].iter_mut().zip(y).for_each(|(d, y)| *d *= 1.0 - y * y);
                concat(x, &mean, &mut joined);
                let dx = (k > 0).then_some(&mut d_joined);
                layers[k].backward(&self.params, &joined, &d_h[j], grad, dx);
                if k > 0 {
                    d_prev.push(d_joined[..width].to_vec());
                    d_mean.iter_mut().zip(&d_joined[width..]).for_each(|(a, b)| *a += b);
                }
            }
            if k > 0 {
                for d in &mut d_prev {
                    d.iter_mut().zip(&d_mean).for_each(|(a, b)| *a += b / nf);
                }
                d_h = d_prev;
            }
        }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-5,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Scales `grad` so its L2 norm is at most `max_norm`; returns the norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / (norm + 1e-6);
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}
