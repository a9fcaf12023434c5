//! A small dense-network engine: ReLU MLPs with exact reverse-mode
//! gradients, Adam, soft target updates, and budget-normalizing output heads.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps raw scores to a nonnegative vector summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Softmax,
    /// `relu(z) / ‖relu(z)‖₁`, uniform when every entry is clipped.
    L1Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    Linear,
    Relu,
    Normalized(Normalization),
}

impl Normalization {
    pub fn apply(self, raw: &[f64]) -> Vec<f64> {
        let n = raw.len();
        if n == 0 {
            return Vec::new();
        }
        match self {
            Normalization::Softmax => {
                let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exp: Vec<f64> = raw.iter().map(|z| (z - max).exp()).collect();
                let sum: f64 = exp.iter().sum();
                exp.into_iter().map(|e| e / sum).collect()
            }
            Normalization::L1Relu => {
                let r: Vec<f64> = raw.iter().map(|z| z.max(0.0)).collect();
                let sum: f64 = r.iter().sum();
                if sum > 0.0 {
                    r.into_iter().map(|x| x / sum).collect()
                } else {
                    vec![1.0 / n as f64; n]
                }
            }
        }
    }

    /// Vector-Jacobian product: gradient w.r.t. `raw` given the gradient
    /// w.r.t. the normalized output `out`.
    fn backward(self, raw: &[f64], out: &[f64], grad_out: &[f64]) -> Vec<f64> {
        let dot: f64 = grad_out.iter().zip(out).map(|(g, y)| g * y).sum();
        match self {
            Normalization::Softmax => out.iter().zip(grad_out).map(|(y, g)| y * (g - dot)).collect(),
            Normalization::L1Relu => {
                let sum: f64 = raw.iter().map(|z| z.max(0.0)).sum();
                if sum > 0.0 {
                    raw.iter()
                        .zip(grad_out)
                        .map(|(&z, g)| if z > 0.0 { (g - dot) / sum } else { 0.0 })
                        .collect()
                } else {
                    vec![0.0; raw.len()]
                }
            }
        }
    }
}

/// `total · normalize(raw)`: nonnegative entries summing to `total`.
pub fn normalize_budget(raw: &[f64], normalization: Normalization, total: f64) -> Vec<f64> {
    normalization.apply(raw).into_iter().map(|x| x * total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct AdamState {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &MlpNet) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            g.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Flattened in the same order as [`MlpNet::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn sum_squares(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flat_map(|g| g.iter())
            .map(|x| x * x)
            .sum()
    }
}

/// Activations cached by a forward pass, consumed by [`MlpNet::backward`].
#[derive(Debug)]
pub struct Tape {
    layer_inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
    output: Vec<f64>,
    sizes: Vec<usize>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

/// Feed-forward network: affine layers, ReLU between them, `head` on the last.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet {
    sizes: Vec<usize>,
    layers: Vec<Dense>,
    head: Head,
    adam: AdamState,
}

impl MlpNet {
    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], head: Head, rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Argument(format!("invalid layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Dense {
                    inputs: w[0],
                    outputs: w[1],
                    weights: (0..w[0] * w[1]).map(|_| rng.random_range(-bound..=bound)).collect(),
                    bias: (0..w[1]).map(|_| rng.random_range(-bound..=bound)).collect(),
                }
            })
            .collect();
        Ok(MlpNet {
            sizes: sizes.to_vec(),
            layers,
            head,
            adam: AdamState::default(),
        })
    }

    /// Builds a network from explicit `(weights, bias)` per layer; weights
    /// row-major `outputs × inputs`.
    pub fn from_parameters(sizes: &[usize], head: Head, layers: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if sizes.len() < 2 || layers.len() != sizes.len() - 1 {
            return Err(Error::Argument("layer count does not match sizes".into()));
        }
        let layers = sizes
            .windows(2)
            .zip(layers)
            .map(|(w, (weights, bias))| {
                if weights.len() != w[0] * w[1] || bias.len() != w[1] {
                    return Err(Error::Argument(format!("layer {}x{} has wrong parameter shapes", w[1], w[0])));
                }
                Ok(Dense {
                    inputs: w[0],
                    outputs: w[1],
                    weights,
                    bias,
                })
            })
            .collect::<Result<_>>()?;
        Ok(MlpNet {
            sizes: sizes.to_vec(),
            layers,
            head,
            adam: AdamState::default(),
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(Error::Argument(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_len()
            )));
        }
        Ok(())
    }

    /// Last-layer pre-activations (before the head).
    pub fn logits(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            x = layer.affine(&x);
            if i + 1 < self.layers.len() {
                x.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        Ok(x)
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(apply_head(self.head, &self.logits(input)?))
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.check_input(input)?;
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&x);
            layer_inputs.push(x);
            x = if i + 1 < self.layers.len() {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                apply_head(self.head, &z)
            };
            pre_activations.push(z);
        }
        let tape = Tape {
            layer_inputs,
            pre_activations,
            output: x.clone(),
            sizes: self.sizes.clone(),
        };
        Ok((x, tape))
    }

    /// Gradients of `output · output_grad` w.r.t. every parameter and the input.
    pub fn backward(&self, tape: Tape, output_grad: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backward_into(tape, output_grad, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`backward`](Self::backward) but adds into `grads`, for
    /// accumulating over a batch.
    pub fn backward_into(&self, tape: Tape, output_grad: &[f64], grads: &mut Gradients) -> Result<Vec<f64>> {
        self.reverse(tape, output_grad, Some(grads))
    }

    /// Gradient w.r.t. the input only; parameter gradients are skipped.
    pub fn input_gradient(&self, tape: Tape, output_grad: &[f64]) -> Result<Vec<f64>> {
        self.reverse(tape, output_grad, None)
    }

    fn reverse(&self, tape: Tape, output_grad: &[f64], mut grads: Option<&mut Gradients>) -> Result<Vec<f64>> {
        if tape.sizes != self.sizes {
            return Err(Error::Contract(format!(
                "tape recorded for layer sizes {:?}, network has {:?}",
                tape.sizes, self.sizes
            )));
        }
        if output_grad.len() != self.output_len() {
            return Err(Error::Argument(format!(
                "output gradient has {} entries, network outputs {}",
                output_grad.len(),
                self.output_len()
            )));
        }
        let last = self.layers.len() - 1;
        let mut dz = head_backward(self.head, &tape.pre_activations[last], &tape.output, output_grad);
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let x = &tape.layer_inputs[i];
            let mut dx = vec![0.0; layer.inputs];
            match grads.as_deref_mut() {
                Some(g) => {
                    let (gw, gb) = (&mut g.weights[i], &mut g.biases[i]);
                    for (o, &d) in dz.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        gb[o] += d;
                        let row = o * layer.inputs;
                        let w = &layer.weights[row..row + layer.inputs];
                        let gw = &mut gw[row..row + layer.inputs];
                        for j in 0..layer.inputs {
                            gw[j] += d * x[j];
                            dx[j] += w[j] * d;
                        }
                    }
                }
                None => {
                    for (o, &d) in dz.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let row = o * layer.inputs;
                        for (dxj, w) in dx.iter_mut().zip(&layer.weights[row..row + layer.inputs]) {
                            *dxj += w * d;
                        }
                    }
                }
            }
            if i > 0 {
                let z = &tape.pre_activations[i - 1];
                dx.iter_mut().zip(z).for_each(|(g, &zv)| {
                    if zv <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            dz = dx;
        }
        Ok(dz)
    }

    /// One Adam update minimizing the loss whose gradient is `grads`.
    pub fn adam_step(&mut self, grads: &Gradients, config: AdamConfig) -> Result<()> {
        let shapes_match = grads.weights.len() == self.layers.len()
            && self
                .layers
                .iter()
                .zip(grads.weights.iter().zip(&grads.biases))
                .all(|(l, (w, b))| l.weights.len() == w.len() && l.bias.len() == b.len());
        if !shapes_match {
            return Err(Error::Argument("gradient shapes do not match the network".into()));
        }
        let count = self.parameter_count();
        let state = &mut self.adam;
        if state.m.len() != count {
            state.m = vec![0.0; count];
            state.v = vec![0.0; count];
            state.step = 0;
        }
        state.step += 1;
        let t = state.step as i32;
        let c1 = 1.0 - config.beta1.powi(t);
        let c2 = 1.0 - config.beta2.powi(t);
        let mut k = 0;
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(grads.weights.iter().zip(&grads.biases)) {
            for (p, g) in layer.weights.iter_mut().chain(layer.bias.iter_mut()).zip(gw.iter().chain(gb)) {
                let m = &mut state.m[k];
                let v = &mut state.v[k];
                *m = config.beta1 * *m + (1.0 - config.beta1) * g;
                *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
                k += 1;
            }
        }
        Ok(())
    }

    /// `self ← τ·live + (1 − τ)·self`.
    pub fn soft_update_from(&mut self, live: &MlpNet, tau: f64) -> Result<()> {
        if live.sizes != self.sizes {
            return Err(Error::Argument("soft update between differently shaped networks".into()));
        }
        for (t, l) in self.layers.iter_mut().zip(&live.layers) {
            for (tp, lp) in t.weights.iter_mut().chain(t.bias.iter_mut()).zip(l.weights.iter().chain(&l.bias)) {
                *tp = tau * lp + (1.0 - tau) * *tp;
            }
        }
        Ok(())
    }

    /// All parameters, layer by layer, weights then bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::Argument(format!(
                "{} parameters for a network with {}",
                params.len(),
                self.parameter_count()
            )));
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, tail) = tail.split_at(l.bias.len());
            l.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Writes `<stem>.bin` (little-endian f64 parameters) and `<stem>.json`
    /// (shapes and head).
    pub fn save(&self, stem: impl AsRef<Path>) -> Result<()> {
        let stem = stem.as_ref();
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let bytes: Vec<u8> = self.parameters().iter().flat_map(|p| p.to_le_bytes()).collect();
        std::fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
        let meta = NetMeta {
            sizes: self.sizes.clone(),
            head: self.head,
            layers: self
                .layers
                .iter()
                .map(|l| LayerMeta {
                    weights: [l.outputs, l.inputs],
                    bias: l.outputs,
                })
                .collect(),
            parameter_count: self.parameter_count(),
        };
        std::fs::write(&json, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&json, e))?;
        Ok(())
    }

    pub fn load(stem: impl AsRef<Path>) -> Result<Self> {
        let stem = stem.as_ref();
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let meta: NetMeta =
            serde_json::from_str(&std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?)?;
        let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        if bytes.len() != meta.parameter_count * 8 {
            return Err(Error::Argument(format!(
                "{} holds {} bytes, expected {}",
                bin.display(),
                bytes.len(),
                meta.parameter_count * 8
            )));
        }
        let params: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let layers = meta
            .sizes
            .windows(2)
            .map(|w| (vec![0.0; w[0] * w[1]], vec![0.0; w[1]]))
            .collect();
        let mut net = MlpNet::from_parameters(&meta.sizes, meta.head, layers)?;
        net.set_parameters(&params)?;
        Ok(net)
    }
}

#[derive(Serialize, Deserialize)]
struct LayerMeta {
    weights: [usize; 2],
    bias: usize,
}

#[derive(Serialize, Deserialize)]
struct NetMeta {
    sizes: Vec<usize>,
    head: Head,
    layers: Vec<LayerMeta>,
    parameter_count: usize,
}

fn apply_head(head: Head, z: &[f64]) -> Vec<f64> {
    match head {
        Head::Linear => z.to_vec(),
        Head::Relu => z.iter().map(|v| v.max(0.0)).collect(),
        Head::Normalized(n) => n.apply(z),
    }
}

fn head_backward(head: Head, z: &[f64], out: &[f64], grad: &[f64]) -> Vec<f64> {
    match head {
        Head::Linear => grad.to_vec(),
        Head::Relu => z.iter().zip(grad).map(|(&zv, &g)| if zv > 0.0 { g } else { 0.0 }).collect(),
        Head::Normalized(n) => n.backward(z, out, grad),
    }
}
