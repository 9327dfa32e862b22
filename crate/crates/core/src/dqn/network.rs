use rand::Rng;

use super::{DqnError, Transition};

/// Fully connected layer, `weights` row-major with shape `(outputs, inputs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub outputs: usize,
    pub inputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { outputs, inputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.bias) {
            out.push(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b);
        }
    }
}

/// Multilayer perceptron with ReLU on every hidden layer and a linear
/// action-value head.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    layers: Vec<Layer>,
}

impl QNetwork {
    /// He-uniform initialisation; biases start at zero.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(dims);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2, "need at least input and output sizes");
        Self { layers: dims.windows(2).map(|d| Layer::zeros(d[0], d[1])).collect() }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, DqnError> {
        if layers.is_empty() {
            return Err(DqnError::Dimension("network has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(DqnError::Dimension(format!("layer {i} buffers do not match its shape")));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(DqnError::Dimension(format!("layer {i} input does not match previous output")));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// `[input, hidden..., output]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].inputs];
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, obs: &[f64]) -> Vec<f64> {
        assert_eq!(obs.len(), self.input_dim(), "observation has wrong dimension");
        let mut cur = obs.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Forward pass keeping every layer's pre-activation.
    fn forward_cached(&self, obs: &[f64], pre: &mut Vec<Vec<f64>>) {
        pre.resize_with(self.layers.len(), Vec::new);
        let mut input = obs.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&input, &mut pre[i]);
            if i < last {
                input.clear();
                input.extend(pre[i].iter().map(|v| v.max(0.0)));
            }
        }
    }

    /// Accumulates `d(output[action]) * upstream` into `grads`.
    fn backward_one(&self, obs: &[f64], pre: &[Vec<f64>], action: usize, upstream: f64, grads: &mut QNetwork) {
        let n = self.layers.len();
        let mut delta = vec![0.0; self.output_dim()];
        delta[action] = upstream;
        let mut act = Vec::new();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let input: &[f64] = if i == 0 {
                obs
            } else {
                act.clear();
                act.extend(pre[i - 1].iter().map(|v| v.max(0.0)));
                &act
            };
            let g = &mut grads.layers[i];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[r] += d;
                for (gw, x) in g.weights[r * layer.inputs..(r + 1) * layer.inputs].iter_mut().zip(input) {
                    *gw += d * x;
                }
            }
            if i > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (r, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (p, w) in prev.iter_mut().zip(&layer.weights[r * layer.inputs..(r + 1) * layer.inputs]) {
                        *p += d * w;
                    }
                }
                for (p, z) in prev.iter_mut().zip(&pre[i - 1]) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }

    /// Importance-weighted Huber loss (delta = 1) of the taken-action values
    /// against fixed `targets`, averaged over the batch, with its gradient.
    /// Returns `(loss, td_errors, gradient)` where `td_errors[i] = target - q`.
    pub fn loss_and_gradient(
        &self,
        batch: &[Transition],
        weights: &[f64],
        targets: &[f64],
    ) -> (f64, Vec<f64>, QNetwork) {
        assert_eq!(batch.len(), weights.len());
        assert_eq!(batch.len(), targets.len());
        let mut grads = QNetwork::zeros(&self.dims());
        let mut pre = Vec::new();
        let mut loss = 0.0;
        let mut td = Vec::with_capacity(batch.len());
        let scale = 1.0 / batch.len() as f64;
        for ((t, &w), &y) in batch.iter().zip(weights).zip(targets) {
            self.forward_cached(&t.obs, &mut pre);
            let q = pre.last().unwrap()[t.action];
            let err = q - y;
            td.push(y - q);
            loss += w * huber(err) * scale;
            let dq = w * err.clamp(-1.0, 1.0) * scale;
            if dq != 0.0 {
                self.backward_one(&t.obs, &pre, t.action, dq, &mut grads);
            }
        }
        (loss, td, grads)
    }

    /// `self -= lr * grad`.
    pub fn apply_gradient(&mut self, grad: &QNetwork, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, d) in l.weights.iter_mut().zip(&g.weights) {
                *w -= lr * d;
            }
            for (b, d) in l.bias.iter_mut().zip(&g.bias) {
                *b -= lr * d;
            }
        }
    }

    /// All parameters in layer order (weights then bias per layer).
    pub fn parameters(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

pub fn huber(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        0.5 * x * x
    } else {
        a - 0.5
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
