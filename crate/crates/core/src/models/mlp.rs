use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::sigmoid;
use super::ModelError;

/// One-hidden-layer perceptron: `d -> hidden (ReLU) -> 1 (sigmoid)`.
/// `w1` is row-major `hidden × d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub n_inputs: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 32,
            lr: 0.01,
            epochs: 200,
            patience: 20,
        }
    }
}

/// Gradients of the mean loss, laid out like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

const EPS: f64 = 1e-12;

impl Mlp {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    ///
    /// Hidden units come in mirrored pairs: both units of a pair share their
    /// input weights and have opposite output weights (an unpaired last unit
    /// gets output weight 0). The initial network therefore outputs exactly
    /// 0.5 and equals its own negation up to a permutation of hidden units, so
    /// training on swapped labels follows the mirrored trajectory and yields
    /// `1 - p`.
    pub fn init(n_inputs: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Mlp {
        let limit1 = (6.0 / (n_inputs + hidden) as f64).sqrt();
        let limit2 = (6.0 / (hidden + 1) as f64).sqrt();
        let mut w1 = Vec::with_capacity(hidden * n_inputs);
        let mut w2 = Vec::with_capacity(hidden);
        for _ in 0..hidden / 2 {
            let row: Vec<f64> = (0..n_inputs).map(|_| rng.random_range(-limit1..=limit1)).collect();
            w1.extend(&row);
            w1.extend(&row);
            let v = rng.random_range(-limit2..=limit2);
            w2.extend([v, -v]);
        }
        if hidden % 2 == 1 {
            w1.extend((0..n_inputs).map(|_| rng.random_range(-limit1..=limit1)));
            w2.push(0.0);
        }
        Mlp {
            n_inputs,
            hidden,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: 0.0,
        }
    }

    fn hidden_layer(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.n_inputs..(h + 1) * self.n_inputs];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[h]
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let z1 = self.hidden_layer(x);
        let out: f64 = z1
            .iter()
            .zip(&self.w2)
            .map(|(z, w)| z.max(0.0) * w)
            .sum::<f64>()
            + self.b2;
        sigmoid(out)
    }

    /// Mean binary cross-entropy; probabilities are clipped to `[1e-12, 1 - 1e-12]`.
    pub fn loss(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(row, &t)| {
                let p = self.predict(row).clamp(EPS, 1.0 - EPS);
                -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
            })
            .sum();
        total / x.len() as f64
    }

    /// Mean loss and its gradient by backpropagation.
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[f64]) -> (f64, Gradients) {
        let n = x.len() as f64;
        let mut g = Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.hidden],
            w2: vec![0.0; self.hidden],
            b2: 0.0,
        };
        let mut loss = 0.0;
        for (row, &t) in x.iter().zip(y) {
            let z1 = self.hidden_layer(row);
            let a1: Vec<f64> = z1.iter().map(|z| z.max(0.0)).collect();
            let out = a1.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>() + self.b2;
            let p = sigmoid(out);
            let pc = p.clamp(EPS, 1.0 - EPS);
            loss -= t * pc.ln() + (1.0 - t) * (1.0 - pc).ln();
            // d loss / d out for sigmoid + cross-entropy.
            let delta = (p - t) / n;
            g.b2 += delta;
            for h in 0..self.hidden {
                g.w2[h] += delta * a1[h];
                if z1[h] > 0.0 {
                    let dh = delta * self.w2[h];
                    g.b1[h] += dh;
                    let base = h * self.n_inputs;
                    for (j, v) in row.iter().enumerate() {
                        g.w1[base + j] += dh * v;
                    }
                }
            }
        }
        (loss / n, g)
    }

    fn step(&mut self, g: &Gradients, lr: f64) {
        for (w, d) in self.w1.iter_mut().zip(&g.w1) {
            *w -= lr * d;
        }
        for (b, d) in self.b1.iter_mut().zip(&g.b1) {
            *b -= lr * d;
        }
        for (w, d) in self.w2.iter_mut().zip(&g.w2) {
            *w -= lr * d;
        }
        self.b2 -= lr * g.b2;
    }

    /// All parameters as one flat vector: w1, b1, w2, b2.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + 2 * self.hidden + 1);
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn set_flat_params(&mut self, v: &[f64]) {
        let (w1, rest) = v.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, rest) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
    }
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + 2 * self.b1.len() + 1);
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }
}

/// Outcome of MLP training.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpFit {
    pub network: Mlp,
    pub epochs_run: usize,
    pub final_loss: f64,
}

/// Full-batch gradient descent on the mean cross-entropy. With a validation
/// fold, training stops after `patience` epochs without a lower validation
/// loss and the best weights are restored.
pub fn fit_mlp(
    x: &[Vec<f64>],
    y: &[f64],
    valid: Option<(&[Vec<f64>], &[f64])>,
    params: &MlpParams,
    rng: &mut ChaCha8Rng,
) -> Result<MlpFit, ModelError> {
    if params.hidden == 0 {
        return Err(ModelError::Parameter("hidden must be at least 1".into()));
    }
    if !(params.lr > 0.0 && params.lr.is_finite()) {
        return Err(ModelError::Parameter(format!("lr must be > 0, got {}", params.lr)));
    }
    let d = x.first().map_or(0, Vec::len);
    let mut net = Mlp::init(d, params.hidden, rng);
    let mut best: Option<(f64, Mlp)> = None;
    let mut since_best = 0;
    let mut epochs_run = 0;
    for epoch in 1..=params.epochs {
        let (loss, grad) = net.loss_and_gradient(x, y);
        if !loss.is_finite() {
            return Err(ModelError::Divergence { epoch });
        }
        net.step(&grad, params.lr);
        epochs_run = epoch;
        if let Some((vx, vy)) = valid {
            let vloss = net.loss(vx, vy);
            if !vloss.is_finite() {
                return Err(ModelError::Divergence { epoch });
            }
            if best.as_ref().is_none_or(|(b, _)| vloss < *b) {
                best = Some((vloss, net.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= params.patience {
                    break;
                }
            }
        }
    }
    if let Some((_, b)) = best {
        net = b;
    }
    let final_loss = net.loss(x, y);
    if !final_loss.is_finite() {
        return Err(ModelError::Divergence { epoch: epochs_run });
    }
    Ok(MlpFit {
        network: net,
        epochs_run,
        final_loss,
    })
}
