use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{cholesky_solve, dot, sigmoid};
use super::ModelError;

/// Weight vector plus intercept of a linear decision function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearParams {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.intercept
    }
}

/// Ridge regression with an unpenalised intercept: solves
/// `(XcᵀXc + λI) w = Xcᵀ(y - ȳ)` on column-centred data, then
/// `b = ȳ - x̄ᵀw`. This is the same solution as the full normal equations with
/// the intercept column left out of the penalty.
pub fn fit_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<LinearParams, ModelError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ModelError::Parameter(format!("lambda must be > 0, got {lambda}")));
    }
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(ModelError::Precondition("ridge needs at least one row".into()));
    }
    let d = x[0].len();
    let mean_x: Vec<f64> = (0..d)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mean_y = y.iter().sum::<f64>() / n as f64;

    let mut a = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    let mut centred = vec![0.0; d];
    for (row, &target) in x.iter().zip(y) {
        for j in 0..d {
            centred[j] = row[j] - mean_x[j];
        }
        let yc = target - mean_y;
        for i in 0..d {
            rhs[i] += centred[i] * yc;
            for j in 0..=i {
                a[i * d + j] += centred[i] * centred[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            a[j * d + i] = a[i * d + j];
        }
        a[i * d + i] += lambda;
    }
    let weights = cholesky_solve(&a, &rhs)
        .expect("XᵀX + λI is positive definite for λ > 0");
    let intercept = mean_y - dot(&mean_x, &weights);
    Ok(LinearParams { weights, intercept })
}

/// Mean hinge loss with labels in {0, 1} mapped to {-1, +1}.
pub fn hinge_loss(params: &LinearParams, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let total: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let s = if label > 0.5 { 1.0 } else { -1.0 };
            (1.0 - s * params.decision(row)).max(0.0)
        })
        .sum();
    total / x.len() as f64
}

/// Linear SVM trained by stochastic subgradient descent on the L2-regularised
/// hinge loss (Pegasos): `λ = 1 / (C n)`, step `1 / (λ t)`, one pass over a
/// fresh permutation per epoch. The bias is an extra constant feature and is
/// regularised with the weights.
pub fn fit_linear_svc(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    epochs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LinearParams, ModelError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(ModelError::Parameter(format!("C must be > 0, got {c}")));
    }
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    let lambda = 1.0 / (c * n as f64);
    let mut w = vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for epoch in 1..=epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let s = if y[i] > 0.5 { 1.0 } else { -1.0 };
            let margin = s * (dot(&w[..d], &x[i]) + w[d]);
            let shrink = 1.0 - eta * lambda;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            if margin < 1.0 {
                for j in 0..d {
                    w[j] += eta * s * x[i][j];
                }
                w[d] += eta * s;
            }
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Divergence { epoch });
        }
    }
    let intercept = w.pop().unwrap_or(0.0);
    Ok(LinearParams {
        weights: w,
        intercept,
    })
}

/// Sigmoid calibration `p = σ(a·margin + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub a: f64,
    pub b: f64,
}

impl Calibration {
    pub fn apply(&self, margin: f64) -> f64 {
        sigmoid(self.a * margin + self.b)
    }
}

/// Platt scaling: logistic regression of the labels on the margins, with
/// Platt's smoothed targets, fitted by Newton's method with backtracking.
pub fn fit_platt(margins: &[f64], y: &[f64]) -> Calibration {
    let n_pos = y.iter().filter(|&&v| v > 0.5).count() as f64;
    let n_neg = y.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = y.iter().map(|&v| if v > 0.5 { hi } else { lo }).collect();

    let objective = |a: f64, b: f64| -> f64 {
        margins
            .iter()
            .zip(&targets)
            .map(|(&m, &t)| {
                // Cross-entropy written with log1p for stability.
                let z = a * m + b;
                let log_p = -softplus(-z);
                let log_q = -softplus(z);
                -(t * log_p + (1.0 - t) * log_q)
            })
            .sum()
    };

    let (mut a, mut b) = (0.0, ((n_pos + 1.0) / (n_neg + 1.0)).ln());
    let mut f = objective(a, b);
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (&m, &t) in margins.iter().zip(&targets) {
            let p = sigmoid(a * m + b);
            let r = p - t;
            ga += r * m;
            gb += r;
            let w = p * (1.0 - p);
            haa += w * m * m;
            hab += w * m;
            hbb += w;
        }
        if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
            break;
        }
        let det = haa * hbb - hab * hab;
        let da = -(hbb * ga - hab * gb) / det;
        let db = -(haa * gb - hab * ga) / det;
        let slope = ga * da + gb * db;
        let mut step = 1.0;
        let mut improved = false;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf <= f + 1e-4 * step * slope {
                a = na;
                b = nb;
                f = nf;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }
    Calibration { a, b }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
