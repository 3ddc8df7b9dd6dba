//! Reference computations written independently of the library, used to
//! check it.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Ridge by the full normal equations on `[X | 1]` with the intercept left
/// out of the penalty, solved by LU.
pub fn ridge_normal_equations(x: &[Vec<f64>], y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let n = x.len();
    let d = x[0].len();
    let a = DMatrix::from_fn(n, d + 1, |i, j| if j < d { x[i][j] } else { 1.0 });
    let mut penalty = DMatrix::<f64>::identity(d + 1, d + 1) * lambda;
    penalty[(d, d)] = 0.0;
    let lhs = a.transpose() * &a + penalty;
    let rhs = a.transpose() * DVector::from_column_slice(y);
    let theta = lhs.lu().solve(&rhs).expect("normal equations are solvable");
    (theta.as_slice()[..d].to_vec(), theta[d])
}

/// ICC(2,1) from the two-way ANOVA table, with sums of squares taken from
/// raw totals (`Σx² − G²/N` form).
pub fn icc2_anova(m: &[Vec<f64>]) -> f64 {
    let n = m.len() as f64;
    let k = m[0].len() as f64;
    let total: f64 = m.iter().flatten().sum();
    let correction = total * total / (n * k);
    let ss_total: f64 = m.iter().flatten().map(|v| v * v).sum::<f64>() - correction;
    let ss_rows: f64 = m.iter().map(|r| r.iter().sum::<f64>().powi(2)).sum::<f64>() / k - correction;
    let ss_cols: f64 = (0..m[0].len())
        .map(|j| m.iter().map(|r| r[j]).sum::<f64>().powi(2))
        .sum::<f64>()
        / n
        - correction;
    let ss_error = ss_total - ss_rows - ss_cols;
    let bms = ss_rows / (n - 1.0);
    let jms = ss_cols / (k - 1.0);
    let ems = ss_error / ((n - 1.0) * (k - 1.0));
    (bms - ems) / (bms + (k - 1.0) * ems + k * (jms - ems) / n)
}

/// Best single-threshold split of a one-feature dataset with 0/1 labels by
/// exhaustive search over midpoints. Impurities are compared as exact
/// fractions and ties keep the lowest threshold. Returns the threshold and
/// the positive fractions left and right, or `None` when no split exists.
pub fn best_stump(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let mut values: Vec<f64> = x.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    // Weighted Gini times n is 2·(pl·ql/nl + pr·qr/nr) = 2·num/den.
    let mut best: Option<(u128, u128, f64, f64, f64)> = None;
    for w in values.windows(2) {
        let t = w[0] + (w[1] - w[0]) / 2.0;
        let count = |left: bool| {
            let (mut n, mut pos) = (0u128, 0u128);
            for (v, l) in x.iter().zip(y) {
                if (*v <= t) == left {
                    n += 1;
                    pos += u128::from(*l == 1.0);
                }
            }
            (n, pos)
        };
        let (nl, pl) = count(true);
        let (nr, pr) = count(false);
        let num = pl * (nl - pl) * nr + pr * (nr - pr) * nl;
        let den = nl * nr;
        if best.is_none_or(|(bn, bd, ..)| num * bd < bn * den) {
            best = Some((num, den, t, pl as f64 / nl as f64, pr as f64 / nr as f64));
        }
    }
    best.map(|(_, _, t, l, r)| (t, l, r))
}

/// Central finite-difference gradient of `f` at `theta`.
pub fn finite_difference(theta: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            probe[i] = theta[i] + h;
            let up = f(&probe);
            probe[i] = theta[i] - h;
            let down = f(&probe);
            probe[i] = theta[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest relative difference between two gradients; entries where both
/// are tiny are compared against `floor` instead.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
