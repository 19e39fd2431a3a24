//! Independent reference computations.
//!
//! Everything here is written from the closed-form definitions, deliberately
//! avoiding the code paths used by the rest of the crate (no shared helpers, no
//! streaming updates, no cached forward passes). Tests freeze expected values
//! from these routines, and `smirl oracle` prints them.

use std::f64::consts::{E, PI};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Demand for a uniform 1 kWh baseline over 10 hours, unit elasticity, with only
/// the last hour priced at 1.
pub fn single_peak_demand() -> Vec<f64> {
    let denom = 9.0 + (-1.0f64).exp();
    let mut d = vec![10.0 / denom; 10];
    d[9] = 10.0 * (-1.0f64).exp() / denom;
    d
}

/// Direct evaluation of `B · b_i e^{−βp_i} / Σ_j b_j e^{−βp_j}`.
pub fn elastic_demand(baseline: &[f64], prices: &[f64], beta: f64) -> Vec<f64> {
    let total: f64 = baseline.iter().sum();
    let mut z = 0.0;
    for j in 0..baseline.len() {
        z += baseline[j] * (-beta * prices[j]).exp();
    }
    (0..baseline.len())
        .map(|i| total * baseline[i] * (-beta * prices[i]).exp() / z)
        .collect()
}

/// Two-pass per-column sample mean and sample standard deviation (n − 1).
pub fn batch_mean_std(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let dim = rows[0].len();
    let mut mean = vec![0.0; dim];
    for row in rows {
        for i in 0..dim {
            mean[i] += row[i];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for row in rows {
        for i in 0..dim {
            var[i] += (row[i] - mean[i]) * (row[i] - mean[i]);
        }
    }
    let std = var.iter().map(|v| (v / (n - 1.0)).sqrt()).collect();
    (mean, std)
}

/// Population mean and standard deviation of a flat slice, two passes.
pub fn mean_std_population(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// log N(x; μ, σ²), from the density `exp(−z²/2) / (σ√(2π))` taken in log space.
pub fn gaussian_log_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - (sigma * (2.0 * PI).sqrt()).ln()
}

pub fn diag_gaussian_log_pdf(x: &[f64], mu: &[f64], sigma: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| gaussian_log_pdf(x[i], mu[i], sigma[i]))
        .sum()
}

/// Plain matrix-vector forward pass: tanh on every layer but the last.
/// Each layer is `(rows of the weight matrix, bias)`.
pub fn mlp_forward(layers: &[(Vec<Vec<f64>>, Vec<f64>)], input: &[f64]) -> Vec<f64> {
    let mut x = input.to_vec();
    for (k, (w, b)) in layers.iter().enumerate() {
        let mut y = Vec::with_capacity(w.len());
        for (row, bias) in w.iter().zip(b) {
            let mut acc = *bias;
            for (wij, xj) in row.iter().zip(&x) {
                acc += wij * xj;
            }
            y.push(if k + 1 < layers.len() { acc.tanh() } else { acc });
        }
        x = y;
    }
    x
}

/// Advantages as explicit discounted sums of TD residuals, truncated at episode ends.
///
/// `values[t]` is V(s_t); `bootstrap` is V of the state after the last step.
pub fn gae_by_summation(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let next_value = |t: usize| if t + 1 < n { values[t + 1] } else { bootstrap };
    let delta: Vec<f64> = (0..n)
        .map(|t| {
            let cont = if dones[t] { 0.0 } else { 1.0 };
            rewards[t] + gamma * next_value(t) * cont - values[t]
        })
        .collect();
    (0..n)
        .map(|t| {
            let mut adv = 0.0;
            let mut weight = 1.0;
            for k in t..n {
                adv += weight * delta[k];
                if dones[k] {
                    break;
                }
                weight *= gamma * lambda;
            }
            adv
        })
        .collect()
}

/// ½ ln(2πe σ²)
pub fn gaussian_entropy(variance: f64) -> f64 {
    0.5 * (2.0 * PI * E * variance).ln()
}

/// Mean and standard deviation of one coordinate of a uniform draw from
/// `{p ≥ 0 : Σp = total}` in `dim` dimensions (scaled Dirichlet(1,…,1)).
pub fn simplex_coordinate_moments(dim: usize, total: f64) -> (f64, f64) {
    let k = dim as f64;
    let mean = total / k;
    let var = total * total * (k - 1.0) / (k * k * (k + 1.0));
    (mean, var.sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic sup |F_a − F_b|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value, `c(α)·sqrt((n+m)/(n·m))` with
/// `c(α) = sqrt(−½ ln(α/2))`.
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Median of a non-empty slice; the mean of the middle pair for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
