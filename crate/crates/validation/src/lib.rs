//! Reference implementations used to check `softbound-core`.
//!
//! Everything here is written against the textbook formulas and shares no
//! code with the crate under test.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Soft-hard utility of one value, straight from the piecewise definition.
pub fn shf(f: f64, hard: f64, soft: f64, beta: f64, zeta: f64, floor: f64) -> f64 {
    let norm = |z: f64| 0.5 * (z - hard) / (soft - hard);
    let tau = hard + zeta * (soft - hard);
    if f < hard {
        floor
    } else if f <= soft {
        2.0 * norm(f)
    } else if f <= tau {
        1.0 + 2.0 * beta * (norm(f) - 0.5)
    } else {
        1.0 + 2.0 * beta * (norm(tau) - 0.5)
    }
}

/// Augmented Chebyshev value with ideal point `z`.
pub fn chebyshev(u: &[f64], lambda: &[f64], z: &[f64], gamma: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut sum = 0.0;
    for i in 0..u.len() {
        let d = (u[i] - z[i]).abs();
        worst = worst.max(lambda[i] * d);
        sum += d;
    }
    -worst - gamma * sum
}

/// All orderings of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (0..n).collect();
    let mut out = vec![items.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            out.push(items.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Plackett-Luce probability of a full ordering as a plain product of
/// softmax stages.
pub fn plackett_luce(utilities: &[f64], ranking: &[usize]) -> f64 {
    let mut left: Vec<usize> = (0..utilities.len()).collect();
    let mut p = 1.0;
    for &r in ranking {
        let denom: f64 = left.iter().map(|&j| utilities[j].exp()).sum();
        p *= utilities[r].exp() / denom;
        left.retain(|&j| j != r);
    }
    p
}

/// Draw an ordering by successive softmax choices over the items left.
pub fn sample_plackett_luce<R: Rng>(utilities: &[f64], rng: &mut R) -> Vec<usize> {
    let mut left: Vec<usize> = (0..utilities.len()).collect();
    let mut out = Vec::with_capacity(left.len());
    while !left.is_empty() {
        let w: Vec<f64> = left.iter().map(|&i| utilities[i].exp()).collect();
        let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
        let mut k = 0;
        while k + 1 < w.len() && u >= w[k] {
            u -= w[k];
            k += 1;
        }
        out.push(left.remove(k));
    }
    out
}

pub fn se_kernel(a: &[f64], b: &[f64], lengthscale: f64, signal: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    signal * (-0.5 * d2 / (lengthscale * lengthscale)).exp()
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty column");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// GP posterior mean and variance at `x` by solving the full system.
pub fn gp_posterior(
    inputs: &[Vec<f64>],
    targets: &[f64],
    x: &[f64],
    lengthscale: f64,
    signal: f64,
    noise: f64,
) -> (f64, f64) {
    let n = inputs.len();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| se_kernel(&inputs[i], &inputs[j], lengthscale, signal) + if i == j { noise } else { 0.0 })
                .collect()
        })
        .collect();
    let k: Vec<f64> = inputs.iter().map(|xi| se_kernel(x, xi, lengthscale, signal)).collect();
    let alpha = dense_solve(gram.clone(), targets.to_vec());
    let v = dense_solve(gram, k.clone());
    let mean = k.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let var = signal - k.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    (mean, var)
}

/// Monte Carlo estimate of `E[max(F - incumbent, 0)]`, `F ~ N(mean, std^2)`,
/// with its standard error.
pub fn ei_monte_carlo<R: Rng>(mean: f64, std: f64, incumbent: f64, samples: usize, rng: &mut R) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..samples {
        let z: f64 = StandardNormal.sample(rng);
        let g = (mean + std * z - incumbent).max(0.0);
        sum += g;
        sum2 += g * g;
    }
    let n = samples as f64;
    let m = sum / n;
    let var = (sum2 / n - m * m).max(0.0) * n / (n - 1.0);
    (m, (var / n).sqrt())
}

/// `max over |C| <= k` of `min_i max_{x in C} scores[i][x]`, by enumeration.
pub fn best_of_k(scores: &[Vec<f64>], k: usize) -> f64 {
    let n = scores[0].len();
    let mut best: f64 = 0.0;
    for mask in 1u32..(1 << n) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let v = scores
            .iter()
            .map(|row| (0..n).filter(|x| mask & (1 << x) != 0).map(|x| row[x]).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        best = best.max(v);
    }
    best
}

/// `1 + ln(max_x sum_i scores[i][x])`.
pub fn psi(scores: &[Vec<f64>]) -> f64 {
    let n = scores[0].len();
    let top = (0..n).map(|x| scores.iter().map(|r| r[x]).sum::<f64>()).fold(0.0, f64::max);
    1.0 + top.ln()
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
