//! Zero-mean Gaussian-process regression, one independent model per
//! objective, with a squared-exponential kernel and the UCB acquisition value.
//!
//! Inputs are expected in unit-cube coordinates. The kernel length-scale is
//! picked from a fixed log-spaced grid by maximizing the log marginal
//! likelihood.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub lengthscale_min: f64,
    pub lengthscale_max: f64,
    pub lengthscale_grid: usize,
    pub jitter: f64,
    pub max_jitter_doublings: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            signal_variance: 1.0,
            noise_variance: 1e-6,
            lengthscale_min: 0.02,
            lengthscale_max: 5.0,
            lengthscale_grid: 16,
            jitter: 1e-8,
            max_jitter_doublings: 6,
        }
    }
}

impl GpConfig {
    pub fn lengthscales(&self) -> Vec<f64> {
        let n = self.lengthscale_grid.max(1);
        if n == 1 {
            return vec![self.lengthscale_min];
        }
        let (lo, hi) = (self.lengthscale_min.ln(), self.lengthscale_max.ln());
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredExponential {
    pub lengthscale: f64,
    pub signal_variance: f64,
}

impl SquaredExponential {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.signal_variance * (-0.5 * d2 / (self.lengthscale * self.lengthscale)).exp()
    }
}

/// A fitted single-output GP posterior.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    kernel: SquaredExponential,
    noise_variance: f64,
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    log_marginal_likelihood: f64,
}

impl GpModel {
    /// Fit with a fixed kernel.
    pub fn fit_with_kernel(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        kernel: SquaredExponential,
        config: &GpConfig,
    ) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::invalid(format!(
                "need matching nonempty inputs ({}) and targets ({})",
                inputs.len(),
                targets.len()
            )));
        }
        let n = inputs.len();
        let mut gram = DMatrix::from_fn(n, n, |i, j| kernel.eval(&inputs[i], &inputs[j]));
        for i in 0..n {
            gram[(i, i)] += config.noise_variance;
        }
        let mut jitter = config.jitter;
        let mut chol = None;
        for _ in 0..=config.max_jitter_doublings {
            let mut k = gram.clone();
            for i in 0..n {
                k[(i, i)] += jitter;
            }
            if let Some(c) = k.cholesky() {
                chol = Some(c);
                break;
            }
            jitter *= 2.0;
        }
        let chol = chol.ok_or(Error::IllConditioned(config.max_jitter_doublings))?;
        let y = DVector::from_column_slice(&targets);
        let weights = chol.solve(&y);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let lml = -0.5 * y.dot(&weights) - 0.5 * log_det
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(Self {
            inputs,
            targets,
            kernel,
            noise_variance: config.noise_variance,
            chol,
            weights,
            log_marginal_likelihood: lml,
        })
    }

    /// Fit, choosing the length-scale with the best log marginal likelihood.
    /// Ties keep the shorter length-scale.
    pub fn fit(inputs: Vec<Vec<f64>>, targets: Vec<f64>, config: &GpConfig) -> Result<Self> {
        let mut best: Option<GpModel> = None;
        let mut last_err = None;
        for lengthscale in config.lengthscales() {
            let kernel = SquaredExponential {
                lengthscale,
                signal_variance: config.signal_variance,
            };
            match Self::fit_with_kernel(inputs.clone(), targets.clone(), kernel, config) {
                Ok(model) => {
                    let better = best.as_ref().map_or(true, |b| {
                        model.log_marginal_likelihood > b.log_marginal_likelihood
                    });
                    if better {
                        best = Some(model);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.unwrap_or(Error::IllConditioned(config.max_jitter_doublings)))
    }

    pub fn kernel(&self) -> SquaredExponential {
        self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    fn cross(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|xi| self.kernel.eval(x, xi)))
    }

    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        self.cross(x).dot(&self.weights)
    }

    /// Posterior mean and standard deviation (variance clamped at zero).
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = self.cross(x);
        let mean = k.dot(&self.weights);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k)
            .expect("cholesky factor has a nonzero diagonal");
        let var = self.kernel.signal_variance - v.norm_squared();
        (mean, var.max(0.0).sqrt())
    }

    /// Analytic gradient of the posterior mean.
    pub fn mean_gradient(&self, x: &[f64]) -> Vec<f64> {
        let ell2 = self.kernel.lengthscale * self.kernel.lengthscale;
        let mut grad = vec![0.0; x.len()];
        for (xi, w) in self.inputs.iter().zip(self.weights.iter()) {
            let k = self.kernel.eval(x, xi);
            for (g, (a, b)) in grad.iter_mut().zip(x.iter().zip(xi)) {
                *g -= w * k * (a - b) / ell2;
            }
        }
        grad
    }
}

/// One GP per objective; an empty surrogate reports the prior.
#[derive(Debug, Clone)]
pub struct GpSurrogate {
    models: Vec<GpModel>,
    num_objectives: usize,
    prior_sd: f64,
}

impl GpSurrogate {
    /// Cold-start surrogate: mean 0 and the prior standard deviation everywhere.
    pub fn prior(num_objectives: usize, config: &GpConfig) -> Self {
        Self {
            models: Vec::new(),
            num_objectives,
            prior_sd: config.signal_variance.sqrt(),
        }
    }

    /// Independent fits per objective. `inputs` are unit-cube coordinates and
    /// each target row holds one value per objective.
    pub fn fit(inputs: &[Vec<f64>], targets: &[Vec<f64>], config: &GpConfig) -> Result<Self> {
        let Some(first) = targets.first() else {
            return Err(Error::invalid("cannot fit a surrogate to zero observations"));
        };
        let l = first.len();
        let fits = par::map_range(l, |obj| {
            let column: Vec<f64> = targets.iter().map(|t| t[obj]).collect();
            GpModel::fit(inputs.to_vec(), column, config)
        });
        let models = fits.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self {
            models,
            num_objectives: l,
            prior_sd: config.signal_variance.sqrt(),
        })
    }

    pub fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    pub fn models(&self) -> &[GpModel] {
        &self.models
    }

    pub fn is_prior(&self) -> bool {
        self.models.is_empty()
    }

    /// `(mean, std)` per objective.
    pub fn predict(&self, x: &[f64]) -> Vec<(f64, f64)> {
        if self.models.is_empty() {
            return vec![(0.0, self.prior_sd); self.num_objectives];
        }
        self.models.iter().map(|m| m.predict(x)).collect()
    }

    pub fn predict_mean(&self, x: &[f64]) -> Vec<f64> {
        if self.models.is_empty() {
            return vec![0.0; self.num_objectives];
        }
        self.models.iter().map(|m| m.predict_mean(x)).collect()
    }
}

/// Exploration weight schedule `sqrt(0.125 * ln(2t + 1))`.
pub fn ucb_beta(t: usize) -> f64 {
    assert!(t >= 1, "UCB iteration index starts at 1");
    (0.125 * (2.0 * t as f64 + 1.0).ln()).sqrt()
}

/// Optimistic objective vector `mean + sqrt(beta_t) * std`, clamped to `[0,1]`.
pub fn ucb_objective_vector(surrogate: &GpSurrogate, x: &[f64], t: usize) -> Vec<f64> {
    ucb_from_predictions(&surrogate.predict(x), ucb_beta(t))
}

pub(crate) fn ucb_from_predictions(pred: &[(f64, f64)], beta: f64) -> Vec<f64> {
    let scale = beta.sqrt();
    pred.iter()
        .map(|(m, s)| (m + scale * s).clamp(0.0, 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> GpConfig {
        GpConfig {
            noise_variance: 1e-8,
            ..GpConfig::default()
        }
    }

    #[test]
    fn single_observation_is_interpolated() {
        let m = GpModel::fit(vec![vec![0.3, 0.4]], vec![0.8], &tight()).unwrap();
        let (mean, sd) = m.predict(&[0.3, 0.4]);
        assert!((mean - 0.8).abs() < 1e-6);
        assert!(sd * sd <= 1e-8 + 1e-6);
    }

    #[test]
    fn reverts_to_zero_far_away() {
        let m = GpModel::fit(vec![vec![0.5], vec![0.55]], vec![0.7, 0.9], &tight()).unwrap();
        let far = 0.5 + 10.0 * m.kernel().lengthscale + 1.0;
        assert!(m.predict_mean(&[far]).abs() < 1e-3);
    }

    #[test]
    fn symmetric_data_has_flat_mean_at_center() {
        let m = GpModel::fit(
            vec![vec![0.2], vec![0.4], vec![0.6], vec![0.8]],
            vec![0.1, 0.5, 0.5, 0.1],
            &tight(),
        )
        .unwrap();
        assert!(m.mean_gradient(&[0.5])[0].abs() < 1e-8);
    }

    #[test]
    fn duplicate_conflicting_inputs_are_jittered() {
        let cfg = GpConfig {
            noise_variance: 0.0,
            ..GpConfig::default()
        };
        let m = GpModel::fit(vec![vec![0.5], vec![0.5]], vec![0.2, 0.4], &cfg).unwrap();
        assert!(m.predict_mean(&[0.5]).is_finite());
    }

    #[test]
    fn beta_schedule() {
        assert!((ucb_beta(1) - (0.125 * 3f64.ln()).sqrt()).abs() < 1e-15);
        assert!((ucb_beta(1) - 0.3706).abs() < 1e-3);
        assert!((ucb_beta(13) - (0.125 * 27f64.ln()).sqrt()).abs() < 1e-12);
        for t in 1..200 {
            assert!(ucb_beta(t + 1) >= ucb_beta(t));
        }
    }

    #[test]
    fn prior_surrogate_reports_prior() {
        let s = GpSurrogate::prior(2, &GpConfig::default());
        assert_eq!(s.predict(&[0.1, 0.2]), vec![(0.0, 1.0); 2]);
    }

    #[test]
    fn ucb_with_zero_spread_is_mean() {
        assert_eq!(ucb_from_predictions(&[(0.3, 0.0), (0.6, 0.0)], 0.5), vec![0.3, 0.6]);
        assert_eq!(ucb_from_predictions(&[(0.3, 0.2), (0.6, 0.1)], 0.0), vec![0.3, 0.6]);
    }

    #[test]
    fn ucb_uses_square_root_of_beta() {
        let pred = [(0.2, 0.1), (0.4, 0.3)];
        let u = ucb_from_predictions(&pred, ucb_beta(1));
        let scale = (0.125 * 3f64.ln()).sqrt().sqrt();
        assert!((scale - 0.608_75).abs() < 1e-4);
        assert!((u[0] - (0.2 + scale * 0.1)).abs() < 1e-12);
        assert!((u[1] - (0.4 + scale * 0.3)).abs() < 1e-12);
    }
}
