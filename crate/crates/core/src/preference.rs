//! Posteriors over the preference weights `lambda` and the soft/hard bounds,
//! the mapping from bound feedback to rankings, and the Plackett-Luce
//! likelihood that ties rankings to `lambda`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::shf::{scalarize, shf_vector_unchecked, Scalarizer, ShfParams, SoftHardBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    HardTightened,
    HardRelaxed,
    SoftAdjusted,
    NoChange,
    PairwiseChoice,
    FullRanking,
    PartialRanking,
}

impl FeedbackKind {
    /// Bound modifications, including the explicit no-change action.
    pub fn is_bound(self) -> bool {
        matches!(
            self,
            Self::HardTightened | Self::HardRelaxed | Self::SoftAdjusted | Self::NoChange
        )
    }

    pub fn is_choice(self) -> bool {
        !self.is_bound()
    }
}

/// One decision-maker action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub kind: FeedbackKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_value: Option<f64>,
    /// Query indices, best first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<usize>>,
    /// Sessions overwrite this from their unit schedule.
    #[serde(default)]
    pub interaction_units: u32,
}

impl FeedbackEvent {
    pub fn bound(kind: FeedbackKind, dimension: usize, old_value: f64, new_value: f64, units: u32) -> Self {
        Self {
            kind,
            dimension: Some(dimension),
            old_value: Some(old_value),
            new_value: Some(new_value),
            ranking: None,
            interaction_units: units,
        }
    }

    pub fn no_change(units: u32) -> Self {
        Self {
            kind: FeedbackKind::NoChange,
            dimension: None,
            old_value: None,
            new_value: None,
            ranking: None,
            interaction_units: units,
        }
    }

    pub fn choice(kind: FeedbackKind, ranking: Vec<usize>, units: u32) -> Self {
        Self {
            kind,
            dimension: None,
            old_value: None,
            new_value: None,
            ranking: Some(ranking),
            interaction_units: units,
        }
    }

    /// Structural checks against a query of `query_len` points over
    /// `num_objectives` objectives.
    pub fn validate(&self, num_objectives: usize, query_len: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        match self.kind {
            FeedbackKind::NoChange => {
                if self.dimension.is_some() || self.new_value.is_some() || self.ranking.is_some() {
                    return bad("no_change carries no dimension, value or ranking".into());
                }
            }
            FeedbackKind::HardTightened | FeedbackKind::HardRelaxed | FeedbackKind::SoftAdjusted => {
                let (Some(dim), Some(new)) = (self.dimension, self.new_value) else {
                    return bad(format!("{:?} needs a dimension and a new value", self.kind));
                };
                if dim >= num_objectives {
                    return bad(format!("dimension {dim} out of range for {num_objectives} objectives"));
                }
                if !(0.0..=1.0).contains(&new) {
                    return bad(format!("new bound {new} outside [0,1]"));
                }
                if self.ranking.is_some() {
                    return bad("bound feedback carries no ranking".into());
                }
                if let Some(old) = self.old_value {
                    let ok = match self.kind {
                        FeedbackKind::HardTightened => new > old,
                        FeedbackKind::HardRelaxed => new < old,
                        _ => new != old,
                    };
                    if !ok {
                        return bad(format!("{:?} from {old} to {new} moves the wrong way", self.kind));
                    }
                }
            }
            FeedbackKind::PairwiseChoice | FeedbackKind::FullRanking | FeedbackKind::PartialRanking => {
                let Some(r) = &self.ranking else {
                    return bad(format!("{:?} needs a ranking", self.kind));
                };
                let mut seen = vec![false; query_len];
                for &i in r {
                    if i >= query_len || seen[i] {
                        return bad(format!("ranking {r:?} is not a subset permutation of {query_len} points"));
                    }
                    seen[i] = true;
                }
                let len_ok = match self.kind {
                    FeedbackKind::PairwiseChoice => r.len() == 2,
                    FeedbackKind::FullRanking => r.len() == query_len,
                    _ => !r.is_empty() && r.len() <= query_len,
                };
                if !len_ok {
                    return bad(format!("{:?} ranking of length {} over {query_len} points", self.kind, r.len()));
                }
            }
        }
        if self.interaction_units == 0 {
            return bad("interaction units must be positive".into());
        }
        Ok(())
    }
}

/// Ranking over query points induced by a bound modification.
///
/// `objectives` holds the normalized objective vector of every query point.
/// Choice kinds return their stated ranking; `no_change` returns an empty
/// ranking.
pub fn interpret_feedback(event: &FeedbackEvent, objectives: &[Vec<f64>]) -> Result<Vec<usize>> {
    match event.kind {
        FeedbackKind::NoChange => Ok(Vec::new()),
        FeedbackKind::PairwiseChoice | FeedbackKind::FullRanking | FeedbackKind::PartialRanking => {
            event.ranking.clone().ok_or_else(|| Error::invalid("choice feedback without a ranking"))
        }
        FeedbackKind::HardTightened | FeedbackKind::HardRelaxed | FeedbackKind::SoftAdjusted => {
            let (Some(dim), Some(bound)) = (event.dimension, event.new_value) else {
                return Err(Error::invalid("bound feedback without dimension or value"));
            };
            if let Some(bad) = objectives.iter().position(|y| dim >= y.len()) {
                return Err(Error::invalid(format!("dimension {dim} out of range for query point {bad}")));
            }
            let mut order: Vec<usize> = (0..objectives.len()).collect();
            if event.kind == FeedbackKind::SoftAdjusted {
                let key = |i: usize| (objectives[i][dim] - bound).abs();
                order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
            } else {
                // points meeting the new hard bound first, nearest to it first;
                // violators after, least violation first
                let key = |i: usize| {
                    let v = objectives[i][dim];
                    (v < bound, (v - bound).abs())
                };
                order.sort_by(|&a, &b| {
                    let (ka, kb) = (key(a), key(b));
                    ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.cmp(&b))
                });
            }
            Ok(order)
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Log Plackett-Luce probability of `ranking` given scalar utilities of all
/// query points. Items never ranked stay in every denominator, so partial
/// top-k rankings are scored against the full query.
pub fn plackett_luce_log_likelihood(utilities: &[f64], ranking: &[usize]) -> f64 {
    let mut remaining = vec![true; utilities.len()];
    let mut total = 0.0;
    for &i in ranking {
        let denom = log_sum_exp(
            utilities
                .iter()
                .zip(&remaining)
                .filter(|(_, &r)| r)
                .map(|(&u, _)| u),
        );
        total += utilities[i] - denom;
        remaining[i] = false;
    }
    total
}

pub fn plackett_luce_likelihood(utilities: &[f64], ranking: &[usize]) -> f64 {
    plackett_luce_log_likelihood(utilities, ranking).exp()
}

/// One ranking observation with the SHF utility vectors of the ranked query
/// under the bounds in force when it was given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodFactor {
    pub utilities: Vec<Vec<f64>>,
    pub ranking: Vec<usize>,
}

impl LikelihoodFactor {
    pub fn new(objectives: &[Vec<f64>], ranking: Vec<usize>, bounds: &SoftHardBounds, params: &ShfParams) -> Self {
        Self {
            utilities: objectives
                .iter()
                .map(|y| shf_vector_unchecked(y, bounds, params))
                .collect(),
            ranking,
        }
    }

    pub fn log_likelihood(&self, s: &Scalarizer) -> f64 {
        let values: Vec<f64> = self.utilities.iter().map(|u| scalarize(u, s)).collect();
        plackett_luce_log_likelihood(&values, &self.ranking)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreferenceConfig {
    pub particles: usize,
    pub burn_in: usize,
    /// Dirichlet proposal concentration around the current chain state.
    pub proposal_concentration: f64,
    /// When false, rankings are recorded but `lambda` stays at its prior.
    pub use_plackett_luce: bool,
    pub bound_prior_variance: f64,
    pub bound_observation_variance: f64,
    pub no_change_shrink: f64,
    pub min_bound_gap: f64,
}

impl Default for PreferenceConfig {
    fn default() -> Self {
        Self {
            particles: 512,
            burn_in: 20,
            proposal_concentration: 50.0,
            use_plackett_luce: true,
            bound_prior_variance: 0.01,
            bound_observation_variance: 0.02 * 0.02,
            no_change_shrink: 0.9,
            min_bound_gap: 0.02,
        }
    }
}

impl PreferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::invalid("particle count must be positive"));
        }
        if !(self.proposal_concentration > 0.0) {
            return Err(Error::invalid("proposal concentration must be positive"));
        }
        if !(self.bound_prior_variance > 0.0 && self.bound_observation_variance > 0.0) {
            return Err(Error::invalid("bound variances must be positive"));
        }
        if !(self.no_change_shrink > 0.0 && self.no_change_shrink <= 1.0) {
            return Err(Error::invalid("no-change shrink must be in (0,1]"));
        }
        if !(0.0..0.5).contains(&self.min_bound_gap) {
            return Err(Error::invalid("minimum bound gap must be in [0,0.5)"));
        }
        Ok(())
    }
}

/// Weighted particle approximation of the posterior over `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceState {
    samples: Vec<Vec<f64>>,
    weights: Vec<f64>,
    history: Vec<LikelihoodFactor>,
}

/// Smallest proposal concentration per component; keeps the proposal
/// proper when the chain sits near a face of the simplex.
const MIN_CONCENTRATION: f64 = 0.1;
const MIN_COMPONENT: f64 = 1e-12;

fn dirichlet_sample<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let mut draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let sum: f64 = draws.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        let n = draws.len() as f64;
        draws.iter_mut().for_each(|d| *d = 1.0 / n);
        return draws;
    }
    draws.iter_mut().for_each(|d| *d /= sum);
    clamp_simplex(draws)
}

fn clamp_simplex(mut x: Vec<f64>) -> Vec<f64> {
    x.iter_mut().for_each(|v| *v = v.max(MIN_COMPONENT));
    let sum: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= sum);
    x
}

fn dirichlet_ln_pdf(x: &[f64], alpha: &[f64]) -> f64 {
    let a0: f64 = alpha.iter().sum();
    ln_gamma(a0)
        + alpha
            .iter()
            .zip(x)
            .map(|(&a, &xi)| (a - 1.0) * xi.ln() - ln_gamma(a))
            .sum::<f64>()
}

fn proposal_alpha(center: &[f64], c: f64) -> Vec<f64> {
    center.iter().map(|&l| (c * l).max(MIN_CONCENTRATION)).collect()
}

impl PreferenceState {
    /// Independent draws from the flat Dirichlet prior.
    pub fn prior<R: Rng + ?Sized>(num_objectives: usize, particles: usize, rng: &mut R) -> Self {
        let ones = vec![1.0; num_objectives];
        let samples: Vec<Vec<f64>> = (0..particles).map(|_| dirichlet_sample(&ones, rng)).collect();
        Self::equal_weights(samples, Vec::new())
    }

    /// Particles taken verbatim with equal weights.
    pub fn from_samples(samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("preference state needs at least one particle"));
        }
        for s in &samples {
            let sum: f64 = s.iter().sum();
            if s.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("particle {s:?} is not on the simplex")));
            }
        }
        Ok(Self::equal_weights(samples, Vec::new()))
    }

    fn equal_weights(samples: Vec<Vec<f64>>, history: Vec<LikelihoodFactor>) -> Self {
        let w = 1.0 / samples.len() as f64;
        let weights = vec![w; samples.len()];
        Self { samples, weights, history }
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn history(&self) -> &[LikelihoodFactor] {
        &self.history
    }

    pub fn num_objectives(&self) -> usize {
        self.samples[0].len()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.num_objectives()];
        for (s, w) in self.samples.iter().zip(&self.weights) {
            for (mi, si) in m.iter_mut().zip(s) {
                *mi += w * si;
            }
        }
        m
    }

    /// Draw one particle index according to the weights.
    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &[f64] {
        &self.samples[self.draw_index(rng)]
    }
}

/// Log of prior times likelihood; the flat Dirichlet prior is constant on
/// the simplex.
fn log_target(lambda: &[f64], history: &[LikelihoodFactor], params: &ShfParams, gamma: f64) -> f64 {
    let s = Scalarizer {
        lambda: lambda.to_vec(),
        ideal_point: vec![params.saturated_utility(); lambda.len()],
        gamma,
        utility_floor: params.utility_floor,
    };
    history.iter().map(|f| f.log_likelihood(&s)).sum()
}

/// Add `factor` (if any) to the history and redraw the particles with a
/// Metropolis-Hastings chain targeting prior times all likelihood factors.
pub fn update_lambda_posterior<R: Rng + ?Sized>(
    state: &PreferenceState,
    factor: Option<LikelihoodFactor>,
    config: &PreferenceConfig,
    params: &ShfParams,
    gamma: f64,
    rng: &mut R,
) -> PreferenceState {
    let l = state.num_objectives();
    let mut history = state.history.clone();
    history.extend(factor);
    if history.is_empty() || !config.use_plackett_luce {
        let prior = PreferenceState::prior(l, config.particles, rng);
        return PreferenceState::equal_weights(prior.samples, history);
    }

    let mut current = clamp_simplex(state.mean());
    let mut current_lp = log_target(&current, &history, params, gamma);
    if !current_lp.is_finite() {
        log::warn!("posterior over lambda has no numerical mass; falling back to the prior");
        let prior = PreferenceState::prior(l, config.particles, rng);
        return PreferenceState::equal_weights(prior.samples, history);
    }
    let c = config.proposal_concentration;
    let mut samples = Vec::with_capacity(config.particles);
    for step in 0..config.burn_in + config.particles {
        let forward = proposal_alpha(&current, c);
        let proposal = dirichlet_sample(&forward, rng);
        let backward = proposal_alpha(&proposal, c);
        let proposal_lp = log_target(&proposal, &history, params, gamma);
        let log_accept = proposal_lp - current_lp + dirichlet_ln_pdf(&current, &backward)
            - dirichlet_ln_pdf(&proposal, &forward);
        let u: f64 = rng.random();
        if proposal_lp.is_finite() && u.ln() < log_accept {
            current = proposal;
            current_lp = proposal_lp;
        }
        if step >= config.burn_in {
            samples.push(current.clone());
        }
    }
    PreferenceState::equal_weights(samples, history)
}

/// Independent Gaussian posteriors over each soft and hard bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsPosterior {
    pub soft_mean: Vec<f64>,
    pub hard_mean: Vec<f64>,
    pub soft_var: Vec<f64>,
    pub hard_var: Vec<f64>,
}

/// Clamp to `[0,1]` and push apart pairs closer than `gap`.
fn project(soft: &mut [f64], hard: &mut [f64], gap: f64) {
    for (s, h) in soft.iter_mut().zip(hard.iter_mut()) {
        *s = s.clamp(0.0, 1.0);
        *h = h.clamp(0.0, 1.0);
        if *s - *h < gap {
            let mid = 0.5 * (*s + *h);
            *h = mid - 0.5 * gap;
            *s = mid + 0.5 * gap;
            if *s > 1.0 {
                *s = 1.0;
                *h = 1.0 - gap;
            }
            if *h < 0.0 {
                *h = 0.0;
                *s = gap;
            }
        }
        // a zero gap still has to keep hard strictly below soft
        if *h >= *s {
            *h = *s - 1e-12;
        }
    }
}

fn conjugate(mean: f64, var: f64, obs: f64, obs_var: f64) -> (f64, f64) {
    let post_var = 1.0 / (1.0 / var + 1.0 / obs_var);
    (post_var * (mean / var + obs / obs_var), post_var)
}

impl BoundsPosterior {
    pub fn new(prior: &SoftHardBounds, variance: f64) -> Self {
        Self {
            soft_mean: prior.soft().to_vec(),
            hard_mean: prior.hard().to_vec(),
            soft_var: vec![variance; prior.len()],
            hard_var: vec![variance; prior.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.soft_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soft_mean.is_empty()
    }

    pub fn means(&self) -> SoftHardBounds {
        SoftHardBounds::from_parts_unchecked(self.soft_mean.clone(), self.hard_mean.clone())
    }

    /// Conjugate update of the modified bound, or a variance shrink on
    /// `no_change`. Choice feedback leaves the posterior untouched.
    pub fn update(&self, event: &FeedbackEvent, config: &PreferenceConfig) -> Result<Self> {
        let mut next = self.clone();
        match event.kind {
            FeedbackKind::NoChange => {
                next.soft_var.iter_mut().for_each(|v| *v *= config.no_change_shrink);
                next.hard_var.iter_mut().for_each(|v| *v *= config.no_change_shrink);
            }
            FeedbackKind::HardTightened | FeedbackKind::HardRelaxed | FeedbackKind::SoftAdjusted => {
                let (Some(d), Some(obs)) = (event.dimension, event.new_value) else {
                    return Err(Error::invalid("bound feedback without dimension or value"));
                };
                if d >= self.len() {
                    return Err(Error::invalid(format!("dimension {d} out of range")));
                }
                let (mean, var) = if event.kind == FeedbackKind::SoftAdjusted {
                    (&mut next.soft_mean[d], &mut next.soft_var[d])
                } else {
                    (&mut next.hard_mean[d], &mut next.hard_var[d])
                };
                let (m, v) = conjugate(*mean, *var, obs, config.bound_observation_variance);
                *mean = m;
                *var = v;
            }
            _ => return Ok(next),
        }
        project(&mut next.soft_mean, &mut next.hard_mean, config.min_bound_gap);
        Ok(next)
    }

    /// One draw of soft and hard bounds: each component from its Gaussian
    /// truncated to `[0,1]`, then projected so that `hard < soft`.
    pub fn sample<R: Rng + ?Sized>(&self, config: &PreferenceConfig, rng: &mut R) -> SoftHardBounds {
        let mut soft: Vec<f64> = self
            .soft_mean
            .iter()
            .zip(&self.soft_var)
            .map(|(&m, &v)| truncated_normal(m, v, rng))
            .collect();
        let mut hard: Vec<f64> = self
            .hard_mean
            .iter()
            .zip(&self.hard_var)
            .map(|(&m, &v)| truncated_normal(m, v, rng))
            .collect();
        project(&mut soft, &mut hard, config.min_bound_gap);
        SoftHardBounds::from_parts_unchecked(soft, hard)
    }
}

fn truncated_normal<R: Rng + ?Sized>(mean: f64, var: f64, rng: &mut R) -> f64 {
    if !(var > 0.0) {
        return mean.clamp(0.0, 1.0);
    }
    let dist = Normal::new(mean, var.sqrt()).expect("finite positive variance");
    for _ in 0..64 {
        let x = dist.sample(rng);
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
    mean.clamp(0.0, 1.0)
}

/// `lambda` by particle weight and bounds from the bounds posterior.
pub fn sample_preferences<R: Rng + ?Sized>(
    state: &PreferenceState,
    bounds: &BoundsPosterior,
    config: &PreferenceConfig,
    rng: &mut R,
) -> (Vec<f64>, SoftHardBounds) {
    let lambda = state.draw(rng).to_vec();
    let alpha = bounds.sample(config, rng);
    (lambda, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn pts(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v, 0.5]).collect()
    }

    #[test]
    fn soft_ranking_by_distance() {
        let e = FeedbackEvent::bound(FeedbackKind::SoftAdjusted, 0, 0.6, 0.7, 2);
        assert_eq!(interpret_feedback(&e, &pts(&[0.68, 0.50, 0.71])).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn hard_ranking_puts_violators_last() {
        let e = FeedbackEvent::bound(FeedbackKind::HardTightened, 0, 0.3, 0.5, 2);
        // satisfying: 0.5 (dist 0), 0.6, 0.9; violating: 0.45, 0.1
        let r = interpret_feedback(&e, &pts(&[0.9, 0.45, 0.5, 0.1, 0.6])).unwrap();
        assert_eq!(r, vec![2, 4, 0, 1, 3]);
        let relax = FeedbackEvent::bound(FeedbackKind::HardRelaxed, 0, 0.5, 0.4, 2);
        assert_eq!(interpret_feedback(&relax, &pts(&[0.2, 0.45, 0.41])).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn degenerate_rankings() {
        let e = FeedbackEvent::bound(FeedbackKind::HardRelaxed, 1, 0.5, 0.4, 2);
        assert_eq!(interpret_feedback(&e, &pts(&[0.3])).unwrap(), vec![0]);
        assert!(interpret_feedback(&FeedbackEvent::no_change(2), &pts(&[0.3, 0.4])).unwrap().is_empty());
        let e = FeedbackEvent::bound(FeedbackKind::SoftAdjusted, 2, 0.5, 0.4, 2);
        assert!(interpret_feedback(&e, &pts(&[0.3])).is_err());
    }

    #[test]
    fn pl_small_cases() {
        assert_eq!(plackett_luce_likelihood(&[0.3], &[0]), 1.0);
        assert!((plackett_luce_likelihood(&[0.3, 0.3], &[1, 0]) - 0.5).abs() < 1e-15);
        // partial ranking: top-1 of three equal items
        assert!((plackett_luce_likelihood(&[0.0, 0.0, 0.0], &[2]) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pl_with_infeasible_items() {
        let floor = ShfParams::default().utility_floor;
        let p = plackett_luce_likelihood(&[-0.2, floor], &[0, 1]);
        assert!((p - 1.0).abs() < 1e-12);
        assert!(plackett_luce_likelihood(&[-0.2, floor], &[1, 0]) < 1e-300);
    }

    #[test]
    fn validation_rules() {
        let e = FeedbackEvent::bound(FeedbackKind::HardTightened, 0, 0.5, 0.4, 2);
        assert!(e.validate(2, 3).is_err());
        let e = FeedbackEvent::bound(FeedbackKind::HardTightened, 0, 0.3, 0.4, 2);
        assert!(e.validate(2, 3).is_ok());
        assert!(e.validate(1, 3).is_ok());
        let e = FeedbackEvent::choice(FeedbackKind::PairwiseChoice, vec![1, 1], 1);
        assert!(e.validate(2, 3).is_err());
        let e = FeedbackEvent::choice(FeedbackKind::FullRanking, vec![2, 0, 1], 3);
        assert!(e.validate(2, 3).is_ok());
    }

    #[test]
    fn conjugate_bound_update() {
        let prior = SoftHardBounds::new(vec![0.5, 0.9], vec![0.1, 0.2]).unwrap();
        let post = BoundsPosterior::new(&prior, 0.04);
        let cfg = PreferenceConfig {
            bound_observation_variance: 0.04,
            ..PreferenceConfig::default()
        };
        let e = FeedbackEvent::bound(FeedbackKind::SoftAdjusted, 0, 0.5, 0.7, 2);
        let next = post.update(&e, &cfg).unwrap();
        assert!((next.soft_mean[0] - 0.6).abs() < 1e-12);
        assert!((next.soft_var[0] - 0.02).abs() < 1e-12);
        assert_eq!(next.soft_mean[1], 0.9);
        assert_eq!(next.hard_mean, vec![0.1, 0.2]);
        let shrunk = post.update(&FeedbackEvent::no_change(2), &cfg).unwrap();
        assert!(shrunk.soft_var.iter().chain(&shrunk.hard_var).all(|&v| (v - 0.036).abs() < 1e-12));
    }

    #[test]
    fn projection_keeps_hard_below_soft() {
        let prior = SoftHardBounds::new(vec![0.5], vec![0.4]).unwrap();
        let post = BoundsPosterior::new(&prior, 0.01);
        let e = FeedbackEvent::bound(FeedbackKind::HardTightened, 0, 0.4, 0.9, 2);
        let next = post.update(&e, &PreferenceConfig::default()).unwrap();
        assert!(next.soft_mean[0] - next.hard_mean[0] >= 0.02 - 1e-12);
    }

    #[test]
    fn prior_mean_matches_dirichlet_mean() {
        let mut r = rng::stream(5, 0, 0);
        for l in [2, 3] {
            let s = PreferenceState::prior(l, 2000, &mut r);
            let err: f64 = s.mean().iter().map(|m| (m - 1.0 / l as f64).abs()).sum();
            assert!(err < 0.05, "L={l} err={err}");
        }
    }

    #[test]
    fn chain_is_deterministic() {
        let params = ShfParams::default();
        let bounds = SoftHardBounds::new(vec![0.8, 0.8], vec![0.1, 0.1]).unwrap();
        let f = LikelihoodFactor::new(&[vec![0.9, 0.3], vec![0.3, 0.9]], vec![0, 1], &bounds, &params);
        let cfg = PreferenceConfig::default();
        let run = || {
            let mut r = rng::stream(9, 1, 2);
            let s = PreferenceState::prior(2, 16, &mut r);
            update_lambda_posterior(&s, Some(f.clone()), &cfg, &params, 0.05, &mut r)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_variance_sampling_returns_mean() {
        let prior = SoftHardBounds::new(vec![0.7, 0.6], vec![0.2, 0.1]).unwrap();
        let mut post = BoundsPosterior::new(&prior, 0.01);
        post.soft_var = vec![0.0; 2];
        post.hard_var = vec![0.0; 2];
        let mut r = rng::stream(1, 1, 1);
        let state = PreferenceState::from_samples(vec![vec![0.25, 0.75]]).unwrap();
        for _ in 0..20 {
            let (l, a) = sample_preferences(&state, &post, &PreferenceConfig::default(), &mut r);
            assert_eq!(l, vec![0.25, 0.75]);
            assert_eq!(a, prior);
        }
    }
}
