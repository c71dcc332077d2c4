//! Sensitivity analysis: expected-improvement search with one hard bound
//! relaxed by `epsilon`, surfacing points that would improve another
//! objective if the decision maker gave a little on the relaxed one.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::gp::GpSurrogate;
use crate::par;
use crate::problem::ObjectiveProblem;
use crate::query::{acq_maximize, AcqOptions, Evaluation};
use crate::rng;
use crate::problem::argmax_first;
use crate::shf::{Scalarizer, ShfParams, SoftHardBounds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TmoshConfig {
    pub epsilon: f64,
    pub restarts: usize,
    pub restart_candidates: usize,
    pub per_dimension: usize,
    /// Distinct-input tolerance among restart results.
    pub restart_tolerance: f64,
}

impl Default for TmoshConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            restarts: 10,
            restart_candidates: 64,
            per_dimension: 2,
            restart_tolerance: 1e-6,
        }
    }
}

impl TmoshConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon must be nonnegative"));
        }
        if self.restarts == 0 || self.restart_candidates == 0 {
            return Err(Error::invalid("restarts and restart candidates must be positive"));
        }
        Ok(())
    }
}

/// `E[max(F - incumbent, 0)]` for `F ~ N(mean, std^2)`.
pub fn expected_improvement(mean: f64, std: f64, incumbent: f64) -> f64 {
    if !(std > 0.0) {
        return (mean - incumbent).max(0.0);
    }
    let n = Normal::standard();
    let z = (mean - incumbent) / std;
    (std * (z * n.cdf(z) + n.pdf(z))).max(0.0)
}

/// Objective vector of the current best point `x*`: the evaluation with the
/// highest scalarized value under `scalarizer` and `bounds`. With no
/// feasible evaluation the hard bounds stand in.
pub fn incumbents(
    evaluations: &[Evaluation],
    bounds: &SoftHardBounds,
    scalarizer: &Scalarizer,
    params: &ShfParams,
) -> Vec<f64> {
    let values: Vec<f64> = evaluations
        .iter()
        .map(|e| scalarizer.value_of(&e.objectives, bounds, params))
        .collect();
    match values.iter().position(|v| !params.is_floor(*v)) {
        None => bounds.hard().to_vec(),
        Some(_) => evaluations[argmax_first(&values)].objectives.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacentCandidate {
    pub input: Vec<f64>,
    pub predicted: Vec<f64>,
    pub realized: Vec<f64>,
    pub raw_realized: Vec<f64>,
    pub perturbed_dimension: usize,
    pub improved_dimension: usize,
    pub ei_value: f64,
    /// Realized gain over the incumbent in the improved dimension.
    pub improvement: f64,
}

/// Constrained EI search for every improvement dimension other than
/// `perturbed`, with the hard bound of `perturbed` lowered by `epsilon`.
///
/// Constraints are checked on the surrogate mean during the search; every
/// candidate with positive EI is then evaluated and kept only if its
/// realized objectives meet the relaxed bounds and beat the incumbent.
#[allow(clippy::too_many_arguments)]
pub fn find_adjacent(
    problem: &ObjectiveProblem,
    surrogate: &GpSurrogate,
    bounds: &SoftHardBounds,
    incumbents: &[f64],
    perturbed: usize,
    config: &TmoshConfig,
    search: &AcqOptions,
    seed: u64,
) -> Result<Vec<AdjacentCandidate>> {
    let l = bounds.len();
    if perturbed >= l || incumbents.len() != l || surrogate.num_objectives() != l {
        return Err(Error::invalid(format!(
            "perturbed dimension {perturbed} or incumbents ({}) do not match {l} objectives",
            incumbents.len()
        )));
    }
    let relaxed = bounds.relax_hard(perturbed, config.epsilon);
    let dim = problem.input_dim();
    let opts = AcqOptions {
        candidates: config.restart_candidates,
        refine_top: search.refine_top.min(1),
        ..*search
    };
    const NO_EI: f64 = -1.0;
    let mut out = Vec::new();
    for improved in (0..l).filter(|&d| d != perturbed) {
        let ei_at = |u: &[f64]| {
            let pred = surrogate.predict(u);
            let mean: Vec<f64> = pred.iter().map(|p| p.0).collect();
            if !relaxed.is_feasible(&mean) {
                return NO_EI;
            }
            let (m, s) = pred[improved];
            expected_improvement(m, s, incumbents[improved])
        };
        let violation = |u: &[f64]| relaxed.violation(&surrogate.predict_mean(u));
        let starts = par::map_range(config.restarts, |r| {
            let s = rng::derive(seed, (perturbed * l + improved) as u64, r as u64);
            let u = acq_maximize(ei_at, violation, dim, NO_EI, &opts, s);
            let ei = ei_at(&u);
            (u, ei)
        });
        let mut distinct: Vec<(Vec<f64>, f64)> = Vec::new();
        for (u, ei) in starts {
            if !(ei > 0.0) {
                continue;
            }
            let dup = distinct.iter().any(|(v, _)| {
                v.iter().zip(&u).all(|(a, b)| (a - b).abs() <= config.restart_tolerance)
            });
            if !dup {
                distinct.push((u, ei));
            }
        }
        let mut kept: Vec<AdjacentCandidate> = distinct
            .into_iter()
            .filter_map(|(u, ei)| {
                let input = problem.from_unit(&u);
                let raw = problem.evaluate_raw(&input);
                let realized = problem.normalize(&raw);
                let gain = realized[improved] - incumbents[improved];
                (relaxed.is_feasible(&realized) && gain > 0.0).then(|| AdjacentCandidate {
                    input,
                    predicted: surrogate.predict_mean(&u),
                    realized,
                    raw_realized: raw,
                    perturbed_dimension: perturbed,
                    improved_dimension: improved,
                    ei_value: ei,
                    improvement: gain,
                })
            })
            .collect();
        kept.sort_by(|a, b| b.improvement.total_cmp(&a.improvement));
        kept.truncate(config.per_dimension);
        out.extend(kept);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityCell {
    pub active: bool,
    pub best_improvement: f64,
}

/// `L x L` matrix indexed `[perturbed][improved]`; diagonal entries are
/// `None`.
pub fn activity_report(num_objectives: usize, candidates: &[AdjacentCandidate]) -> Vec<Vec<Option<ActivityCell>>> {
    let mut m: Vec<Vec<Option<ActivityCell>>> = (0..num_objectives)
        .map(|p| {
            (0..num_objectives)
                .map(|i| {
                    (p != i).then_some(ActivityCell {
                        active: false,
                        best_improvement: 0.0,
                    })
                })
                .collect()
        })
        .collect();
    for c in candidates {
        if let Some(Some(cell)) = m
            .get_mut(c.perturbed_dimension)
            .and_then(|row| row.get_mut(c.improved_dimension))
        {
            cell.active = true;
            cell.best_improvement = cell.best_improvement.max(c.improvement);
        }
    }
    m
}
