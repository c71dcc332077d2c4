//! Query construction: dense Pareto sampling driven by posterior draws of
//! `(lambda, alpha)`, then robust submodular sparsification down to a small
//! display set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{ucb_from_predictions, ucb_beta, GpConfig, GpSurrogate};
use crate::par;
use crate::preference::{sample_preferences, BoundsPosterior, PreferenceConfig, PreferenceState};
use crate::problem::ObjectiveProblem;
use crate::rng;
use crate::shf::{scalarize, shf_vector_unchecked, ReferenceScale, Scalarizer, ShfParams, SoftHardBounds};
use crate::sobol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryConfig {
    /// Dense iterations per round.
    pub dense_iterations: usize,
    /// Number of `lambda` draws the sparse set must cover.
    pub lambda_samples: usize,
    /// Display budget `k`.
    pub display_budget: usize,
    pub sobol_candidates: usize,
    pub refine_top: usize,
    pub refine_iterations: usize,
    pub refine_initial_step: f64,
    pub duplicate_tolerance: f64,
}

impl Default for QueryConfig {
    fn default() -> Self {
        Self {
            dense_iterations: 32,
            lambda_samples: 16,
            display_budget: 5,
            sobol_candidates: 512,
            refine_top: 8,
            refine_iterations: 20,
            refine_initial_step: 0.1,
            duplicate_tolerance: 1e-9,
        }
    }
}

impl QueryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dense_iterations == 0 || self.lambda_samples == 0 || self.display_budget == 0 {
            return Err(Error::invalid("dense iterations, lambda samples and display budget must be positive"));
        }
        if self.sobol_candidates == 0 {
            return Err(Error::invalid("need at least one acquisition candidate"));
        }
        Ok(())
    }

    pub fn acq_options(&self) -> AcqOptions {
        AcqOptions {
            candidates: self.sobol_candidates,
            refine_top: self.refine_top,
            iterations: self.refine_iterations,
            initial_step: self.refine_initial_step,
        }
    }
}

/// Candidate search settings for [`acq_maximize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcqOptions {
    pub candidates: usize,
    pub refine_top: usize,
    pub iterations: usize,
    pub initial_step: f64,
}

impl Default for AcqOptions {
    fn default() -> Self {
        QueryConfig::default().acq_options()
    }
}

/// Coordinate pattern search from `start`: at every iteration try `+-step`
/// along each coordinate (clamped to the unit cube), keep strict
/// improvements, then halve the step.
fn pattern_search<V: Fn(&[f64]) -> f64>(value: &V, start: Vec<f64>, f0: f64, opts: &AcqOptions) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut fx = f0;
    let mut step = opts.initial_step;
    for _ in 0..opts.iterations {
        for d in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + dir * step).clamp(0.0, 1.0);
                if y[d] == x[d] {
                    continue;
                }
                let fy = value(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                }
            }
        }
        step *= 0.5;
    }
    (x, fx)
}

/// Maximize `value` over the unit cube: scrambled Sobol candidates, then a
/// pattern search from the best few. Ties keep the lowest candidate index.
/// When every candidate scores at or below `floor`, the candidate with the
/// least `violation` is returned instead.
pub fn acq_maximize<V, C>(value: V, violation: C, dim: usize, floor: f64, opts: &AcqOptions, seed: u64) -> Vec<f64>
where
    V: Fn(&[f64]) -> f64 + Sync + Send,
    C: Fn(&[f64]) -> f64 + Sync + Send,
{
    let candidates = sobol::points(opts.candidates.max(1), dim, seed);
    let values = par::map(&candidates, |x| value(x));
    if values.iter().all(|&v| v <= floor) {
        let viol = par::map(&candidates, |x| violation(x));
        let best = first_min(&viol);
        return candidates[best].clone();
    }
    let mut order: Vec<usize> = (0..candidates.len()).filter(|&i| values[i] > floor).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let (mut best_x, mut best_v) = (candidates[order[0]].clone(), values[order[0]]);
    order.truncate(opts.refine_top);
    let refined = par::map(&order, |&i| pattern_search(&value, candidates[i].clone(), values[i], opts));
    for (x, v) in refined {
        if v > best_v {
            best_x = x;
            best_v = v;
        }
    }
    best_x
}

fn first_min(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Dense,
    TmoshAdjacent,
    /// Fixed candidate pool of the choice-based baselines.
    Pool,
}

/// One true objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Input in the problem's own box.
    pub input: Vec<f64>,
    /// Normalized, maximization-oriented objectives.
    pub objectives: Vec<f64>,
    pub raw_objectives: Vec<f64>,
    pub round: usize,
    pub provenance: Provenance,
}

impl Evaluation {
    pub fn new(problem: &ObjectiveProblem, input: Vec<f64>, round: usize, provenance: Provenance) -> Self {
        let raw_objectives = problem.evaluate_raw(&input);
        let objectives = problem.normalize(&raw_objectives);
        Self {
            input,
            objectives,
            raw_objectives,
            round,
            provenance,
        }
    }
}

/// Fit one GP per objective to every evaluation so far.
pub fn fit_surrogate(problem: &ObjectiveProblem, evaluations: &[Evaluation], config: &GpConfig) -> Result<GpSurrogate> {
    if evaluations.is_empty() {
        return Ok(GpSurrogate::prior(problem.num_objectives(), config));
    }
    let inputs: Vec<Vec<f64>> = evaluations.iter().map(|e| problem.to_unit(&e.input)).collect();
    let targets: Vec<Vec<f64>> = evaluations.iter().map(|e| e.objectives.clone()).collect();
    GpSurrogate::fit(&inputs, &targets, config)
}

/// Settings shared by every step of query construction.
#[derive(Debug, Clone, Copy)]
pub struct DenseSettings<'a> {
    pub shf: &'a ShfParams,
    pub gamma: f64,
    pub gp: &'a GpConfig,
    pub preference: &'a PreferenceConfig,
    pub query: &'a QueryConfig,
}

const STREAM_DENSE: u64 = 1;
const STREAM_DENSE_ACQ: u64 = 1 << 20;

/// Run `T` dense iterations, appending each true evaluation to
/// `evaluations`. Returns the indices of the new evaluations.
///
/// The UCB iteration index is global: one more than the number of
/// evaluations made so far.
#[allow(clippy::too_many_arguments)]
pub fn dense_sample(
    problem: &ObjectiveProblem,
    evaluations: &mut Vec<Evaluation>,
    preferences: &PreferenceState,
    bounds: &BoundsPosterior,
    settings: DenseSettings<'_>,
    iterations: usize,
    round: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut draws = rng::stream(seed, round as u64, STREAM_DENSE);
    let dim = problem.input_dim();
    let floor = settings.shf.utility_floor;
    let opts = settings.query.acq_options();
    let mut added = Vec::with_capacity(iterations);
    for t in 0..iterations {
        let (lambda, alpha) = sample_preferences(preferences, bounds, settings.preference, &mut draws);
        let scalarizer = Scalarizer::new(lambda, settings.shf, settings.gamma)?;
        let surrogate = fit_surrogate(problem, evaluations, settings.gp)?;
        let beta = ucb_beta(evaluations.len() + 1);
        let value = |u: &[f64]| {
            let f = ucb_from_predictions(&surrogate.predict(u), beta);
            scalarize(&shf_vector_unchecked(&f, &alpha, settings.shf), &scalarizer)
        };
        let violation = |u: &[f64]| alpha.violation(&ucb_from_predictions(&surrogate.predict(u), beta));
        let acq_seed = rng::derive(seed, round as u64, STREAM_DENSE_ACQ + t as u64);
        let u = acq_maximize(value, violation, dim, floor, &opts, acq_seed);
        let x = problem.from_unit(&u);
        evaluations.push(Evaluation::new(problem, x, round, Provenance::Dense));
        added.push(evaluations.len() - 1);
    }
    Ok(added)
}

/// Singleton coverage scores `F_i({x})` for every `lambda` draw `i` and
/// candidate `x`, each in `[0,1]`.
///
/// `F_i(C)` of a set is the best singleton score in `C`, so the whole
/// family of set functions is determined by this matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageInstance {
    scores: Vec<Vec<f64>>,
}

/// Scores of scalarized values normalized against the candidate set itself:
/// the best feasible value maps to 1 and the worst feasible one to 0.
/// A set whose feasible values all coincide scores as an indicator of
/// attaining that value; infeasible members score 0.
pub fn normalized_scores(values: &[f64], utility_floor: f64) -> Vec<f64> {
    normalized_scores_against(values, values.len(), utility_floor)
}

/// `F_lambda(C)`: utility ratio of `candidates` measured against the best
/// point of `reference` (the dense set). Both hold SHF utility vectors.
pub fn submodular_value(candidates: &[Vec<f64>], reference: &[Vec<f64>], s: &Scalarizer) -> f64 {
    if candidates.is_empty() {
        return 0.0;
    }
    let mut values: Vec<f64> = reference.iter().map(|u| scalarize(u, s)).collect();
    values.extend(candidates.iter().map(|u| scalarize(u, s)));
    let scores = normalized_scores_against(&values, reference.len(), s.utility_floor);
    scores[reference.len()..].iter().copied().fold(0.0, f64::max)
}

/// Scores of all `values` against the scale of the first `reference_len`.
fn normalized_scores_against(values: &[f64], reference_len: usize, utility_floor: f64) -> Vec<f64> {
    let Some(scale) = ReferenceScale::from_values(values[..reference_len].iter().copied(), utility_floor) else {
        return vec![0.0; values.len()];
    };
    let denom = scale.shifted_best();
    values
        .iter()
        .map(|&v| {
            if v <= utility_floor {
                0.0
            } else if denom > 0.0 {
                ((v - scale.floor) / denom).clamp(0.0, 1.0)
            } else {
                f64::from(v >= scale.best)
            }
        })
        .collect()
}

impl CoverageInstance {
    /// `scores[i][x]` must lie in `[0,1]`.
    pub fn new(scores: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = scores.first() else {
            return Err(Error::invalid("coverage instance needs at least one lambda"));
        };
        let n = first.len();
        if n == 0 || scores.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("coverage rows must be nonempty and of equal length"));
        }
        if scores.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("coverage scores must lie in [0,1]"));
        }
        Ok(Self { scores })
    }

    /// Instance over the dense set `d` (SHF utility vectors) for a list of
    /// scalarizers.
    pub fn from_utilities(d: &[Vec<f64>], scalarizers: &[Scalarizer]) -> Result<Self> {
        let scores = par::map(scalarizers, |s| {
            let values: Vec<f64> = d.iter().map(|u| scalarize(u, s)).collect();
            normalized_scores(&values, s.utility_floor)
        });
        Self::new(scores)
    }

    pub fn num_lambdas(&self) -> usize {
        self.scores.len()
    }

    pub fn num_points(&self) -> usize {
        self.scores[0].len()
    }

    pub fn scores(&self) -> &[Vec<f64>] {
        &self.scores
    }

    /// `F_i(C)`.
    pub fn value(&self, i: usize, set: &[usize]) -> f64 {
        set.iter().map(|&c| self.scores[i][c]).fold(0.0, f64::max)
    }

    pub fn min_value(&self, set: &[usize]) -> f64 {
        (0..self.num_lambdas()).map(|i| self.value(i, set)).fold(f64::INFINITY, f64::min)
    }

    /// `1 + ln(max_x sum_i F_i({x}))`.
    pub fn psi(&self) -> f64 {
        let best = (0..self.num_points())
            .map(|x| self.scores.iter().map(|row| row[x]).sum::<f64>())
            .fold(0.0, f64::max);
        if best > 0.0 {
            1.0 + best.ln()
        } else {
            1.0
        }
    }

    /// Greedy partial cover of the truncated average `(1/N) sum_i min(F_i(C), q)`
    /// up to level `q`. Ties go to the larger untruncated gain, then the
    /// lower index.
    pub fn greedy_partial_cover(&self, q: f64) -> Vec<usize> {
        let n = self.num_points();
        let lambdas = self.num_lambdas();
        let mut current = vec![0.0; lambdas];
        let mut chosen = Vec::new();
        let mut taken = vec![false; n];
        let covered = |cur: &[f64]| cur.iter().all(|&c| c >= q - 1e-12);
        while !covered(&current) {
            let mut best: Option<(usize, f64, f64)> = None;
            for x in (0..n).filter(|&x| !taken[x]) {
                let mut gain = 0.0;
                let mut raw = 0.0;
                for i in 0..lambdas {
                    let next = current[i].max(self.scores[i][x]);
                    gain += next.min(q) - current[i].min(q);
                    raw += next - current[i];
                }
                let better = match best {
                    None => true,
                    Some((_, g, r)) => gain > g || (gain == g && raw > r),
                };
                if better {
                    best = Some((x, gain, raw));
                }
            }
            match best {
                Some((x, gain, _)) if gain > 0.0 => {
                    taken[x] = true;
                    chosen.push(x);
                    for (i, c) in current.iter_mut().enumerate() {
                        *c = c.max(self.scores[i][x]);
                    }
                }
                _ => break,
            }
        }
        chosen
    }
}

/// Result of robust sparsification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSelection {
    pub indices: Vec<usize>,
    pub psi: f64,
    /// Coverage level reached by every `lambda` draw.
    pub level: f64,
}

/// Robust sparsification: bisection over the coverage level `q`, each probe
/// running a greedy partial cover, keeping the highest level whose cover
/// fits in `psi * k` points.
///
/// `min_i F_i(C)` can only take values among the singleton scores, so the
/// bisection runs over that finite set of levels up to `min_i F_i(D)`; it
/// stops once no attainable level separates the accepted and rejected
/// probes.
pub fn sparsify(instance: &CoverageInstance, k: usize) -> Result<SparseSelection> {
    if k == 0 {
        return Err(Error::invalid("display budget must be positive"));
    }
    let n = instance.num_points();
    let psi = instance.psi();
    let all: Vec<usize> = (0..n).collect();
    if k >= n {
        let level = instance.min_value(&all);
        return Ok(SparseSelection { indices: all, psi, level });
    }
    let top = instance.min_value(&all);
    let mut levels: Vec<f64> = instance
        .scores()
        .iter()
        .flatten()
        .copied()
        .filter(|&v| v > 0.0 && v <= top)
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let cap = psi * k as f64;
    let mut lo: isize = -1;
    let mut hi: isize = levels.len() as isize;
    let mut best: Option<Vec<usize>> = None;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let cover = instance.greedy_partial_cover(levels[mid as usize]);
        if cover.len() as f64 <= cap + 1e-9 {
            lo = mid;
            best = Some(cover);
        } else {
            hi = mid;
        }
    }
    let indices = best.unwrap_or_else(|| {
        // no positive level fits the budget: keep the single point with the
        // largest total score
        let x = (0..n)
            .max_by(|&a, &b| {
                let sa: f64 = instance.scores().iter().map(|r| r[a]).sum();
                let sb: f64 = instance.scores().iter().map(|r| r[b]).sum();
                sa.total_cmp(&sb).then(b.cmp(&a))
            })
            .unwrap_or(0);
        vec![x]
    });
    let level = instance.min_value(&indices);
    Ok(SparseSelection { indices, psi, level })
}

/// One displayed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPoint {
    /// Index into the session's evaluation list.
    pub evaluation: usize,
    pub input: Vec<f64>,
    pub objectives: Vec<f64>,
    pub raw_objectives: Vec<f64>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbed_dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub improved_dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl QueryPoint {
    pub fn from_evaluation(index: usize, e: &Evaluation) -> Self {
        Self {
            evaluation: index,
            input: e.input.clone(),
            objectives: e.objectives.clone(),
            raw_objectives: e.raw_objectives.clone(),
            provenance: e.provenance,
            perturbed_dimension: None,
            improved_dimension: None,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySet {
    pub round: usize,
    pub points: Vec<QueryPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
}

impl QuerySet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.objectives.clone()).collect()
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.points.iter().filter(|p| p.provenance == provenance).count()
    }

    /// Append `point` unless its input duplicates one already present.
    pub fn push_unique(&mut self, point: QueryPoint, tolerance: f64) -> bool {
        let dup = self.points.iter().any(|p| {
            p.input
                .iter()
                .zip(&point.input)
                .all(|(a, b)| (a - b).abs() <= tolerance)
        });
        if !dup {
            self.points.push(point);
        }
        !dup
    }
}

/// Sparse selection over `pool` (evaluation indices) under `lambda_samples`
/// draws of `lambda` and one shared draw of `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn sparse_query(
    evaluations: &[Evaluation],
    pool: &[usize],
    preferences: &PreferenceState,
    bounds: &BoundsPosterior,
    settings: DenseSettings<'_>,
    round: usize,
    seed: u64,
) -> Result<(QuerySet, SoftHardBounds)> {
    const STREAM_SPARSE: u64 = 2;
    let mut r = rng::stream(seed, round as u64, STREAM_SPARSE);
    let scalarizers = (0..settings.query.lambda_samples)
        .map(|_| Scalarizer::new(preferences.draw(&mut r).to_vec(), settings.shf, settings.gamma))
        .collect::<Result<Vec<_>>>()?;
    let alpha = bounds.sample(settings.preference, &mut r);
    let utilities: Vec<Vec<f64>> = pool
        .iter()
        .map(|&i| shf_vector_unchecked(&evaluations[i].objectives, &alpha, settings.shf))
        .collect();
    let any_feasible = pool.iter().any(|&i| alpha.is_feasible(&evaluations[i].objectives));
    let mut query = QuerySet {
        round,
        points: Vec::new(),
        psi: None,
    };
    let chosen: Vec<usize> = if any_feasible {
        let instance = CoverageInstance::from_utilities(&utilities, &scalarizers)?;
        let sel = sparsify(&instance, settings.query.display_budget)?;
        query.psi = Some(sel.psi);
        sel.indices
    } else {
        // nothing meets the sampled hard bounds: show the least violating points
        let mut order: Vec<usize> = (0..pool.len()).collect();
        let viol: Vec<f64> = pool.iter().map(|&i| alpha.violation(&evaluations[i].objectives)).collect();
        order.sort_by(|&a, &b| viol[a].total_cmp(&viol[b]).then(a.cmp(&b)));
        order.truncate(settings.query.display_budget);
        order
    };
    for c in chosen {
        let e = pool[c];
        query.push_unique(QueryPoint::from_evaluation(e, &evaluations[e]), settings.query.duplicate_tolerance);
    }
    Ok((query, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_concave_quadratic() {
        let f = |x: &[f64]| -x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum::<f64>();
        let x = acq_maximize(f, |_| 0.0, 3, -1e12, &AcqOptions::default(), 4);
        assert!(x.iter().all(|v| (v - 0.5).abs() < 1e-3), "{x:?}");
    }

    #[test]
    fn constant_acquisition_keeps_first_candidate() {
        let x = acq_maximize(|_| 1.0, |_| 0.0, 2, -1e12, &AcqOptions::default(), 11);
        assert_eq!(x, sobol::point(0, 2, 11));
    }

    #[test]
    fn single_feasible_candidate_wins() {
        let target = sobol::point(77, 2, 3);
        let t = target.clone();
        let f = move |x: &[f64]| if x == t.as_slice() { 0.0 } else { -1e12 };
        let opts = AcqOptions {
            refine_top: 0,
            ..AcqOptions::default()
        };
        assert_eq!(acq_maximize(f, |_| 1.0, 2, -1e12, &opts, 3), target);
    }

    #[test]
    fn all_floor_picks_least_violation() {
        let x = acq_maximize(|_| -1e12, |x: &[f64]| (x[0] - 0.3).abs(), 1, -1e12, &AcqOptions::default(), 0);
        let cands = sobol::points(512, 1, 0);
        let best = cands
            .iter()
            .min_by(|a, b| (a[0] - 0.3).abs().total_cmp(&(b[0] - 0.3).abs()))
            .unwrap();
        assert_eq!(&x, best);
    }

    #[test]
    fn psi_of_e_squared() {
        let e2 = std::f64::consts::E.powi(2);
        let inst = CoverageInstance::new(vec![vec![1.0, 0.2]; 1]).unwrap();
        assert_eq!(inst.psi(), 1.0);
        let rows: Vec<Vec<f64>> = (0..8).map(|_| vec![e2 / 8.0, 0.1]).collect();
        let inst = CoverageInstance::new(rows).unwrap();
        assert!((inst.psi() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn set_function_conventions() {
        let params = ShfParams::default();
        let s = Scalarizer::new(vec![0.5, 0.5], &params, 0.05).unwrap();
        let d = vec![vec![0.2, 1.1], vec![0.9, 0.9], vec![1.2, 0.1]];
        assert_eq!(submodular_value(&[], &d, &s), 0.0);
        assert_eq!(submodular_value(&d, &d, &s), 1.0);
    }

    #[test]
    fn budget_covers_everything() {
        let inst = CoverageInstance::new(vec![vec![0.2, 1.0, 0.5]]).unwrap();
        assert_eq!(sparsify(&inst, 3).unwrap().indices, vec![0, 1, 2]);
        assert_eq!(sparsify(&inst, 1).unwrap().indices, vec![1]);
    }

    #[test]
    fn push_unique_rejects_duplicates() {
        let mut q = QuerySet {
            round: 1,
            points: Vec::new(),
            psi: None,
        };
        let p = QueryPoint {
            evaluation: 0,
            input: vec![0.1, 0.2],
            objectives: vec![0.5, 0.5],
            raw_objectives: vec![0.5, 0.5],
            provenance: Provenance::Dense,
            perturbed_dimension: None,
            improved_dimension: None,
            epsilon: None,
        };
        assert!(q.push_unique(p.clone(), 1e-9));
        assert!(!q.push_unique(p, 1e-9));
    }
}
