//! Simulated decision makers, information-gain query selection and the
//! experiment runner.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{Mechanism, Querying, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::{MetricTrace, TracePoint};
use crate::par;
use crate::preference::{plackett_luce_likelihood, FeedbackEvent, FeedbackKind, PreferenceState};
use crate::problem::{sample_ground_truth, GroundTruthDM, ObjectiveProblem};
use crate::query::QuerySet;
use crate::rng;
use crate::session::{Session, SessionLog, SessionStatus};
use crate::shf::{shf_vector_unchecked, utility_ratio, Scalarizer, ShfParams, SoftHardBounds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatedDMConfig {
    pub soft_step: f64,
    pub hard_step: f64,
    /// Soft-hard gap below which the soft bound is adjusted instead.
    pub proximity_threshold: f64,
    /// Noise on the hidden utilities behind choice feedback.
    pub noise_sigma: f64,
    /// Spread of the adjustment weight around its mean.
    pub weight_sd: f64,
    /// Relative magnitude increase after seeing a relevant adjacent point.
    pub tmosh_confidence_boost: f64,
    /// Noise on the objective values the simulated DM reads off a query.
    pub observation_noise: f64,
}

impl Default for SimulatedDMConfig {
    fn default() -> Self {
        Self {
            soft_step: 0.3,
            hard_step: 0.4,
            proximity_threshold: 0.15,
            noise_sigma: 0.01,
            weight_sd: 0.05,
            tmosh_confidence_boost: 0.05,
            observation_noise: 0.01,
        }
    }
}

impl SimulatedDMConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.soft_step > 0.0 && self.hard_step > 0.0) {
            return Err(Error::invalid("adjustment steps must be positive"));
        }
        if !(self.tmosh_confidence_boost >= 0.0) {
            return Err(Error::invalid("confidence boost must be nonnegative"));
        }
        let nonneg = [self.proximity_threshold, self.noise_sigma, self.weight_sd, self.observation_noise];
        if nonneg.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("thresholds and noise levels must be nonnegative"));
        }
        Ok(())
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Index of the first extreme value under `better`.
fn first_by(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if better(v, values[best]) {
            best = i;
        }
    }
    best
}

/// One bound adjustment (or `no_change`) by a DM whose ideal is `y*`.
///
/// If `y*` violates some current hard bound, the most violated one is
/// relaxed, scaled by the distance from `y*` of the query point closest to
/// it. Otherwise the hard bound furthest below `y*` is tightened, scaled by
/// the distance of the furthest query point, and capped halfway to `y*`; if
/// that bound is already within `proximity_threshold` of its soft bound the
/// soft bound moves toward `y*` instead. A relaxation is scaled by
/// `1 + tmosh_confidence_boost` when the query held an adjacent point
/// perturbing that dimension.
pub fn simulate_bounds_feedback<R: Rng + ?Sized>(
    query: &QuerySet,
    truth: &GroundTruthDM,
    means: &SoftHardBounds,
    config: &SimulatedDMConfig,
    units: u32,
    rng: &mut R,
) -> Result<FeedbackEvent> {
    if query.is_empty() {
        return Err(Error::invalid("bounds feedback needs a nonempty query"));
    }
    let y = &truth.y_star;
    let observed: Vec<Vec<f64>> = query
        .points
        .iter()
        .map(|p| {
            p.objectives
                .iter()
                .map(|&v| {
                    let e: f64 = rng.sample(StandardNormal);
                    v + config.observation_noise * e
                })
                .collect()
        })
        .collect();
    let z: f64 = rng.sample(StandardNormal);
    let dist: Vec<f64> = observed.iter().map(|o| distance(o, y)).collect();
    let hard = means.hard();
    let soft = means.soft();
    // an adjacent point showing what relaxing `d` buys emboldens the DM
    let boost = |d: usize| {
        if query.points.iter().any(|p| p.perturbed_dimension == Some(d)) {
            1.0 + config.tmosh_confidence_boost
        } else {
            1.0
        }
    };

    let violation: Vec<f64> = hard.iter().zip(y).map(|(h, v)| h - v).collect();
    let d = first_by(&violation, |a, b| a > b);
    if violation[d] > 0.0 {
        let reference = &observed[first_by(&dist, |a, b| a < b)];
        let weight = ((reference[d] - y[d]).abs() + config.weight_sd * z).max(0.0);
        let magnitude = config.hard_step * weight * boost(d);
        let new = (hard[d] - magnitude).max(0.0);
        if !(new < hard[d]) {
            return Ok(FeedbackEvent::no_change(units));
        }
        return Ok(FeedbackEvent::bound(FeedbackKind::HardRelaxed, d, hard[d], new, units));
    }

    let slack: Vec<f64> = y.iter().zip(hard).map(|(v, h)| v - h).collect();
    let d = first_by(&slack, |a, b| a > b);
    let reference = &observed[first_by(&dist, |a, b| a > b)];
    let weight = ((reference[d] - y[d]).abs() + config.weight_sd * z).max(0.0);
    if soft[d] - hard[d] < config.proximity_threshold {
        let magnitude = config.soft_step * weight;
        let toward = y[d] - soft[d];
        let new = soft[d] + toward.signum() * magnitude.min(toward.abs());
        if new == soft[d] {
            return Ok(FeedbackEvent::no_change(units));
        }
        return Ok(FeedbackEvent::bound(FeedbackKind::SoftAdjusted, d, soft[d], new, units));
    }
    let magnitude = (config.hard_step * weight).min(0.5 * slack[d]);
    let new = hard[d] + magnitude;
    if !(new > hard[d]) {
        return Ok(FeedbackEvent::no_change(units));
    }
    Ok(FeedbackEvent::bound(FeedbackKind::HardTightened, d, hard[d], new, units))
}

/// Ranking implied by noisy hidden utilities
/// `s_lambda*(u_alpha*(y_i)) + eps_i`.
pub fn simulate_choice_feedback<R: Rng + ?Sized>(
    kind: FeedbackKind,
    objectives: &[Vec<f64>],
    truth: &GroundTruthDM,
    params: &ShfParams,
    noise_sigma: f64,
    partial_top: usize,
    units: u32,
    rng: &mut R,
) -> Result<FeedbackEvent> {
    let n = objectives.len();
    let len = match kind {
        FeedbackKind::PairwiseChoice if n == 2 => 2,
        FeedbackKind::PairwiseChoice => {
            return Err(Error::invalid(format!("pairwise feedback needs exactly 2 points, got {n}")));
        }
        FeedbackKind::FullRanking if n >= 2 => n,
        FeedbackKind::PartialRanking if n >= 2 => partial_top.min(n),
        FeedbackKind::FullRanking | FeedbackKind::PartialRanking => {
            return Err(Error::invalid(format!("ranking feedback needs at least 2 points, got {n}")));
        }
        _ => return Err(Error::invalid("not a choice feedback kind")),
    };
    let noisy: Vec<f64> = objectives
        .iter()
        .map(|y| {
            let e: f64 = rng.sample(StandardNormal);
            truth.value(y, params) + noise_sigma * e
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| noisy[b].total_cmp(&noisy[a]).then(a.cmp(&b)));
    order.truncate(len);
    Ok(FeedbackEvent::choice(kind, order, units))
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// Every ordered selection of `len` distinct items out of `n`.
fn arrangements(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn go(n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !cur.contains(&i) {
                cur.push(i);
                go(n, len, cur, out);
                cur.pop();
            }
        }
    }
    go(n, len, &mut cur, &mut out);
    out
}

/// Mutual information between the feedback outcome on `set` and `lambda`,
/// over equally weighted particles: entropy of the mixture outcome
/// distribution minus the mean per-particle entropy.
///
/// `values[i][x]` is the scalarized utility of candidate `x` under particle `i`.
pub fn mutual_information(values: &[Vec<f64>], set: &[usize], top: usize) -> f64 {
    if values.is_empty() || set.len() < 2 {
        return 0.0;
    }
    let outcomes = arrangements(set.len(), top.min(set.len()));
    let mut mixture = vec![0.0; outcomes.len()];
    let mut conditional = 0.0;
    for row in values {
        let u: Vec<f64> = set.iter().map(|&x| row[x]).collect();
        let p: Vec<f64> = outcomes.iter().map(|o| plackett_luce_likelihood(&u, o)).collect();
        conditional += entropy(&p);
        for (m, v) in mixture.iter_mut().zip(&p) {
            *m += v;
        }
    }
    let n = values.len() as f64;
    mixture.iter_mut().for_each(|m| *m /= n);
    (entropy(&mixture) - conditional / n).max(0.0)
}

/// Information-gain query of `k` pool points.
///
/// Particles are taken evenly spaced from the posterior; utilities use the
/// current bound means. Pairs are searched exhaustively, larger queries grow
/// greedily from the best pair. Ties keep the earliest candidate.
pub fn info_gain_query(
    pool: &[Vec<f64>],
    preferences: &PreferenceState,
    bounds: &SoftHardBounds,
    kind: FeedbackKind,
    k: usize,
    config: &RunConfig,
) -> Result<Vec<usize>> {
    if k < 2 || pool.len() < k {
        return Err(Error::invalid(format!(
            "pool of {} points cannot supply a query of {k}",
            pool.len()
        )));
    }
    let samples = preferences.samples();
    let count = config.budget.info_gain_particles.clamp(1, samples.len());
    let particles: Vec<&Vec<f64>> = (0..count).map(|i| &samples[i * samples.len() / count]).collect();
    let utilities: Vec<Vec<f64>> = pool.iter().map(|y| shf_vector_unchecked(y, bounds, &config.shf)).collect();
    let values = particles
        .iter()
        .map(|lambda| {
            let s = Scalarizer::new((*lambda).clone(), &config.shf, config.gamma)?;
            Ok(utilities.iter().map(|u| s.scalarize(u)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let top = |size: usize| match kind {
        FeedbackKind::PartialRanking => config.budget.partial_ranking_top.min(size),
        _ => size,
    };

    let n = pool.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let scores = par::map(&pairs, |&(a, b)| mutual_information(&values, &[a, b], top(2)));
    let best = first_by(&scores, |a, b| a > b);
    let mut chosen = vec![pairs[best].0, pairs[best].1];
    while chosen.len() < k {
        let rest: Vec<usize> = (0..n).filter(|x| !chosen.contains(x)).collect();
        let gains = par::map(&rest, |&x| {
            let mut set = chosen.clone();
            set.push(x);
            mutual_information(&values, &set, top(set.len()))
        });
        chosen.push(rest[first_by(&gains, |a, b| a > b)]);
    }
    Ok(chosen)
}

/// One arm of an experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentArm {
    pub label: String,
    pub mechanism: Mechanism,
    pub querying: Querying,
    /// Overrides the base config; `false` keeps `lambda` at its prior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub use_plackett_luce: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_units: Option<bool>,
}

impl ExperimentArm {
    pub fn new(label: &str, mechanism: Mechanism, querying: Querying) -> Self {
        Self {
            label: label.into(),
            mechanism,
            querying,
            use_plackett_luce: None,
            uniform_units: None,
        }
    }

    /// The six mechanisms compared on a common budget.
    pub fn standard() -> Vec<Self> {
        vec![
            Self::new("active_tmosh", Mechanism::ActiveTmosh, Querying::Native),
            Self::new("active_mosh", Mechanism::ActiveMosh, Querying::Native),
            Self::new("pairwise", Mechanism::Pairwise, Querying::InfoGain),
            Self::new("full_ranking", Mechanism::FullRanking, Querying::InfoGain),
            Self::new("partial_ranking", Mechanism::PartialRanking, Querying::InfoGain),
            Self::new("random", Mechanism::Random, Querying::Random),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub problems: Vec<String>,
    pub arms: Vec<ExperimentArm>,
    pub seeds: Vec<u64>,
    /// Shared settings; each run overrides problem, seed and the arm fields.
    pub base: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            problems: vec!["branin_currin".into()],
            arms: ExperimentArm::standard(),
            seeds: (0..10).collect(),
            base: RunConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn run_config(&self, problem: &str, arm: &ExperimentArm, seed: u64) -> RunConfig {
        let mut c = self.base.clone();
        c.problem = problem.into();
        c.seed = seed;
        c.mechanism = arm.mechanism;
        c.querying = arm.querying;
        if let Some(pl) = arm.use_plackett_luce {
            c.preference.use_plackett_luce = pl;
        }
        if let Some(u) = arm.uniform_units {
            c.budget.uniform_units = u;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() || self.arms.is_empty() || self.seeds.is_empty() {
            return Err(Error::invalid("experiment needs problems, arms and seeds"));
        }
        for (i, a) in self.arms.iter().enumerate() {
            if self.arms[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::invalid(format!("duplicate arm label {}", a.label)));
            }
        }
        for p in &self.problems {
            ObjectiveProblem::by_name(p)?;
            for a in &self.arms {
                self.run_config(p, a, 0).validate()?;
            }
        }
        Ok(())
    }
}

/// Outcome of one simulated session, without its log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub trace: MetricTrace,
    /// Units spent when each event completed.
    pub event_units: Vec<u32>,
    /// Ratio of each round's query alone, in round order.
    pub event_ratios: Vec<f64>,
    /// Ratio of the point the DM finalized on.
    pub final_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRun {
    pub record: RunRecord,
    pub log: SessionLog,
}

const STREAM_TRUTH: u64 = 1;
const STREAM_FEEDBACK: u64 = 20;

/// Hidden truth for `seed`, shared by every mechanism run on that seed.
pub fn ground_truth(config: &RunConfig, problem: &ObjectiveProblem) -> Result<GroundTruthDM> {
    sample_ground_truth(
        problem,
        rng::derive(config.seed, 0, STREAM_TRUTH),
        &config.shf,
        config.gamma,
        config.simulator.noise_sigma,
    )
}

fn ratio_of(session: &Session, truth: &GroundTruthDM, indices: &[usize]) -> Result<f64> {
    let params = &session.config().shf;
    let bounds = truth.bounds();
    let u: Vec<Vec<f64>> = indices
        .iter()
        .map(|&i| shf_vector_unchecked(&session.evaluations()[i].objectives, &bounds, params))
        .collect();
    utility_ratio(&u, &truth.reference, &truth.scalarizer(params))
}

/// Drive one session to the end of its budget with a simulated DM, then
/// finalize on the observed point the DM values most.
///
/// The trace has a point at every unit; it is 0 before the first event and
/// changes only when an event completes.
pub fn run_session(config: RunConfig, label: &str) -> Result<SimulatedRun> {
    let problem = ObjectiveProblem::by_name(&config.problem)?;
    let truth = ground_truth(&config, &problem)?;
    let mut session = Session::new(config.clone())?;
    let total = config.budget.total_units;
    let mut values = vec![0.0; total as usize];
    let mut event_units = Vec::new();
    let mut event_ratios = Vec::new();
    let mut current = 0.0;
    while session.status() == SessionStatus::AwaitingFeedback {
        let query = session.pending_query().expect("pending while awaiting feedback").clone();
        let mut r = rng::stream(config.seed, session.round() as u64, STREAM_FEEDBACK);
        let units = config.budget.mechanism_cost(config.mechanism);
        let event = match config.mechanism.choice_kind() {
            None => simulate_bounds_feedback(&query, &truth, &session.bounds().means(), &config.simulator, units, &mut r)?,
            Some(kind) => simulate_choice_feedback(
                kind,
                &query.objectives(),
                &truth,
                &config.shf,
                config.simulator.noise_sigma,
                config.budget.partial_ranking_top,
                units,
                &mut r,
            )?,
        };
        let start = session.units_spent();
        session.submit_feedback(event)?;
        let end = session.units_spent();
        let shown: Vec<usize> = query.points.iter().map(|p| p.evaluation).collect();
        event_ratios.push(ratio_of(&session, &truth, &shown)?);
        let ratio = ratio_of(&session, &truth, &session.observed())?;
        session.record_metrics(Some(ratio));
        for v in &mut values[start as usize..end as usize - 1] {
            *v = current;
        }
        values[end as usize - 1] = ratio;
        current = ratio;
        event_units.push(end);
    }
    let last = event_units.last().copied().unwrap_or(0) as usize;
    for v in &mut values[last..] {
        *v = current;
    }

    let observed = session.observed();
    let truth_values: Vec<f64> = observed
        .iter()
        .map(|&i| truth.value(&session.evaluations()[i].objectives, &config.shf))
        .collect();
    let chosen = observed[first_by(&truth_values, |a, b| a > b)];
    session.finalize(chosen)?;
    let final_ratio = ratio_of(&session, &truth, &[chosen])?;
    let points = values
        .iter()
        .enumerate()
        .map(|(i, &v)| TracePoint {
            unit: i as u32 + 1,
            utility_ratio: v,
        })
        .collect();
    Ok(SimulatedRun {
        record: RunRecord {
            problem: config.problem.clone(),
            trace: MetricTrace::new(label, config.seed, points)?,
            event_units,
            event_ratios,
            final_ratio,
        },
        log: session.log().clone(),
    })
}

/// Every (problem, arm, seed) cell of the matrix; runs are independent and
/// execute in parallel.
pub fn run_experiment(experiment: &ExperimentConfig) -> Result<Vec<SimulatedRun>> {
    experiment.validate()?;
    let mut jobs = Vec::new();
    for p in &experiment.problems {
        for a in &experiment.arms {
            for &s in &experiment.seeds {
                jobs.push((experiment.run_config(p, a, s), a.label.clone()));
            }
        }
    }
    par::map(&jobs, |(c, label)| run_session(c.clone(), label))
        .into_iter()
        .collect()
}

/// Write `experiment.json`, `runs.json`, `traces.csv` and one JSONL log per
/// run into `dir`.
pub fn write_run_directory(dir: &Path, experiment: &ExperimentConfig, runs: &[SimulatedRun]) -> Result<()> {
    fs::create_dir_all(dir.join("logs"))?;
    fs::write(dir.join("experiment.json"), serde_json::to_string_pretty(experiment)?)?;
    let records: Vec<&RunRecord> = runs.iter().map(|r| &r.record).collect();
    fs::write(dir.join("runs.json"), serde_json::to_string_pretty(&records)?)?;
    let mut csv = String::from("problem,mechanism,seed,unit,utility_ratio\n");
    for r in &records {
        for p in &r.trace.points {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                r.problem, r.trace.mechanism, r.trace.seed, p.unit, p.utility_ratio
            ));
        }
    }
    fs::write(dir.join("traces.csv"), csv)?;
    for r in runs {
        let name = format!("{}_{}_{}.jsonl", r.record.problem, r.record.trace.mechanism, r.record.trace.seed);
        let file = fs::File::create(dir.join("logs").join(name))?;
        r.log.write_jsonl(std::io::BufWriter::new(file))?;
    }
    Ok(())
}
