//! The interactive loop: one pending query at a time, feedback in, updated
//! posteriors and the next query out, with an append-only log that can be
//! replayed to reproduce every query exactly.

use std::io::{BufRead, Write};

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::config::{Querying, RunConfig};
use crate::error::{Error, Result};
use crate::preference::{
    interpret_feedback, update_lambda_posterior, BoundsPosterior, FeedbackEvent, FeedbackKind, LikelihoodFactor,
    PreferenceState,
};
use crate::problem::ObjectiveProblem;
use crate::query::{dense_sample, fit_surrogate, sparse_query, Evaluation, Provenance, QueryPoint, QuerySet};
use crate::rng;
use crate::sensitivity::{activity_report, find_adjacent, incumbents, ActivityCell, AdjacentCandidate};
use crate::shf::{utility_ratio, ReferenceScale, Scalarizer, SoftHardBounds};
use crate::simulator::info_gain_query;
use crate::sobol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingFeedback,
    Computing,
    /// Budget spent; only finalization is accepted.
    AwaitingFinalization,
    Finalized,
}

/// Posterior snapshot written to the log after every update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub lambda_mean: Vec<f64>,
    pub soft_mean: Vec<f64>,
    pub hard_mean: Vec<f64>,
    pub soft_var: Vec<f64>,
    pub hard_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub units_spent: u32,
    pub units_remaining: u32,
    pub evaluations: usize,
    pub observed: usize,
    /// Only present in simulated sessions, which know the hidden truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub chosen_evaluation: usize,
    pub input: Vec<f64>,
    pub objectives: Vec<f64>,
    pub raw_objectives: Vec<f64>,
    /// Ratio of the chosen point under the posterior-mean preferences,
    /// measured on the problem's reference grid.
    pub estimated_utility_ratio: f64,
    pub rounds: usize,
    pub units_spent: u32,
    /// First round showing a point whose estimated ratio reaches `1 - delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_good_round: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Config { config: Box<RunConfig> },
    Query { round: usize, query: QuerySet },
    Feedback { round: usize, event: FeedbackEvent, ranking: Vec<usize> },
    Posterior { round: usize, summary: PosteriorSummary },
    Metrics { round: usize, metrics: RoundMetrics },
    Final { summary: FinalSummary },
}

/// Append-only record of a session.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub records: Vec<LogRecord>,
}

impl SessionLog {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut records = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(Self { records })
    }

    pub fn config(&self) -> Option<&RunConfig> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Config { config } => Some(config.as_ref()),
            _ => None,
        })
    }
}

const STREAM_PRIOR: u64 = 10;
const STREAM_POOL: u64 = 11;
const STREAM_MH: u64 = 12;
const STREAM_RANDOM_QUERY: u64 = 13;
const STREAM_TMOSH: u64 = 14;

/// Outcome of an accepted feedback event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackOutcome {
    pub status: SessionStatus,
    pub units_spent: u32,
    pub units_remaining: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_query: Option<QuerySet>,
}

pub struct Session {
    config: RunConfig,
    problem: ObjectiveProblem,
    round: usize,
    evaluations: Vec<Evaluation>,
    pool: Vec<usize>,
    preferences: PreferenceState,
    bounds: BoundsPosterior,
    pending: Option<QuerySet>,
    answered: Vec<QuerySet>,
    units_spent: u32,
    status: SessionStatus,
    adjacent: Vec<AdjacentCandidate>,
    log: SessionLog,
}

impl Session {
    /// Validate the config, set up priors and build the round-1 query.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let problem = ObjectiveProblem::by_name(&config.problem)?;
        let l = problem.num_objectives();
        let (soft, hard) = config.prior_bounds(l);
        if soft.len() != l || hard.len() != l {
            return Err(Error::Validation(format!(
                "prior bounds need {l} entries, got soft {} and hard {}",
                soft.len(),
                hard.len()
            )));
        }
        if soft.iter().chain(&hard).any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation("prior bounds must lie in [0,1]".into()));
        }
        let prior = SoftHardBounds::new(soft, hard).map_err(|e| Error::Validation(e.to_string()))?;
        let bounds = BoundsPosterior::new(&prior, config.preference.bound_prior_variance);
        let mut r = rng::stream(config.seed, 0, STREAM_PRIOR);
        let preferences = PreferenceState::prior(l, config.preference.particles, &mut r);

        let mut evaluations = Vec::new();
        let mut pool = Vec::new();
        if !config.mechanism.uses_bounds() && config.querying != Querying::Native {
            let seed = rng::derive(config.seed, 0, STREAM_POOL);
            for u in sobol::points(config.budget.pool_size, problem.input_dim(), seed) {
                evaluations.push(Evaluation::new(&problem, problem.from_unit(&u), 0, Provenance::Pool));
                pool.push(evaluations.len() - 1);
            }
        }

        let mut s = Self {
            config: config.clone(),
            problem,
            round: 0,
            evaluations,
            pool,
            preferences,
            bounds,
            pending: None,
            answered: Vec::new(),
            units_spent: 0,
            status: SessionStatus::Computing,
            adjacent: Vec::new(),
            log: SessionLog::default(),
        };
        s.log.records.push(LogRecord::Config { config: Box::new(config) });
        s.push_posterior();
        s.advance()?;
        Ok(s)
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn problem(&self) -> &ObjectiveProblem {
        &self.problem
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn units_spent(&self) -> u32 {
        self.units_spent
    }

    pub fn units_remaining(&self) -> u32 {
        self.config.budget.total_units.saturating_sub(self.units_spent)
    }

    pub fn pending_query(&self) -> Option<&QuerySet> {
        self.pending.as_ref()
    }

    pub fn answered(&self) -> &[QuerySet] {
        &self.answered
    }

    pub fn evaluations(&self) -> &[Evaluation] {
        &self.evaluations
    }

    pub fn preferences(&self) -> &PreferenceState {
        &self.preferences
    }

    pub fn bounds(&self) -> &BoundsPosterior {
        &self.bounds
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn adjacent(&self) -> &[AdjacentCandidate] {
        &self.adjacent
    }

    /// Latest sensitivity matrix, indexed `[perturbed][improved]`.
    pub fn sensitivity(&self) -> Vec<Vec<Option<ActivityCell>>> {
        activity_report(self.problem.num_objectives(), &self.adjacent)
    }

    pub fn posterior_summary(&self) -> PosteriorSummary {
        PosteriorSummary {
            lambda_mean: self.preferences.mean(),
            soft_mean: self.bounds.soft_mean.clone(),
            hard_mean: self.bounds.hard_mean.clone(),
            soft_var: self.bounds.soft_var.clone(),
            hard_var: self.bounds.hard_var.clone(),
        }
    }

    /// Evaluation indices of every point shown in an answered query.
    pub fn observed(&self) -> Vec<usize> {
        let mut seen: Vec<usize> = self.answered.iter().flat_map(|q| q.points.iter().map(|p| p.evaluation)).collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    fn push_posterior(&mut self) {
        let summary = self.posterior_summary();
        self.log.records.push(LogRecord::Posterior {
            round: self.round,
            summary,
        });
    }

    /// Attach a truth-derived metric to the latest round; only the simulator
    /// calls this.
    pub fn record_metrics(&mut self, utility_ratio: Option<f64>) {
        let metrics = RoundMetrics {
            units_spent: self.units_spent,
            units_remaining: self.units_remaining(),
            evaluations: self.evaluations.len(),
            observed: self.observed().len(),
            utility_ratio,
        };
        self.log.records.push(LogRecord::Metrics {
            round: self.round,
            metrics,
        });
    }

    fn can_afford_another(&self) -> bool {
        let next = self.config.budget.mechanism_cost(self.config.mechanism);
        self.units_spent + next <= self.config.budget.total_units
    }

    /// Build the next query, or move to awaiting finalization when the
    /// budget cannot cover another event.
    fn advance(&mut self) -> Result<()> {
        if !self.can_afford_another() {
            self.pending = None;
            self.status = SessionStatus::AwaitingFinalization;
            return Ok(());
        }
        self.status = SessionStatus::Computing;
        self.round += 1;
        let query = self.build_query()?;
        self.log.records.push(LogRecord::Query {
            round: self.round,
            query: query.clone(),
        });
        self.pending = Some(query);
        self.status = SessionStatus::AwaitingFeedback;
        Ok(())
    }

    fn random_subset(&self, from: &[usize], k: usize, stream: u64) -> Vec<usize> {
        let mut r = rng::stream(self.config.seed, self.round as u64, stream);
        let k = k.min(from.len());
        let mut picked: Vec<usize> = sample_indices(&mut r, from.len(), k).into_iter().map(|i| from[i]).collect();
        if self.config.mechanism.uses_bounds() {
            picked.sort_unstable();
        }
        picked
    }

    fn query_from(&self, indices: &[usize]) -> QuerySet {
        let mut q = QuerySet {
            round: self.round,
            points: Vec::new(),
            psi: None,
        };
        for &i in indices {
            q.push_unique(
                QueryPoint::from_evaluation(i, &self.evaluations[i]),
                self.config.query.duplicate_tolerance,
            );
        }
        q
    }

    fn build_query(&mut self) -> Result<QuerySet> {
        let cfg = self.config.clone();
        let round = self.round;
        match (cfg.mechanism, cfg.querying) {
            (m, Querying::InfoGain) => {
                let objectives: Vec<Vec<f64>> = self.pool.iter().map(|&i| self.evaluations[i].objectives.clone()).collect();
                let kind = m.choice_kind().expect("validated: info-gain only for choice mechanisms");
                let picked = info_gain_query(
                    &objectives,
                    &self.preferences,
                    &self.bounds.means(),
                    kind,
                    cfg.choice_query_size(),
                    &cfg,
                )?;
                let idx: Vec<usize> = picked.iter().map(|&p| self.pool[p]).collect();
                Ok(self.query_from(&idx))
            }
            (m, Querying::Random) if !m.uses_bounds() => {
                let idx = self.random_subset(&self.pool.clone(), cfg.choice_query_size(), STREAM_RANDOM_QUERY);
                Ok(self.query_from(&idx))
            }
            (m, querying) => {
                dense_sample(
                    &self.problem,
                    &mut self.evaluations,
                    &self.preferences,
                    &self.bounds,
                    cfg.dense_settings(),
                    cfg.query.dense_iterations,
                    round,
                    cfg.seed,
                )?;
                let all: Vec<usize> = (0..self.evaluations.len()).collect();
                let (mut query, alpha) = if querying == Querying::Random {
                    let idx = self.random_subset(&all, cfg.query.display_budget, STREAM_RANDOM_QUERY);
                    let mut r = rng::stream(cfg.seed, round as u64, STREAM_RANDOM_QUERY + 100);
                    (self.query_from(&idx), self.bounds.sample(&cfg.preference, &mut r))
                } else {
                    sparse_query(
                        &self.evaluations,
                        &all,
                        &self.preferences,
                        &self.bounds,
                        cfg.dense_settings(),
                        round,
                        cfg.seed,
                    )?
                };
                if !m.uses_bounds() {
                    self.fit_choice_size(&mut query, &all);
                }
                if m.uses_tmosh() {
                    self.append_adjacent(&mut query, &alpha)?;
                }
                Ok(query)
            }
        }
    }

    /// Trim or pad a native query to the size a choice mechanism expects.
    fn fit_choice_size(&self, query: &mut QuerySet, all: &[usize]) {
        let size = self.config.choice_query_size();
        query.points.truncate(size);
        if query.len() < size {
            let present: Vec<usize> = query.points.iter().map(|p| p.evaluation).collect();
            let rest: Vec<usize> = all.iter().copied().filter(|i| !present.contains(i)).collect();
            for i in self.random_subset(&rest, rest.len(), STREAM_RANDOM_QUERY + 200) {
                if query.len() >= size {
                    break;
                }
                query.push_unique(
                    QueryPoint::from_evaluation(i, &self.evaluations[i]),
                    self.config.query.duplicate_tolerance,
                );
            }
        }
    }

    fn append_adjacent(&mut self, query: &mut QuerySet, alpha: &SoftHardBounds) -> Result<()> {
        let cfg = &self.config;
        let l = self.problem.num_objectives();
        let surrogate = fit_surrogate(&self.problem, &self.evaluations, &cfg.gp)?;
        let means = self.bounds.means();
        let s = Scalarizer::new(self.preferences.mean(), &cfg.shf, cfg.gamma)?;
        let inc = incumbents(&self.evaluations, &means, &s, &cfg.shf);
        let mut found = Vec::new();
        for perturbed in 0..l {
            let seed = rng::derive(cfg.seed, self.round as u64, STREAM_TMOSH + 1000 * perturbed as u64);
            found.extend(find_adjacent(
                &self.problem,
                &surrogate,
                alpha,
                &inc,
                perturbed,
                &cfg.tmosh,
                &cfg.query.acq_options(),
                seed,
            )?);
        }
        let mut shown = found.clone();
        shown.sort_by(|a, b| b.improvement.total_cmp(&a.improvement));
        shown.truncate(2 * l);
        for c in shown {
            let e = Evaluation {
                input: c.input.clone(),
                objectives: c.realized.clone(),
                raw_objectives: c.raw_realized.clone(),
                round: self.round,
                provenance: Provenance::TmoshAdjacent,
            };
            let mut point = QueryPoint::from_evaluation(self.evaluations.len(), &e);
            point.perturbed_dimension = Some(c.perturbed_dimension);
            point.improved_dimension = Some(c.improved_dimension);
            point.epsilon = Some(cfg.tmosh.epsilon);
            if query.push_unique(point, cfg.query.duplicate_tolerance) {
                self.evaluations.push(e);
            }
        }
        self.adjacent = found;
        Ok(())
    }

    /// Apply one feedback event: validate, update both posteriors, debit the
    /// budget and build the next query.
    pub fn submit_feedback(&mut self, mut event: FeedbackEvent) -> Result<FeedbackOutcome> {
        match self.status {
            SessionStatus::AwaitingFeedback => {}
            SessionStatus::AwaitingFinalization => return Err(Error::FinalizationRequired),
            SessionStatus::Finalized => return Err(Error::Conflict("session is finalized".into())),
            SessionStatus::Computing => return Err(Error::Conflict("query is still being computed".into())),
        }
        let query = self.pending.clone().expect("a query is pending while awaiting feedback");
        if !self.config.mechanism.accepts(event.kind) {
            return Err(Error::Validation(format!(
                "{:?} feedback is not accepted by the {:?} mechanism",
                event.kind, self.config.mechanism
            )));
        }
        let cost = self.config.budget.cost(event.kind, query.len());
        if self.units_spent + cost > self.config.budget.total_units {
            return Err(Error::FinalizationRequired);
        }
        event.interaction_units = cost;
        if let (Some(d), true) = (event.dimension, event.kind.is_bound() && event.kind != FeedbackKind::NoChange) {
            if d < self.bounds.len() {
                let current = if event.kind == FeedbackKind::SoftAdjusted {
                    self.bounds.soft_mean[d]
                } else {
                    self.bounds.hard_mean[d]
                };
                event.old_value = Some(current);
            }
        }
        event.validate(self.problem.num_objectives(), query.len())?;

        let objectives = query.objectives();
        let ranking = interpret_feedback(&event, &objectives)?;
        let bounds = self.bounds.update(&event, &self.config.preference)?;
        let factor = (!ranking.is_empty())
            .then(|| LikelihoodFactor::new(&objectives, ranking.clone(), &bounds.means(), &self.config.shf));
        let mut r = rng::stream(self.config.seed, self.round as u64, STREAM_MH);
        self.preferences = update_lambda_posterior(
            &self.preferences,
            factor,
            &self.config.preference,
            &self.config.shf,
            self.config.gamma,
            &mut r,
        );
        self.bounds = bounds;
        self.units_spent += cost;
        self.log.records.push(LogRecord::Feedback {
            round: self.round,
            event,
            ranking,
        });
        self.push_posterior();
        self.answered.push(query);
        self.pending = None;
        self.advance()?;
        Ok(FeedbackOutcome {
            status: self.status,
            units_spent: self.units_spent,
            units_remaining: self.units_remaining(),
            next_query: self.pending.clone(),
        })
    }

    /// Turn a full proposed bound set into a single-modification event.
    /// No difference is `no_change`; more than one difference is rejected.
    pub fn event_from_bounds(&self, soft: &[f64], hard: &[f64]) -> Result<FeedbackEvent> {
        let l = self.bounds.len();
        if soft.len() != l || hard.len() != l {
            return Err(Error::Validation(format!("proposed bounds need {l} entries")));
        }
        let mut changes = Vec::new();
        for d in 0..l {
            if soft[d] != self.bounds.soft_mean[d] {
                changes.push((d, true, soft[d]));
            }
            if hard[d] != self.bounds.hard_mean[d] {
                changes.push((d, false, hard[d]));
            }
        }
        let units = self.config.budget.cost(FeedbackKind::NoChange, 0);
        match changes.as_slice() {
            [] => Ok(FeedbackEvent::no_change(units)),
            [(d, is_soft, new)] => {
                let (kind, old) = if *is_soft {
                    (FeedbackKind::SoftAdjusted, self.bounds.soft_mean[*d])
                } else if *new > self.bounds.hard_mean[*d] {
                    (FeedbackKind::HardTightened, self.bounds.hard_mean[*d])
                } else {
                    (FeedbackKind::HardRelaxed, self.bounds.hard_mean[*d])
                };
                Ok(FeedbackEvent::bound(kind, *d, old, *new, units))
            }
            _ => Err(Error::Validation(format!(
                "only a single bound modification is allowed per round, got {}",
                changes.len()
            ))),
        }
    }

    /// Seal the session on a previously shown point.
    pub fn finalize(&mut self, chosen_evaluation: usize) -> Result<FinalSummary> {
        match self.status {
            SessionStatus::Finalized => return Err(Error::Conflict("session is already finalized".into())),
            SessionStatus::Computing => return Err(Error::Conflict("query is still being computed".into())),
            _ => {}
        }
        let observed = self.observed();
        if !observed.contains(&chosen_evaluation) {
            return Err(Error::Validation(format!(
                "evaluation {chosen_evaluation} was never shown in an answered query"
            )));
        }
        let estimate = self.estimated_scale()?;
        let ratio_of = |i: usize| -> Result<f64> {
            match &estimate {
                Some((scale, s, bounds)) => {
                    let u = crate::shf::shf_vector_unchecked(&self.evaluations[i].objectives, bounds, &self.config.shf);
                    utility_ratio(&[u], scale, s)
                }
                None => Ok(0.0),
            }
        };
        let estimated_utility_ratio = ratio_of(chosen_evaluation)?;
        let mut first_good_round = None;
        for (m, q) in self.answered.iter().enumerate() {
            let mut good = false;
            for p in &q.points {
                if ratio_of(p.evaluation)? >= 1.0 - self.config.metrics.delta {
                    good = true;
                }
            }
            if good {
                first_good_round = Some(m + 1);
                break;
            }
        }
        let e = &self.evaluations[chosen_evaluation];
        let summary = FinalSummary {
            chosen_evaluation,
            input: e.input.clone(),
            objectives: e.objectives.clone(),
            raw_objectives: e.raw_objectives.clone(),
            estimated_utility_ratio,
            rounds: self.answered.len(),
            units_spent: self.units_spent,
            first_good_round,
        };
        self.pending = None;
        self.status = SessionStatus::Finalized;
        self.log.records.push(LogRecord::Final {
            summary: summary.clone(),
        });
        Ok(summary)
    }

    /// Reference scale of the posterior-mean preferences over the grid.
    fn estimated_scale(&self) -> Result<Option<(ReferenceScale, Scalarizer, SoftHardBounds)>> {
        let bounds = self.bounds.means();
        let s = Scalarizer::new(self.preferences.mean(), &self.config.shf, self.config.gamma)?;
        let grid = self.problem.reference_grid();
        let values = grid.outputs.iter().map(|y| s.value_of(y, &bounds, &self.config.shf));
        Ok(ReferenceScale::from_values(values, self.config.shf.utility_floor)
            .filter(|r| r.shifted_best() > 0.0)
            .map(|r| (r, s, bounds)))
    }

    /// Applies finalization on top of an otherwise already-built log.
    pub fn is_finished(&self) -> bool {
        matches!(
            self.status,
            SessionStatus::AwaitingFinalization | SessionStatus::Finalized
        )
    }
}

/// Differences found while replaying a log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub queries_checked: usize,
    pub mismatched_rounds: Vec<usize>,
    pub finalization_matches: Option<bool>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.mismatched_rounds.is_empty() && self.finalization_matches != Some(false)
    }
}

fn same_json<T: Serialize>(a: &T, b: &T) -> Result<bool> {
    Ok(serde_json::to_string(a)? == serde_json::to_string(b)?)
}

/// Re-run the engine over the log's config and feedback, comparing every
/// rebuilt query with the recorded one.
pub fn replay(log: &SessionLog) -> Result<ReplayReport> {
    let config = log
        .config()
        .cloned()
        .ok_or_else(|| Error::Validation("log has no config record".into()))?;
    let mut session = Session::new(config)?;
    let mut report = ReplayReport::default();
    for record in &log.records {
        match record {
            LogRecord::Query { round, query } => {
                report.queries_checked += 1;
                let rebuilt = session
                    .log
                    .records
                    .iter()
                    .find_map(|r| match r {
                        LogRecord::Query { round: rr, query } if rr == round => Some(query),
                        _ => None,
                    });
                match rebuilt {
                    Some(q) if same_json(q, query)? => {}
                    _ => report.mismatched_rounds.push(*round),
                }
            }
            LogRecord::Feedback { event, .. } => {
                session.submit_feedback(event.clone())?;
            }
            LogRecord::Final { summary } => {
                let rebuilt = session.finalize(summary.chosen_evaluation)?;
                report.finalization_matches = Some(same_json(&rebuilt, summary)?);
            }
            _ => {}
        }
    }
    Ok(report)
}

/// Session whose queries never need the surrogate: used by tests that only
/// exercise bookkeeping.
#[cfg(test)]
pub(crate) fn quick_config(mechanism: crate::config::Mechanism, querying: Querying) -> RunConfig {
    let mut c = RunConfig {
        mechanism,
        querying,
        ..RunConfig::default()
    };
    c.query.dense_iterations = 4;
    c.query.sobol_candidates = 32;
    c.query.refine_top = 1;
    c.query.refine_iterations = 4;
    c.preference.particles = 32;
    c.budget.pool_size = 16;
    c.budget.info_gain_particles = 8;
    c.gp.lengthscale_grid = 4;
    c.tmosh.restarts = 2;
    c.tmosh.restart_candidates = 16;
    c
}
