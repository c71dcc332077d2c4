//! Run configuration. Every tunable constant lives here with its default so
//! a run is fully described by one JSON document.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gp::GpConfig;
use crate::preference::{FeedbackKind, PreferenceConfig};
use crate::query::{DenseSettings, QueryConfig};
use crate::sensitivity::TmoshConfig;
use crate::shf::ShfParams;
use crate::simulator::SimulatedDMConfig;

/// How the decision maker answers queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Bound adjustments on dense-then-sparse queries.
    ActiveMosh,
    /// As `ActiveMosh`, plus sensitivity-analysis adjacent points.
    ActiveTmosh,
    Pairwise,
    FullRanking,
    PartialRanking,
    /// Pairwise answers on uniformly random pairs.
    Random,
}

impl Mechanism {
    pub fn uses_bounds(self) -> bool {
        matches!(self, Self::ActiveMosh | Self::ActiveTmosh)
    }

    pub fn uses_tmosh(self) -> bool {
        self == Self::ActiveTmosh
    }

    /// Feedback kind the mechanism accepts; `None` for bound mechanisms,
    /// which accept every bound kind.
    pub fn choice_kind(self) -> Option<FeedbackKind> {
        match self {
            Self::ActiveMosh | Self::ActiveTmosh => None,
            Self::Pairwise | Self::Random => Some(FeedbackKind::PairwiseChoice),
            Self::FullRanking => Some(FeedbackKind::FullRanking),
            Self::PartialRanking => Some(FeedbackKind::PartialRanking),
        }
    }

    pub fn accepts(self, kind: FeedbackKind) -> bool {
        match self.choice_kind() {
            None => kind.is_bound(),
            Some(k) => k == kind,
        }
    }
}

/// How each round's query is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Querying {
    /// Dense sampling followed by robust sparsification.
    Native,
    /// Mutual-information selection from a fixed candidate pool.
    InfoGain,
    /// Uniform selection.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    pub total_units: u32,
    /// Charge every feedback event a single unit.
    pub uniform_units: bool,
    pub bound_cost: u32,
    pub pairwise_cost: u32,
    /// Points shown to ranking mechanisms.
    pub ranking_query_size: usize,
    /// Positions reported by a partial ranking.
    pub partial_ranking_top: usize,
    /// Candidate pool of the choice mechanisms.
    pub pool_size: usize,
    /// Posterior particles used by the information-gain estimate.
    pub info_gain_particles: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            total_units: 10,
            uniform_units: false,
            bound_cost: 2,
            pairwise_cost: 1,
            ranking_query_size: 4,
            partial_ranking_top: 3,
            pool_size: 128,
            info_gain_particles: 64,
        }
    }
}

impl BudgetConfig {
    /// Interaction units charged for one event of `kind` on a query of
    /// `query_len` points.
    pub fn cost(&self, kind: FeedbackKind, query_len: usize) -> u32 {
        if self.uniform_units {
            return 1;
        }
        match kind {
            FeedbackKind::PairwiseChoice => self.pairwise_cost,
            FeedbackKind::FullRanking | FeedbackKind::PartialRanking => query_len as u32,
            _ => self.bound_cost,
        }
    }

    /// Cost of the next event a mechanism would make.
    pub fn mechanism_cost(&self, mechanism: Mechanism) -> u32 {
        match mechanism.choice_kind() {
            None => self.cost(FeedbackKind::NoChange, 0),
            Some(FeedbackKind::PairwiseChoice) => self.cost(FeedbackKind::PairwiseChoice, 2),
            Some(kind) => self.cost(kind, self.ranking_query_size),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// A point is good when its utility ratio reaches `1 - delta`.
    pub delta: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { delta: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub problem: String,
    pub seed: u64,
    pub mechanism: Mechanism,
    pub querying: Querying,
    pub prior_soft: Vec<f64>,
    pub prior_hard: Vec<f64>,
    pub shf: ShfParams,
    /// Augmentation weight of the Chebyshev scalarization.
    pub gamma: f64,
    pub gp: GpConfig,
    pub preference: PreferenceConfig,
    pub query: QueryConfig,
    pub tmosh: TmoshConfig,
    pub budget: BudgetConfig,
    pub simulator: SimulatedDMConfig,
    pub metrics: MetricsConfig,
}

/// Per-objective prior bounds used when a config gives none.
pub const DEFAULT_PRIOR_SOFT: f64 = 0.7;
pub const DEFAULT_PRIOR_HARD: f64 = 0.1;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "branin_currin".into(),
            seed: 0,
            mechanism: Mechanism::ActiveMosh,
            querying: Querying::Native,
            prior_soft: Vec::new(),
            prior_hard: Vec::new(),
            shf: ShfParams::default(),
            gamma: 0.05,
            gp: GpConfig::default(),
            preference: PreferenceConfig::default(),
            query: QueryConfig::default(),
            tmosh: TmoshConfig::default(),
            budget: BudgetConfig::default(),
            simulator: SimulatedDMConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl RunConfig {
    /// Checks everything that does not need the problem instance.
    pub fn validate(&self) -> Result<()> {
        self.shf.validate()?;
        self.preference.validate()?;
        self.query.validate()?;
        self.tmosh.validate()?;
        self.simulator.validate()?;
        if !(self.gamma >= 0.0) {
            return Err(Error::invalid("gamma must be nonnegative"));
        }
        if self.budget.total_units == 0 {
            return Err(Error::invalid("interaction budget must be positive"));
        }
        if self.budget.ranking_query_size < 2 {
            return Err(Error::invalid("ranking queries need at least two points"));
        }
        if !(0.0..1.0).contains(&self.metrics.delta) {
            return Err(Error::invalid("delta must be in [0,1)"));
        }
        let ok = match (self.mechanism, self.querying) {
            (Mechanism::ActiveMosh | Mechanism::ActiveTmosh, Querying::InfoGain) => false,
            (Mechanism::Random, q) => q == Querying::Random,
            _ => true,
        };
        if !ok {
            return Err(Error::invalid(format!(
                "mechanism {:?} cannot be combined with {:?} querying",
                self.mechanism, self.querying
            )));
        }
        Ok(())
    }

    /// Prior bounds for `num_objectives` objectives, filling defaults.
    pub fn prior_bounds(&self, num_objectives: usize) -> (Vec<f64>, Vec<f64>) {
        let fill = |v: &Vec<f64>, d: f64| {
            if v.is_empty() {
                vec![d; num_objectives]
            } else {
                v.clone()
            }
        };
        (fill(&self.prior_soft, DEFAULT_PRIOR_SOFT), fill(&self.prior_hard, DEFAULT_PRIOR_HARD))
    }

    pub fn dense_settings(&self) -> DenseSettings<'_> {
        DenseSettings {
            shf: &self.shf,
            gamma: self.gamma,
            gp: &self.gp,
            preference: &self.preference,
            query: &self.query,
        }
    }

    /// Points shown per round by a choice mechanism.
    pub fn choice_query_size(&self) -> usize {
        match self.mechanism {
            Mechanism::Pairwise | Mechanism::Random => 2,
            _ => self.budget.ranking_query_size,
        }
    }
}

/// First 12 hex digits of the SHA-256 of a value's JSON encoding.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    let digest = Sha256::digest(&bytes);
    Ok(hex::encode(digest)[..12].to_string())
}
