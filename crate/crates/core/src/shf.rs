//! Soft-hard utility functions (SHFs), augmented Chebyshev scalarization,
//! and the SHF utility ratio.
//!
//! All objective values are in normalized, maximization-oriented units. A
//! value below its hard bound is infeasible and maps to
//! [`ShfParams::utility_floor`], a large negative sentinel that stands in for
//! negative infinity while keeping arithmetic finite and ordered.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-objective soft (aspirational) and hard (non-negotiable) bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftHardBounds {
    soft: Vec<f64>,
    hard: Vec<f64>,
}

impl SoftHardBounds {
    /// Rejects mismatched lengths and any `hard >= soft`.
    pub fn new(soft: Vec<f64>, hard: Vec<f64>) -> Result<Self> {
        if soft.len() != hard.len() || soft.is_empty() {
            return Err(Error::invalid(format!(
                "soft ({}) and hard ({}) bounds must have equal nonzero length",
                soft.len(),
                hard.len()
            )));
        }
        for (&s, &h) in soft.iter().zip(&hard) {
            check_pair(h, s)?;
        }
        Ok(Self { soft, hard })
    }

    /// Caller guarantees `hard < soft` componentwise.
    pub(crate) fn from_parts_unchecked(soft: Vec<f64>, hard: Vec<f64>) -> Self {
        debug_assert!(soft.iter().zip(&hard).all(|(s, h)| h < s));
        Self { soft, hard }
    }

    pub fn soft(&self) -> &[f64] {
        &self.soft
    }

    pub fn hard(&self) -> &[f64] {
        &self.hard
    }

    pub fn len(&self) -> usize {
        self.soft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soft.is_empty()
    }

    /// Bounds with the hard bound of `dim` lowered by `epsilon`.
    pub fn relax_hard(&self, dim: usize, epsilon: f64) -> Self {
        let mut hard = self.hard.clone();
        hard[dim] -= epsilon;
        Self {
            soft: self.soft.clone(),
            hard,
        }
    }

    /// True when every component meets its hard bound.
    pub fn is_feasible(&self, y: &[f64]) -> bool {
        y.iter().zip(&self.hard).all(|(v, h)| v >= h)
    }

    /// Sum of hard-bound shortfalls.
    pub fn violation(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(&self.hard)
            .map(|(v, h)| (h - v).max(0.0))
            .sum()
    }
}

fn check_pair(hard: f64, soft: f64) -> Result<()> {
    if !(hard < soft) || !hard.is_finite() || !soft.is_finite() {
        return Err(Error::InvalidBounds { hard, soft });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShfParams {
    /// Fraction of the hard-to-soft utility rate kept between the soft bound
    /// and the saturation point.
    pub beta: f64,
    /// Saturation multiplier: `alpha_tau = hard + zeta * (soft - hard)`.
    pub zeta: f64,
    pub utility_floor: f64,
}

impl Default for ShfParams {
    fn default() -> Self {
        Self {
            beta: 0.25,
            zeta: 2.0,
            utility_floor: -1.0e12,
        }
    }
}

impl ShfParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("beta {} not in [0,1]", self.beta)));
        }
        if !(self.zeta > 1.0) {
            return Err(Error::invalid(format!("zeta {} must exceed 1", self.zeta)));
        }
        Ok(())
    }

    /// Utility reached at and beyond the saturation point; the per-objective
    /// ideal point of the scalarizer.
    pub fn saturated_utility(&self) -> f64 {
        // normalized alpha_tau is zeta / 2, normalized soft bound is 1 / 2
        1.0 + 2.0 * self.beta * (self.zeta / 2.0 - 0.5)
    }

    pub fn is_floor(&self, value: f64) -> bool {
        value <= self.utility_floor
    }
}

/// Soft-hard normalization: 0 at the hard bound, 0.5 at the soft bound.
pub fn shf_normalize(z: f64, hard: f64, soft: f64) -> Result<f64> {
    check_pair(hard, soft)?;
    Ok(normalize_unchecked(z, hard, soft))
}

#[inline]
fn normalize_unchecked(z: f64, hard: f64, soft: f64) -> f64 {
    (z - hard) / (soft - hard) * 0.5
}

/// Piecewise soft-hard utility of a single objective value.
pub fn shf_utility(f: f64, hard: f64, soft: f64, params: &ShfParams) -> Result<f64> {
    check_pair(hard, soft)?;
    Ok(utility_unchecked(f, hard, soft, params))
}

#[inline]
fn utility_unchecked(f: f64, hard: f64, soft: f64, params: &ShfParams) -> f64 {
    let tau = hard + params.zeta * (soft - hard);
    if f >= tau {
        params.saturated_utility()
    } else if f > soft {
        1.0 + 2.0 * params.beta * (normalize_unchecked(f, hard, soft) - 0.5)
    } else if f == soft {
        1.0
    } else if f > hard {
        2.0 * normalize_unchecked(f, hard, soft)
    } else if f == hard {
        0.0
    } else {
        params.utility_floor
    }
}

/// Componentwise SHF utilities of an objective vector.
pub fn shf_vector(y: &[f64], bounds: &SoftHardBounds, params: &ShfParams) -> Result<Vec<f64>> {
    if y.len() != bounds.len() {
        return Err(Error::invalid(format!(
            "objective vector has {} entries, bounds have {}",
            y.len(),
            bounds.len()
        )));
    }
    Ok(shf_vector_unchecked(y, bounds, params))
}

/// [`shf_vector`] for callers that already guarantee matching lengths.
pub(crate) fn shf_vector_unchecked(
    y: &[f64],
    bounds: &SoftHardBounds,
    params: &ShfParams,
) -> Vec<f64> {
    y.iter()
        .zip(bounds.hard.iter().zip(&bounds.soft))
        .map(|(&f, (&h, &s))| utility_unchecked(f, h, s, params))
        .collect()
}

/// Augmented Chebyshev scalarization in utility space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalarizer {
    pub lambda: Vec<f64>,
    pub ideal_point: Vec<f64>,
    pub gamma: f64,
    pub utility_floor: f64,
}

impl Scalarizer {
    /// Ideal point fixed at the saturated utility of every objective.
    pub fn new(lambda: Vec<f64>, params: &ShfParams, gamma: f64) -> Result<Self> {
        let sum: f64 = lambda.iter().sum();
        if lambda.iter().any(|&l| l < 0.0 || !l.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("lambda {lambda:?} is not on the simplex")));
        }
        let ideal_point = vec![params.saturated_utility(); lambda.len()];
        Ok(Self {
            lambda,
            ideal_point,
            gamma,
            utility_floor: params.utility_floor,
        })
    }

    pub fn scalarize(&self, u: &[f64]) -> f64 {
        scalarize(u, self)
    }

    /// Scalarized SHF utility of a raw objective vector.
    pub fn value_of(&self, y: &[f64], bounds: &SoftHardBounds, params: &ShfParams) -> f64 {
        self.scalarize(&shf_vector_unchecked(y, bounds, params))
    }
}

/// `-max_l lambda_l |u_l - z_l| - gamma * sum_l |u_l - z_l|`, or the utility
/// floor when any component is infeasible.
pub fn scalarize(u: &[f64], s: &Scalarizer) -> f64 {
    if u.iter().any(|&v| v <= s.utility_floor) {
        return s.utility_floor;
    }
    let mut worst = f64::NEG_INFINITY;
    let mut total = 0.0;
    for ((&v, &z), &l) in u.iter().zip(&s.ideal_point).zip(&s.lambda) {
        let dev = (v - z).abs();
        worst = worst.max(l * dev);
        total += dev;
    }
    -worst - s.gamma * total
}

/// Reference values that turn scalarized utilities into a ratio in `[0,1]`.
///
/// `floor` is the worst feasible scalarized value over the reference set and
/// `best` the best one; ratios are `(s - floor) / (best - floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceScale {
    pub best: f64,
    pub floor: f64,
}

impl ReferenceScale {
    /// Scale from the scalarized values of a reference set. `None` when the
    /// set holds no feasible value.
    pub fn from_values(values: impl IntoIterator<Item = f64>, utility_floor: f64) -> Option<Self> {
        let mut best = f64::NEG_INFINITY;
        let mut floor = f64::INFINITY;
        for v in values {
            if v > utility_floor {
                best = best.max(v);
                floor = floor.min(v);
            }
        }
        best.is_finite().then_some(Self { best, floor })
    }

    pub fn shifted_best(&self) -> f64 {
        self.best - self.floor
    }
}

/// Shifted best of a candidate set divided by the shifted reference best.
///
/// `candidates` are utility vectors. Infeasible candidates are ignored; a set
/// with no feasible member scores 0.
pub fn utility_ratio(candidates: &[Vec<f64>], reference: &ReferenceScale, s: &Scalarizer) -> Result<f64> {
    let denom = reference.shifted_best();
    if !(denom > 0.0) {
        return Err(Error::DegenerateReference(denom));
    }
    let best = candidates
        .iter()
        .map(|u| scalarize(u, s))
        .filter(|&v| v > s.utility_floor)
        .fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Ok(0.0);
    }
    Ok(((best - reference.floor) / denom).clamp(0.0, 1.0))
}
