//! Benchmark problems and the simulated decision-maker's hidden ground truth.
//!
//! Every problem is expressed in the maximization convention and normalized to
//! `[0,1]^L` by frozen per-objective ranges, so all runs share the same
//! normalization.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::shf::{ReferenceScale, Scalarizer, ShfParams, SoftHardBounds};
use crate::sobol;

/// Points in the frozen reference grid used for `y*` and utility ratios.
pub const REFERENCE_GRID_SIZE: usize = 4096;
const REFERENCE_GRID_SEED: u64 = 0x5eed_9e1d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Benchmark {
    BraninCurrin,
    Dtlz2 { objectives: usize },
    FourBarTruss,
}

/// Inputs and normalized outputs of the reference grid.
#[derive(Debug, Clone)]
pub struct ReferenceGrid {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

/// A deterministic multi-objective black box over a box-shaped input domain.
#[derive(Debug)]
pub struct ObjectiveProblem {
    name: String,
    benchmark: Benchmark,
    input_box: Vec<(f64, f64)>,
    /// Range of each sign-flipped raw objective.
    output_range: Vec<(f64, f64)>,
    grid: OnceLock<ReferenceGrid>,
}

impl ObjectiveProblem {
    /// Registry lookup: `branin_currin`, `dtlz2_<L>`, `four_bar_truss`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "branin_currin" => Ok(branin_currin()),
            "four_bar_truss" => Ok(four_bar_truss()),
            "brachytherapy" => Err(Error::UnknownProblem(
                "brachytherapy (needs clinical case data that is not distributed)".into(),
            )),
            other => match other.strip_prefix("dtlz2_").map(str::parse::<usize>) {
                Some(Ok(l)) => dtlz2(l),
                _ => Err(Error::UnknownProblem(other.to_string())),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn benchmark(&self) -> Benchmark {
        self.benchmark
    }

    pub fn input_dim(&self) -> usize {
        self.input_box.len()
    }

    pub fn num_objectives(&self) -> usize {
        self.output_range.len()
    }

    pub fn input_box(&self) -> &[(f64, f64)] {
        &self.input_box
    }

    pub fn output_range(&self) -> &[(f64, f64)] {
        &self.output_range
    }

    /// Objectives in the maximization convention, before normalization.
    pub fn evaluate_raw(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        match self.benchmark {
            BraninCurrin => {
                vec![-branin(x[0], x[1]), -currin(x[0], x[1])]
            }
            Dtlz2 { objectives } => dtlz2_raw(x, objectives).into_iter().map(|v| -v).collect(),
            FourBarTruss => {
                let (volume, displacement) = four_bar(x);
                vec![-volume, -displacement]
            }
        }
    }

    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.output_range)
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    /// Normalized objectives in `[0,1]^L`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.normalize(&self.evaluate_raw(x))
    }

    /// Map a point of the unit cube into the input box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.input_box)
            .map(|(t, (lo, hi))| lo + t.clamp(0.0, 1.0) * (hi - lo))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.input_box)
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.input_dim()
            && x
                .iter()
                .zip(&self.input_box)
                .all(|(v, (lo, hi))| *v >= *lo - 1e-12 && *v <= *hi + 1e-12)
    }

    /// The frozen Sobol reference grid, computed on first use.
    pub fn reference_grid(&self) -> &ReferenceGrid {
        self.grid.get_or_init(|| {
            let inputs: Vec<Vec<f64>> =
                sobol::points(REFERENCE_GRID_SIZE, self.input_dim(), REFERENCE_GRID_SEED)
                    .iter()
                    .map(|u| self.from_unit(u))
                    .collect();
            let outputs = par::map(&inputs, |x| self.evaluate(x));
            ReferenceGrid { inputs, outputs }
        })
    }
}

use Benchmark::{BraninCurrin, Dtlz2, FourBarTruss};

fn branin(a: f64, b: f64) -> f64 {
    let x0 = 15.0 * a - 5.0;
    let x1 = 15.0 * b;
    let t1 = x1 - 5.1 / (4.0 * PI * PI) * x0 * x0 + 5.0 / PI * x0 - 6.0;
    let t2 = 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x0.cos();
    t1 * t1 + t2 + 10.0
}

fn currin(a: f64, b: f64) -> f64 {
    // b = 0 gives exp(-inf) = 0, the limit of the expression
    let factor = 1.0 - (-1.0 / (2.0 * b)).exp();
    let numer = 2300.0 * a.powi(3) + 1900.0 * a * a + 2092.0 * a + 60.0;
    let denom = 100.0 * a.powi(3) + 500.0 * a * a + 4.0 * a + 20.0;
    factor * numer / denom
}

/// Minimization-form DTLZ2 with `objectives` outputs.
fn dtlz2_raw(x: &[f64], objectives: usize) -> Vec<f64> {
    let g: f64 = x[objectives - 1..].iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
    (0..objectives)
        .map(|i| {
            let mut f = 1.0 + g;
            for xj in &x[..objectives - 1 - i] {
                f *= (xj * FRAC_PI_2).cos();
            }
            if i > 0 {
                f *= (x[objectives - 1 - i] * FRAC_PI_2).sin();
            }
            f
        })
        .collect()
}

const TRUSS_FORCE: f64 = 10.0;
const TRUSS_SIGMA: f64 = 10.0;
const TRUSS_LENGTH: f64 = 200.0;
const TRUSS_MODULUS: f64 = 2.0e5;

/// Structural volume and joint displacement of the four-bar truss.
fn four_bar(x: &[f64]) -> (f64, f64) {
    let volume = TRUSS_LENGTH * (2.0 * x[0] + SQRT_2 * x[1] + x[2].sqrt() + x[3]);
    let displacement = (TRUSS_FORCE * TRUSS_LENGTH / TRUSS_MODULUS)
        * (2.0 / x[0] + 2.0 * SQRT_2 / x[1] - 2.0 * SQRT_2 / x[2] + 2.0 / x[3]);
    (volume, displacement)
}

// Exact extremes of the raw objectives over the input box.
const BRANIN_MIN: f64 = 0.397_887_357_729_738;
const BRANIN_MAX: f64 = 308.129_096_011_606_6;
const CURRIN_MIN: f64 = 1.180_408_020_862_099_7;
const CURRIN_MAX: f64 = 13.798_722_044_728_432;

/// Branin and Currin on `[0,1]^2`, both negated for maximization.
pub fn branin_currin() -> ObjectiveProblem {
    ObjectiveProblem {
        name: "branin_currin".into(),
        benchmark: BraninCurrin,
        input_box: vec![(0.0, 1.0); 2],
        output_range: vec![(-BRANIN_MAX, -BRANIN_MIN), (-CURRIN_MAX, -CURRIN_MIN)],
        grid: OnceLock::new(),
    }
}

/// DTLZ2 with `objectives` outputs and `objectives + 1` inputs.
pub fn dtlz2(objectives: usize) -> Result<ObjectiveProblem> {
    if objectives < 2 {
        return Err(Error::invalid(format!(
            "dtlz2 needs at least 2 objectives, got {objectives}"
        )));
    }
    // two distance variables, each contributing at most 0.25 to g
    let worst = 1.5;
    Ok(ObjectiveProblem {
        name: format!("dtlz2_{objectives}"),
        benchmark: Dtlz2 { objectives },
        input_box: vec![(0.0, 1.0); objectives + 1],
        output_range: vec![(-worst, 0.0); objectives],
        grid: OnceLock::new(),
    })
}

/// The four-bar truss design problem (volume, displacement), negated.
pub fn four_bar_truss() -> ObjectiveProblem {
    let a = TRUSS_FORCE / TRUSS_SIGMA;
    let input_box = vec![
        (a, 3.0 * a),
        (SQRT_2 * a, 3.0 * a),
        (SQRT_2 * a, 3.0 * a),
        (a, 3.0 * a),
    ];
    let (v_min, _) = four_bar(&[a, SQRT_2 * a, SQRT_2 * a, a]);
    let (v_max, _) = four_bar(&[3.0 * a; 4]);
    // displacement is decreasing in x0, x1, x3 and increasing in x2
    let (_, d_min) = four_bar(&[3.0 * a, 3.0 * a, SQRT_2 * a, 3.0 * a]);
    let (_, d_max) = four_bar(&[a, SQRT_2 * a, 3.0 * a, a]);
    ObjectiveProblem {
        name: "four_bar_truss".into(),
        benchmark: FourBarTruss,
        input_box,
        output_range: vec![(-v_max, -v_min), (-d_max, -d_min)],
        grid: OnceLock::new(),
    }
}

/// The simulated decision-maker's hidden preferences and ideal point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthDM {
    pub lambda_star: Vec<f64>,
    pub alpha_star_soft: Vec<f64>,
    pub alpha_star_hard: Vec<f64>,
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub feedback_noise_sigma: f64,
    /// Best and worst feasible scalarized value over the reference grid.
    pub reference: ReferenceScale,
    pub gamma: f64,
}

impl GroundTruthDM {
    pub fn bounds(&self) -> SoftHardBounds {
        SoftHardBounds::new(self.alpha_star_soft.clone(), self.alpha_star_hard.clone())
            .expect("ground truth bounds are valid by construction")
    }

    pub fn scalarizer(&self, params: &ShfParams) -> Scalarizer {
        Scalarizer::new(self.lambda_star.clone(), params, self.gamma)
            .expect("lambda_star is on the simplex")
    }

    /// Scalarized true utility of a normalized objective vector.
    pub fn value(&self, y: &[f64], params: &ShfParams) -> f64 {
        self.scalarizer(params).value_of(y, &self.bounds(), params)
    }
}

const MAX_TRUTH_ATTEMPTS: usize = 10_000;

/// Draw hidden bounds and preferences, then locate `y*` on the reference grid.
///
/// Draws whose bounds leave fewer than two distinct feasible grid values are
/// rejected and redrawn.
pub fn sample_ground_truth(
    problem: &ObjectiveProblem,
    seed: u64,
    params: &ShfParams,
    gamma: f64,
    feedback_noise_sigma: f64,
) -> Result<GroundTruthDM> {
    let grid = problem.reference_grid();
    let l = problem.num_objectives();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_TRUTH_ATTEMPTS {
        let hard: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..=0.95)).collect();
        let soft: Vec<f64> = hard
            .iter()
            .map(|&h| {
                let lo = (h + 0.05).min(1.0);
                rng.random_range(lo..=1.0)
            })
            .collect();
        let u: Vec<f64> = hard
            .iter()
            .zip(&soft)
            .map(|(&h, &s)| {
                let sd = (h - s).abs() / 3.0;
                let draw = Normal::new(s, sd).expect("finite sd").sample(&mut rng);
                draw.max(1e-6)
            })
            .collect();
        let total: f64 = u.iter().sum();
        let lambda: Vec<f64> = u.iter().map(|v| v / total).collect();
        let Ok(bounds) = SoftHardBounds::new(soft.clone(), hard.clone()) else {
            continue;
        };
        let scalarizer = Scalarizer::new(lambda.clone(), params, gamma)?;
        let values: Vec<f64> = grid
            .outputs
            .iter()
            .map(|y| scalarizer.value_of(y, &bounds, params))
            .collect();
        let Some(reference) = ReferenceScale::from_values(values.iter().copied(), params.utility_floor)
        else {
            continue;
        };
        if !(reference.shifted_best() > 0.0) {
            continue;
        }
        let best = argmax_first(&values);
        return Ok(GroundTruthDM {
            lambda_star: lambda,
            alpha_star_soft: soft,
            alpha_star_hard: hard,
            x_star: grid.inputs[best].clone(),
            y_star: grid.outputs[best].clone(),
            feedback_noise_sigma,
            reference,
            gamma,
        });
    }
    Err(Error::invalid(format!(
        "no ground truth with a feasible reference grid after {MAX_TRUTH_ATTEMPTS} draws"
    )))
}

/// Index of the first maximal value.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Branin in its native domain, written independently of the module.
    fn branin_native(x1: f64, x2: f64) -> f64 {
        let (a, b, c, r, s, t) = (
            1.0,
            5.1 / (4.0 * PI.powi(2)),
            5.0 / PI,
            6.0,
            10.0,
            1.0 / (8.0 * PI),
        );
        a * (x2 - b * x1.powi(2) + c * x1 - r).powi(2) + s * (1.0 - t) * x1.cos() + s
    }

    #[test]
    fn branin_currin_shape_and_optimum() {
        let p = branin_currin();
        assert_eq!((p.input_dim(), p.num_objectives()), (2, 2));
        let x = [(-PI + 5.0) / 15.0, 12.275 / 15.0];
        let raw = p.evaluate_raw(&x);
        assert!((-raw[0] - branin_native(-PI, 12.275)).abs() < 1e-9);
        assert!((-raw[0] - BRANIN_MIN).abs() < 1e-9);
        assert!((p.evaluate(&x)[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dtlz2_closed_form() {
        let p = dtlz2(3).unwrap();
        assert_eq!(p.input_dim(), 4);
        let raw = p.evaluate_raw(&[0.5; 4]);
        let c = (PI / 4.0).cos();
        let s = (PI / 4.0).sin();
        let expect = [c * c, c * s, s];
        for (r, e) in raw.iter().zip(expect) {
            assert!((-r - e).abs() < 1e-12);
        }
        let norm: f64 = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
        assert!(matches!(dtlz2(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dtlz2_pareto_points_lie_on_sphere() {
        let p = dtlz2(3).unwrap();
        for u in sobol::points(64, 2, 7) {
            let raw = p.evaluate_raw(&[u[0], u[1], 0.5, 0.5]);
            let norm: f64 = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    /// Second evaluation of the truss formulas, grouped differently.
    fn truss_reference(x: [f64; 4]) -> (f64, f64) {
        let vol = 200.0 * 2.0 * x[0] + 200.0 * 2f64.sqrt() * x[1] + 200.0 * x[2].powf(0.5) + 200.0 * x[3];
        let k = 10.0 * 200.0 / 200_000.0;
        let disp = 2.0 * k / x[0] + 2.0 * 2f64.sqrt() * k / x[1] - 2.0 * 2f64.sqrt() * k / x[2] + 2.0 * k / x[3];
        (vol, disp)
    }

    #[test]
    fn four_bar_truss_values() {
        let p = four_bar_truss();
        assert_eq!((p.input_dim(), p.num_objectives()), (4, 2));
        let x = [1.7, 2.1, 2.4, 1.3];
        let raw = p.evaluate_raw(&x);
        let (v, d) = truss_reference(x);
        assert!((-raw[0] - v).abs() < 1e-9);
        assert!((-raw[1] - d).abs() < 1e-12);
        let lo: Vec<f64> = p.input_box().iter().map(|b| b.0).collect();
        assert!((p.evaluate(&lo)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_outputs_in_unit_box() {
        for name in ["branin_currin", "dtlz2_3", "four_bar_truss"] {
            let p = ObjectiveProblem::by_name(name).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..10_000 {
                let u: Vec<f64> = (0..p.input_dim()).map(|_| rng.random::<f64>()).collect();
                let y = p.evaluate(&p.from_unit(&u));
                assert!(y.iter().all(|v| (0.0..=1.0).contains(v)), "{name}: {y:?}");
            }
        }
    }

    #[test]
    fn registry_rejects_unknown_and_clinical() {
        assert!(matches!(ObjectiveProblem::by_name("nope"), Err(Error::UnknownProblem(_))));
        let err = ObjectiveProblem::by_name("brachytherapy").unwrap_err();
        assert!(err.to_string().contains("clinical"));
    }

    #[test]
    fn ground_truth_contract() {
        let p = branin_currin();
        let params = ShfParams::default();
        for seed in 0..20 {
            let t = sample_ground_truth(&p, seed, &params, 0.05, 0.0).unwrap();
            assert!((t.lambda_star.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(t.lambda_star.iter().all(|&l| l > 0.0));
            for (h, s) in t.alpha_star_hard.iter().zip(&t.alpha_star_soft) {
                assert!(h < s);
            }
            // y* attains the grid maximum on a fresh rescan
            let best = p
                .reference_grid()
                .outputs
                .iter()
                .map(|y| t.value(y, &params))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(t.value(&t.y_star, &params), best);
        }
        let a = sample_ground_truth(&p, 11, &params, 0.05, 0.1).unwrap();
        let b = sample_ground_truth(&p, 11, &params, 0.05, 0.1).unwrap();
        assert_eq!(a, b);
    }
}
