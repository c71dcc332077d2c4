//! Metric traces, aggregation and the report writer.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::config_hash;
use crate::error::{Error, Result};
use crate::simulator::{ExperimentConfig, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub unit: u32,
    pub utility_ratio: f64,
}

/// Utility ratio of the accumulated observed set against interaction units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTrace {
    pub mechanism: String,
    pub seed: u64,
    pub points: Vec<TracePoint>,
}

impl MetricTrace {
    pub fn new(mechanism: impl Into<String>, seed: u64, points: Vec<TracePoint>) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].unit <= w[0].unit {
                return Err(Error::invalid("trace units must be strictly increasing"));
            }
        }
        if points.iter().any(|p| !(0.0..=1.0).contains(&p.utility_ratio)) {
            return Err(Error::invalid("utility ratios must lie in [0,1]"));
        }
        Ok(Self {
            mechanism: mechanism.into(),
            seed,
            points,
        })
    }

    /// Value in effect at `unit`: the last point at or before it, 0 before
    /// the first point.
    pub fn value_at(&self, unit: u32) -> f64 {
        self.points
            .iter()
            .take_while(|p| p.unit <= unit)
            .last()
            .map_or(0.0, |p| p.utility_ratio)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].utility_ratio >= w[0].utility_ratio)
    }
}

/// A round is good when its ratio reaches `1 - delta`.
pub fn good_flags(ratios: &[f64], delta: f64) -> Vec<bool> {
    ratios.iter().map(|&r| r >= 1.0 - delta).collect()
}

/// Iteration stop efficiency `1 - (M - M_G) / M`, where `M` is the number
/// of rounds and `M_G` the first (1-based) good round.
///
/// Sessions without a good round have no defined value.
pub fn ise(good: &[bool]) -> Result<f64> {
    if good.is_empty() {
        return Err(Error::invalid("ISE needs at least one round"));
    }
    let m = good.len() as f64;
    let first = good.iter().position(|&g| g).ok_or(Error::UndefinedIse)?;
    let m_g = (first + 1) as f64;
    let value = 1.0 - (m - m_g) / m;
    debug_assert!((value - m_g / m).abs() < 1e-12);
    Ok(value)
}

/// Trapezoidal area under a trace over its own units.
pub fn auc(trace: &MetricTrace) -> Result<f64> {
    if trace.points.len() < 2 {
        return Err(Error::invalid("AUC needs at least two points"));
    }
    Ok(trace
        .points
        .windows(2)
        .map(|w| 0.5 * (w[0].utility_ratio + w[1].utility_ratio) * f64::from(w[1].unit - w[0].unit))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mechanism: String,
    pub unit: u32,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// Sample mean and standard error (`sd / sqrt(n)`, `n - 1` in the sd).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-mechanism, per-unit mean and standard error over seeds. Traces on
/// different unit grids are forward-filled onto the union of units.
pub fn aggregate(traces: &[MetricTrace]) -> Result<Vec<Band>> {
    let mut groups: BTreeMap<&str, Vec<&MetricTrace>> = BTreeMap::new();
    for t in traces {
        groups.entry(t.mechanism.as_str()).or_default().push(t);
    }
    let mut out = Vec::new();
    for (mechanism, group) in groups {
        if group.len() < 2 {
            return Err(Error::invalid(format!("mechanism {mechanism} has fewer than two seeds")));
        }
        let mut units: Vec<u32> = group.iter().flat_map(|t| t.points.iter().map(|p| p.unit)).collect();
        units.sort_unstable();
        units.dedup();
        for unit in units {
            let values: Vec<f64> = group.iter().map(|t| t.value_at(unit)).collect();
            let (mean, se) = mean_se(&values);
            out.push(Band {
                mechanism: mechanism.to_string(),
                unit,
                mean,
                se,
                n: values.len(),
            });
        }
    }
    Ok(out)
}

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Schema the report summary is validated against.
pub const SUMMARY_SCHEMA: &str = include_str!("../schema/summary.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub label: String,
    pub seeds: usize,
    pub final_mean: f64,
    pub final_se: f64,
    pub auc_mean: f64,
    pub auc_se: f64,
    /// Mean over sessions with a defined value; `None` if there are none.
    pub ise_mean: Option<f64>,
    pub ise_undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub problem: String,
    pub arms: Vec<ArmSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingCell {
    pub problem: String,
    pub arm: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub schema_version: u32,
    pub experiment: String,
    pub config_hash: String,
    pub total_units: u32,
    pub delta: f64,
    /// Estimator behind info-gain querying.
    pub info_gain_estimator: String,
    pub problems: Vec<ProblemSummary>,
    pub missing: Vec<MissingCell>,
}

/// Files written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub curves_csv: PathBuf,
    pub auc_csv: PathBuf,
    pub ise_csv: PathBuf,
    pub charts: Vec<PathBuf>,
    pub summary_json: PathBuf,
}

/// Read `experiment.json` and `runs.json` from `run_dir` and write the
/// tables, one chart per problem and the summary, all named by the config
/// hash.
pub fn emit_report(run_dir: &Path) -> Result<ReportFiles> {
    let config: ExperimentConfig = serde_json::from_slice(&fs::read(run_dir.join("experiment.json"))?)?;
    let runs: Vec<RunRecord> = serde_json::from_slice(&fs::read(run_dir.join("runs.json"))?)?;
    let hash = config_hash(&config)?;
    let total = config.base.budget.total_units;
    let delta = config.base.metrics.delta;

    let mut missing = Vec::new();
    for problem in &config.problems {
        for arm in &config.arms {
            for &seed in &config.seeds {
                let found = runs
                    .iter()
                    .any(|r| &r.problem == problem && r.trace.mechanism == arm.label && r.trace.seed == seed);
                if !found {
                    missing.push(MissingCell {
                        problem: problem.clone(),
                        arm: arm.label.clone(),
                        seed,
                    });
                }
            }
        }
    }

    let mut curves = String::from("problem,mechanism,unit,mean,se,n\n");
    let mut auc_rows = String::from("problem,mechanism,seed,auc\n");
    let mut ise_rows = String::from("problem,mechanism,seed,ise\n");
    let mut charts = Vec::new();
    let mut problems = Vec::new();
    for problem in &config.problems {
        let mut arms = Vec::new();
        let mut chart_bands: Vec<(String, Vec<Band>)> = Vec::new();
        for arm in &config.arms {
            let group: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| &r.problem == problem && r.trace.mechanism == arm.label)
                .collect();
            if group.is_empty() {
                continue;
            }
            let filled: Vec<MetricTrace> = group.iter().map(|r| fill_units(&r.trace, total)).collect();
            let mut bands = Vec::new();
            for unit in 1..=total {
                let values: Vec<f64> = filled.iter().map(|t| t.value_at(unit)).collect();
                let (mean, se) = mean_se(&values);
                let _ = writeln!(curves, "{problem},{},{unit},{mean},{se},{}", arm.label, values.len());
                bands.push(Band {
                    mechanism: arm.label.clone(),
                    unit,
                    mean,
                    se,
                    n: values.len(),
                });
            }
            let mut aucs = Vec::new();
            let mut ises = Vec::new();
            let mut undefined = 0;
            for (r, t) in group.iter().zip(&filled) {
                let a = auc(t)?;
                aucs.push(a);
                let _ = writeln!(auc_rows, "{problem},{},{},{a}", arm.label, r.trace.seed);
                match ise(&good_flags(&r.event_ratios, delta)) {
                    Ok(v) => {
                        ises.push(v);
                        let _ = writeln!(ise_rows, "{problem},{},{},{v}", arm.label, r.trace.seed);
                    }
                    Err(_) => {
                        undefined += 1;
                        let _ = writeln!(ise_rows, "{problem},{},{},", arm.label, r.trace.seed);
                    }
                }
            }
            let finals: Vec<f64> = filled.iter().map(|t| t.value_at(total)).collect();
            let (final_mean, final_se) = mean_se(&finals);
            let (auc_mean, auc_se) = mean_se(&aucs);
            arms.push(ArmSummary {
                label: arm.label.clone(),
                seeds: group.len(),
                final_mean,
                final_se,
                auc_mean,
                auc_se,
                ise_mean: (!ises.is_empty()).then(|| mean_se(&ises).0),
                ise_undefined: undefined,
            });
            chart_bands.push((arm.label.clone(), bands));
        }
        let path = run_dir.join(format!("report_{hash}_{problem}.svg"));
        fs::write(&path, svg_chart(problem, total, &chart_bands))?;
        charts.push(path);
        problems.push(ProblemSummary {
            problem: problem.clone(),
            arms,
        });
    }

    let summary = ReportSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        experiment: config.name.clone(),
        config_hash: hash.clone(),
        total_units: total,
        delta,
        info_gain_estimator: "bald_plackett_luce".into(),
        problems,
        missing,
    };
    let files = ReportFiles {
        curves_csv: run_dir.join(format!("report_{hash}_curves.csv")),
        auc_csv: run_dir.join(format!("report_{hash}_auc.csv")),
        ise_csv: run_dir.join(format!("report_{hash}_ise.csv")),
        charts,
        summary_json: run_dir.join(format!("report_{hash}_summary.json")),
    };
    fs::write(&files.curves_csv, curves)?;
    fs::write(&files.auc_csv, auc_rows)?;
    fs::write(&files.ise_csv, ise_rows)?;
    fs::write(&files.summary_json, serde_json::to_string_pretty(&summary)?)?;
    Ok(files)
}

/// Trace with a point at every unit `1..=total`.
pub fn fill_units(trace: &MetricTrace, total: u32) -> MetricTrace {
    MetricTrace {
        mechanism: trace.mechanism.clone(),
        seed: trace.seed,
        points: (1..=total)
            .map(|unit| TracePoint {
                unit,
                utility_ratio: trace.value_at(unit),
            })
            .collect(),
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Line chart with one mean line and one standard-error band per arm, on
/// fixed axes `[1, total] x [0, 1]`.
fn svg_chart(title: &str, total: u32, arms: &[(String, Vec<Band>)]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 50.0, 160.0, 30.0, 40.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let span = f64::from(total.max(2) - 1);
    let sx = |u: u32| left + pw * f64::from(u.saturating_sub(1)) / span;
    let sy = |v: f64| top + ph * (1.0 - v.clamp(0.0, 1.0));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" font-size="14">{title}</text>"#, left);
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for i in 0..=4 {
        let v = f64::from(i) / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" font-size="10" text-anchor="end">{v:.2}</text>"#,
            left - 4.0,
            sy(v) + 3.0
        );
    }
    for u in 1..=total {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" font-size="10" text-anchor="middle">{u}</text>"#,
            sx(u),
            top + ph + 14.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">interaction units</text>"#,
        left + pw / 2.0,
        h - 6.0
    );
    for (k, (label, bands)) in arms.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let upper: Vec<String> = bands
            .iter()
            .map(|b| format!("{:.2},{:.2}", sx(b.unit), sy(b.mean + b.se)))
            .collect();
        let lower: Vec<String> = bands
            .iter()
            .rev()
            .map(|b| format!("{:.2},{:.2}", sx(b.unit), sy(b.mean - b.se)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = bands
            .iter()
            .map(|b| format!("{:.2},{:.2}", sx(b.unit), sy(b.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = top + 14.0 * k as f64 + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            left + pw + 10.0,
            left + pw + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11">{label}</text>"#,
            left + pw + 34.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
