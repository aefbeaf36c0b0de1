//! Batch statistics over trial outcomes: reachability, path length, safety,
//! planning-time distribution, and the bacteria evaluation-count model.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor_sim::{TrialOutcome, TrialStatus};

/// Version tag written at the top of summary CSV files.
pub const SUMMARY_CSV_VERSION: u32 = 1;

/// Fraction of trials that reached the goal.
pub fn reachability(outcomes: &[TrialOutcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Domain("reachability of an empty batch".into()));
    }
    let ok = outcomes.iter().filter(|o| o.status == TrialStatus::Reached).count();
    Ok(ok as f64 / outcomes.len() as f64)
}

fn successes(outcomes: &[TrialOutcome]) -> impl Iterator<Item = &TrialOutcome> {
    outcomes.iter().filter(|o| o.status == TrialStatus::Reached)
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean walked length over successful trials.
pub fn mean_path_length(outcomes: &[TrialOutcome]) -> Option<f64> {
    mean(successes(outcomes).map(|o| o.walked_length))
}

/// What the safety distance is measured to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SafetyMode {
    /// Obstacle center.
    #[default]
    Center,
    /// Obstacle rim (center distance minus radius).
    Edge,
}

/// Per successful trial, the mean over detected obstacles of the closest
/// approach; then the mean over those trials. `None` when no successful trial
/// detected anything.
pub fn safety(outcomes: &[TrialOutcome], mode: SafetyMode) -> Option<f64> {
    mean(successes(outcomes).filter_map(|o| {
        mean(o.safety_samples.iter().map(|s| match mode {
            SafetyMode::Center => s.min_distance,
            SafetyMode::Edge => s.min_distance - s.radius,
        }))
    }))
}

/// Potential evaluations a bacteria planner needs for a path of
/// `path_length`: `N_B * M / rho_b`, rounded up.
pub fn rapf_eval_count(n_bacteria: usize, path_length: f64, rho_b: f64) -> u64 {
    let exact = n_bacteria as f64 * path_length / rho_b;
    // Absorb representation error so that e.g. 8 * 3 / 0.05 is 480, not 481.
    (exact - 1e-9 * exact.abs().max(1.0)).ceil().max(0.0) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    /// Values above `p75 + 1.5 * IQR`.
    pub outliers: usize,
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn quantiles(values: &[f64]) -> Option<Quantiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let p25 = quantile_sorted(&v, 0.25);
    let p50 = quantile_sorted(&v, 0.5);
    let p75 = quantile_sorted(&v, 0.75);
    let fence = p75 + 1.5 * (p75 - p25);
    Some(Quantiles {
        p25,
        p50,
        p75,
        outliers: v.iter().filter(|&&x| x > fence).count(),
    })
}

/// One (planner, scenario) cell of a benchmark.
///
/// Planning time, path length, safety and evaluation counts are averaged over
/// successful trials only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub planner: String,
    pub scenario: String,
    pub trials: usize,
    pub successes: usize,
    pub reachability: f64,
    /// Mean per-trial total planning time, seconds.
    pub mean_planning_time: Option<f64>,
    /// Mean time of a single planner call, seconds.
    pub mean_replan_time: Option<f64>,
    pub planning_time_quantiles: Option<Quantiles>,
    pub mean_path_length: Option<f64>,
    pub mean_safety: Option<f64>,
    pub mean_potential_evals: Option<f64>,
    pub status_counts: StatusCounts,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatusCounts {
    pub reached: usize,
    pub collision: usize,
    pub timeout: usize,
    pub nopath: usize,
}

pub fn summarize(outcomes: &[TrialOutcome], planner: &str, scenario: &str) -> Result<BatchSummary> {
    let reach = reachability(outcomes)?;
    let mut counts = StatusCounts::default();
    for o in outcomes {
        match o.status {
            TrialStatus::Reached => counts.reached += 1,
            TrialStatus::Collision => counts.collision += 1,
            TrialStatus::Timeout => counts.timeout += 1,
            TrialStatus::NoPath => counts.nopath += 1,
        }
    }
    let times: Vec<f64> = successes(outcomes).map(|o| o.planning_time_total).collect();
    let replans: usize = successes(outcomes).map(|o| o.replan_count).sum();
    Ok(BatchSummary {
        planner: planner.to_string(),
        scenario: scenario.to_string(),
        trials: outcomes.len(),
        successes: counts.reached,
        reachability: reach,
        mean_planning_time: mean(times.iter().copied()),
        mean_replan_time: (replans > 0).then(|| times.iter().sum::<f64>() / replans as f64),
        planning_time_quantiles: quantiles(&times),
        mean_path_length: mean_path_length(outcomes),
        mean_safety: safety(outcomes, SafetyMode::Center),
        mean_potential_evals: mean(successes(outcomes).map(|o| o.potential_evals as f64)),
        status_counts: counts,
    })
}

fn fmt_opt(v: Option<f64>, scale: f64, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.*}", digits, x * scale))
}

/// Planners as rows; reachability, mean planning time and mean path length per
/// scenario as column groups.
pub fn render_table(summaries: &[BatchSummary]) -> String {
    let mut planners: Vec<&str> = Vec::new();
    let mut scenarios: Vec<&str> = Vec::new();
    for s in summaries {
        if !planners.contains(&s.planner.as_str()) {
            planners.push(&s.planner);
        }
        if !scenarios.contains(&s.scenario.as_str()) {
            scenarios.push(&s.scenario);
        }
    }
    let cell = |p: &str, sc: &str| summaries.iter().find(|s| s.planner == p && s.scenario == sc);
    let groups: [(&str, fn(&BatchSummary) -> String); 3] = [
        ("Reachability [%]", |s| format!("{:.1}", 100.0 * s.reachability)),
        ("Mean planning time [ms]", |s| fmt_opt(s.mean_planning_time, 1e3, 2)),
        ("Mean path length [m]", |s| fmt_opt(s.mean_path_length, 1.0, 2)),
    ];
    let w = 10;
    let group_w = w * scenarios.len();
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "");
    for (title, _) in &groups {
        let _ = write!(out, " | {:^group_w$}", title);
    }
    out.push('\n');
    let _ = write!(out, "{:<10}", "Planner");
    for _ in &groups {
        out.push_str(" | ");
        for sc in &scenarios {
            let _ = write!(out, "{:>w$}", sc);
        }
    }
    out.push('\n');
    out.push_str(&"-".repeat(10 + groups.len() * (3 + group_w)));
    out.push('\n');
    for p in &planners {
        let _ = write!(out, "{:<10}", p);
        for (_, f) in &groups {
            out.push_str(" | ");
            for sc in &scenarios {
                let v = cell(p, sc).map_or_else(|| "-".to_string(), f);
                let _ = write!(out, "{:>w$}", v);
            }
        }
        out.push('\n');
    }
    out
}

pub const SUMMARY_CSV_HEADER: &str = "planner,scenario,trials,successes,reachability,\
mean_planning_time_s,mean_replan_time_s,planning_time_p25_s,planning_time_p50_s,planning_time_p75_s,\
planning_time_outliers,mean_path_length_m,mean_safety_m,mean_potential_evals,\
reached,collision,timeout,nopath";

/// One row per (planner, scenario); absent values are empty fields.
pub fn write_summary_csv<W: Write>(summaries: &[BatchSummary], mut w: W) -> std::io::Result<()> {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    writeln!(w, "# rapf summary v{SUMMARY_CSV_VERSION}")?;
    writeln!(w, "{SUMMARY_CSV_HEADER}")?;
    for s in summaries {
        let q = s.planning_time_quantiles;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.planner,
            s.scenario,
            s.trials,
            s.successes,
            s.reachability,
            opt(s.mean_planning_time),
            opt(s.mean_replan_time),
            opt(q.map(|q| q.p25)),
            opt(q.map(|q| q.p50)),
            opt(q.map(|q| q.p75)),
            q.map_or_else(String::new, |q| q.outliers.to_string()),
            opt(s.mean_path_length),
            opt(s.mean_safety),
            opt(s.mean_potential_evals),
            s.status_counts.reached,
            s.status_counts.collision,
            s.status_counts.timeout,
            s.status_counts.nopath,
        )?;
    }
    Ok(())
}
