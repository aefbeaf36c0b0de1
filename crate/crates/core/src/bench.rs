//! Monte Carlo benchmark: every (scenario, planner) cell runs the same seeded
//! trials, in parallel, and is summarized. A JSON manifest records enough to
//! re-run and verify every trial.
//!
//! Trial `i` of every cell uses seed `base_seed + i`; for preset scenarios that
//! seed also generates the terrain, so all planners see identical maps.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Path, Scenario};
use crate::metrics::{render_table, summarize, write_summary_csv, BatchSummary};
use crate::params::PlannerParams;
use crate::planners::PlannerKind;
use crate::sensor_sim::{run_trial, SensorModel, TrialConfig, TrialOutcome};
use crate::terrain::{generate_scenario, ScenarioSpec};

pub const MANIFEST_VERSION: u32 = 1;
pub const TRIALS_CSV_VERSION: u32 = 1;
pub const DEFAULT_TRIALS: usize = 100;
pub const FULL_TRIALS: usize = 500;

/// A preset name (`A`, `B`, `C`, ...) regenerated per trial, or a fixed
/// scenario file shared by all trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioSource {
    Preset(String),
    File(PathBuf),
}

impl ScenarioSource {
    /// Treats anything that names an existing file as a file, otherwise a
    /// preset.
    pub fn parse(s: &str) -> Self {
        if FsPath::new(s).is_file() {
            ScenarioSource::File(PathBuf::from(s))
        } else {
            ScenarioSource::Preset(s.to_string())
        }
    }

    pub fn name(&self) -> String {
        match self {
            ScenarioSource::Preset(p) => p.clone(),
            ScenarioSource::File(f) => f
                .file_stem()
                .map_or_else(|| f.display().to_string(), |s| s.to_string_lossy().into_owned()),
        }
    }

    fn resolve(&self) -> Result<Resolved> {
        Ok(match self {
            ScenarioSource::Preset(p) => Resolved::Preset(ScenarioSpec::preset(p)?),
            ScenarioSource::File(f) => Resolved::Fixed(Scenario::load(f)?),
        })
    }
}

enum Resolved {
    Preset(ScenarioSpec),
    Fixed(Scenario),
}

impl Resolved {
    fn scenario(&self, seed: u64) -> Result<Scenario> {
        match self {
            Resolved::Preset(spec) => generate_scenario(spec, seed),
            Resolved::Fixed(s) => Ok(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenarios: Vec<ScenarioSource>,
    pub planners: Vec<PlannerKind>,
    pub trials_per_cell: usize,
    pub base_seed: u64,
    pub params: PlannerParams,
    pub sensor: SensorModel,
    pub omniscient: bool,
    pub walk_budget: usize,
    /// Worker threads; 0 uses all available cores.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let trial = TrialConfig::default();
        Self {
            scenarios: ["A", "B", "C"].map(|s| ScenarioSource::Preset(s.into())).to_vec(),
            planners: PlannerKind::ALL.to_vec(),
            trials_per_cell: DEFAULT_TRIALS,
            base_seed: 0,
            params: PlannerParams::default(),
            sensor: trial.sensor,
            omniscient: trial.omniscient,
            walk_budget: trial.walk_budget,
            workers: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_cell == 0 {
            return Err(Error::Domain("trials_per_cell must be at least 1".into()));
        }
        if self.scenarios.is_empty() || self.planners.is_empty() {
            return Err(Error::Empty("scenario or planner list"));
        }
        self.params.validate()?;
        SensorModel::new(self.sensor.range, self.sensor.fov)?;
        Ok(())
    }

    fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            sensor: self.sensor,
            omniscient: self.omniscient,
            walk_budget: self.walk_budget,
            record_trace: false,
            noise: None,
        }
    }

    pub fn seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }
}

/// One executed trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub planner: PlannerKind,
    pub trial: usize,
    pub seed: u64,
    pub scenario_hash: String,
    pub outcome: TrialOutcome,
}

impl TrialRecord {
    pub fn walked_hash(&self) -> String {
        path_hash(&self.outcome.walked)
    }
}

/// SHA-256 over the little-endian bit patterns of every walked coordinate.
pub fn path_hash(path: &Path) -> String {
    let mut h = Sha256::new();
    for p in path.waypoints() {
        h.update(p.x.to_bits().to_le_bytes());
        h.update(p.y.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<BatchSummary>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

struct Job {
    scenario_idx: usize,
    trial: usize,
    planner: PlannerKind,
}

/// Runs every trial of every cell. Records come back ordered by scenario,
/// planner, then trial index, independent of scheduling.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let resolved: Vec<Resolved> = config.scenarios.iter().map(ScenarioSource::resolve).collect::<Result<_>>()?;
    let names: Vec<String> = config.scenarios.iter().map(ScenarioSource::name).collect();
    let trial_cfg = config.trial_config();

    let pool = pool(config.workers)?;
    let maps: Vec<Vec<Scenario>> = pool.install(|| {
        resolved
            .par_iter()
            .map(|r| {
                (0..config.trials_per_cell)
                    .into_par_iter()
                    .map(|i| r.scenario(config.seed(i)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut jobs = Vec::new();
    for scenario_idx in 0..resolved.len() {
        for &planner in &config.planners {
            for trial in 0..config.trials_per_cell {
                jobs.push(Job { scenario_idx, trial, planner });
            }
        }
    }
    let records: Vec<TrialRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let scenario = &maps[j.scenario_idx][j.trial];
                let seed = config.seed(j.trial);
                let outcome = run_trial(scenario, j.planner, &config.params, &trial_cfg, seed)?;
                Ok(TrialRecord {
                    scenario: names[j.scenario_idx].clone(),
                    planner: j.planner,
                    trial: j.trial,
                    seed,
                    scenario_hash: scenario.content_hash(),
                    outcome,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut summaries = Vec::new();
    for name in &names {
        for &planner in &config.planners {
            let cell: Vec<TrialOutcome> = records
                .iter()
                .filter(|r| &r.scenario == name && r.planner == planner)
                .map(|r| r.outcome.clone())
                .collect();
            summaries.push(summarize(&cell, planner.name(), name)?);
        }
    }
    Ok(BenchReport {
        config: config.clone(),
        records,
        summaries,
    })
}

impl BenchReport {
    pub fn summary(&self, planner: PlannerKind, scenario: &str) -> Option<&BatchSummary> {
        self.summaries
            .iter()
            .find(|s| s.planner == planner.name() && s.scenario == scenario)
    }

    /// Summary table with display labels.
    pub fn table(&self) -> String {
        let labelled: Vec<BatchSummary> = self
            .summaries
            .iter()
            .map(|s| {
                let mut s = s.clone();
                if let Ok(k) = s.planner.parse::<PlannerKind>() {
                    s.planner = k.label().to_string();
                }
                s
            })
            .collect();
        render_table(&labelled)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            version: MANIFEST_VERSION,
            config: self.config.clone(),
            trials: self
                .records
                .iter()
                .map(|r| ManifestEntry {
                    scenario: r.scenario.clone(),
                    planner: r.planner,
                    trial: r.trial,
                    seed: r.seed,
                    scenario_hash: r.scenario_hash.clone(),
                    status: r.outcome.status.name().to_string(),
                    walked_hash: r.walked_hash(),
                    potential_evals: r.outcome.potential_evals,
                    replan_count: r.outcome.replan_count,
                })
                .collect(),
        }
    }

    /// Per-trial rows; the last two columns are wall-clock measurements.
    pub fn write_trials_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# rapf trials v{TRIALS_CSV_VERSION}")?;
        writeln!(
            w,
            "scenario,planner,trial,seed,scenario_hash,status,walked_length,steps,replan_count,\
artificial_count,potential_evals,walked_hash,planning_time_total_s,mean_replan_time_s"
        )?;
        for r in &self.records {
            let o = &r.outcome;
            let per_replan = if o.replan_count > 0 {
                o.planning_time_total / o.replan_count as f64
            } else {
                0.0
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.scenario,
                r.planner,
                r.trial,
                r.seed,
                r.scenario_hash,
                o.status.name(),
                o.walked_length,
                o.steps,
                o.replan_count,
                o.artificial_count,
                o.potential_evals,
                r.walked_hash(),
                o.planning_time_total,
                per_replan,
            )?;
        }
        Ok(())
    }

    /// Writes `manifest.json`, `summary.txt`, `summary.csv` and `trials.csv`.
    pub fn write_outputs(&self, dir: &FsPath) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&self.manifest())?)?;
        fs::write(dir.join("summary.txt"), self.table())?;
        let mut csv = Vec::new();
        write_summary_csv(&self.summaries, &mut csv)?;
        fs::write(dir.join("summary.csv"), csv)?;
        let mut trials = Vec::new();
        self.write_trials_csv(&mut trials)?;
        fs::write(dir.join("trials.csv"), trials)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scenario: String,
    pub planner: PlannerKind,
    pub trial: usize,
    pub seed: u64,
    pub scenario_hash: String,
    pub status: String,
    pub walked_hash: String,
    pub potential_evals: u64,
    pub replan_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config: BenchConfig,
    pub trials: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &FsPath) -> Result<Self> {
        let m: Manifest = serde_json::from_str(&fs::read_to_string(path)?)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Format(format!("manifest version {} (expected {MANIFEST_VERSION})", m.version)));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub scenario: String,
    pub planner: PlannerKind,
    pub trial: usize,
    pub field: &'static str,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/trial {}: {} expected {} got {}",
            self.scenario, self.planner, self.trial, self.field, self.expected, self.actual
        )
    }
}

/// Re-runs every trial listed in the manifest and reports any difference in
/// scenario, status, walked path, evaluation count or replan count.
pub fn replay(manifest: &Manifest, workers: usize) -> Result<Vec<Mismatch>> {
    let config = &manifest.config;
    let trial_cfg = config.trial_config();
    let sources: Vec<(String, Resolved)> = config
        .scenarios
        .iter()
        .map(|s| Ok((s.name(), s.resolve()?)))
        .collect::<Result<_>>()?;
    let pool = pool(workers)?;
    let found: Vec<Vec<Mismatch>> = pool.install(|| {
        manifest
            .trials
            .par_iter()
            .map(|e| -> Result<Vec<Mismatch>> {
                let resolved = sources
                    .iter()
                    .find(|(n, _)| *n == e.scenario)
                    .map(|(_, r)| r)
                    .ok_or_else(|| Error::Format(format!("scenario {} not in manifest config", e.scenario)))?;
                let scenario = resolved.scenario(e.seed)?;
                let outcome = run_trial(&scenario, e.planner, &config.params, &trial_cfg, e.seed)?;
                let mut out = Vec::new();
                let mut check = |field, expected: String, actual: String| {
                    if expected != actual {
                        out.push(Mismatch {
                            scenario: e.scenario.clone(),
                            planner: e.planner,
                            trial: e.trial,
                            field,
                            expected,
                            actual,
                        });
                    }
                };
                check("scenario_hash", e.scenario_hash.clone(), scenario.content_hash());
                check("status", e.status.clone(), outcome.status.name().to_string());
                check("walked_hash", e.walked_hash.clone(), path_hash(&outcome.walked));
                check("potential_evals", e.potential_evals.to_string(), outcome.potential_evals.to_string());
                check("replan_count", e.replan_count.to_string(), outcome.replan_count.to_string());
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(found.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------------
// Gates

/// A pass/fail check on bench summaries. Gates without a `scenario` apply to
/// every scenario in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Gate {
    /// Reachability strictly decreasing along `order`.
    ReachabilityOrder {
        order: Vec<PlannerKind>,
        #[serde(default)]
        scenario: Option<String>,
    },
    MinReachability {
        planner: PlannerKind,
        min: f64,
        #[serde(default)]
        scenario: Option<String>,
    },
    /// `better` exceeds `worse` by at least `points` percentage points.
    ReachabilityMargin {
        better: PlannerKind,
        worse: PlannerKind,
        points: f64,
        #[serde(default)]
        scenario: Option<String>,
    },
    /// `better` reachability at least `factor` times `worse`.
    ReachabilityRatio {
        better: PlannerKind,
        worse: PlannerKind,
        factor: f64,
        #[serde(default)]
        scenario: Option<String>,
    },
    /// Mean planning time of `planner` at most `max` times `reference`.
    PlanningTimeRatio {
        planner: PlannerKind,
        reference: PlannerKind,
        max: f64,
        #[serde(default)]
        scenario: Option<String>,
    },
    /// Mean path length of `planner` over `reference` within `[min, max]`.
    PathLengthRatio {
        planner: PlannerKind,
        reference: PlannerKind,
        min: f64,
        max: f64,
        #[serde(default)]
        scenario: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateFile {
    pub gates: Vec<Gate>,
}

impl GateFile {
    pub fn load(path: &FsPath) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateResult {
    pub description: String,
    pub passed: bool,
}

fn ratio_text(a: Option<f64>, b: Option<f64>) -> (Option<f64>, String) {
    match (a, b) {
        (Some(a), Some(b)) if b > 0.0 => (Some(a / b), format!("{:.3}", a / b)),
        _ => (None, "undefined".to_string()),
    }
}

impl Gate {
    fn scenario(&self) -> Option<&str> {
        match self {
            Gate::ReachabilityOrder { scenario, .. }
            | Gate::MinReachability { scenario, .. }
            | Gate::ReachabilityMargin { scenario, .. }
            | Gate::ReachabilityRatio { scenario, .. }
            | Gate::PlanningTimeRatio { scenario, .. }
            | Gate::PathLengthRatio { scenario, .. } => scenario.as_deref(),
        }
    }

    /// One result per scenario the gate applies to. Missing cells fail.
    pub fn evaluate(&self, report: &BenchReport) -> Vec<GateResult> {
        let mut scenarios: Vec<String> = Vec::new();
        for s in &report.summaries {
            if !scenarios.contains(&s.scenario) && self.scenario().is_none_or(|g| g == s.scenario) {
                scenarios.push(s.scenario.clone());
            }
        }
        if scenarios.is_empty() {
            return vec![GateResult {
                description: format!("{self:?}: no matching scenario"),
                passed: false,
            }];
        }
        scenarios.iter().map(|sc| self.evaluate_one(report, sc)).collect()
    }

    fn evaluate_one(&self, report: &BenchReport, sc: &str) -> GateResult {
        let get = |k: PlannerKind| report.summary(k, sc);
        let reach = |k: PlannerKind| get(k).map(|s| s.reachability);
        let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{:.1}%", 100.0 * v));
        let (description, passed) = match self {
            Gate::ReachabilityOrder { order, .. } => {
                let values: Vec<Option<f64>> = order.iter().map(|&k| reach(k)).collect();
                let passed = values.iter().all(Option::is_some)
                    && values.windows(2).all(|w| w[0].unwrap() > w[1].unwrap());
                let text: Vec<String> = order
                    .iter()
                    .zip(&values)
                    .map(|(k, v)| format!("{} {}", k.label(), pct(*v)))
                    .collect();
                (format!("{sc}: reachability order {}", text.join(" > ")), passed)
            }
            Gate::MinReachability { planner, min, .. } => {
                let v = reach(*planner);
                (
                    format!("{sc}: {} reachability {} >= {:.1}%", planner.label(), pct(v), 100.0 * min),
                    v.is_some_and(|v| v >= *min),
                )
            }
            Gate::ReachabilityMargin { better, worse, points, .. } => {
                let (b, w) = (reach(*better), reach(*worse));
                let margin = b.zip(w).map(|(b, w)| 100.0 * (b - w));
                (
                    format!(
                        "{sc}: {} {} vs {} {} margin {} >= {points} pp",
                        better.label(),
                        pct(b),
                        worse.label(),
                        pct(w),
                        margin.map_or_else(|| "n/a".into(), |m| format!("{m:.1}")),
                    ),
                    margin.is_some_and(|m| m >= *points - 1e-9),
                )
            }
            Gate::ReachabilityRatio { better, worse, factor, .. } => {
                let (b, w) = (reach(*better), reach(*worse));
                (
                    format!("{sc}: {} {} >= {factor} x {} {}", better.label(), pct(b), worse.label(), pct(w)),
                    b.zip(w).is_some_and(|(b, w)| b >= factor * w),
                )
            }
            Gate::PlanningTimeRatio { planner, reference, max, .. } => {
                let (a, b) = (
                    get(*planner).and_then(|s| s.mean_planning_time),
                    get(*reference).and_then(|s| s.mean_planning_time),
                );
                let (r, text) = ratio_text(a, b);
                (
                    format!("{sc}: planning time {} / {} = {text} <= {max:.3}", planner.label(), reference.label()),
                    r.is_some_and(|r| r <= *max),
                )
            }
            Gate::PathLengthRatio { planner, reference, min, max, .. } => {
                let (a, b) = (
                    get(*planner).and_then(|s| s.mean_path_length),
                    get(*reference).and_then(|s| s.mean_path_length),
                );
                let (r, text) = ratio_text(a, b);
                (
                    format!("{sc}: path length {} / {} = {text} in [{min}, {max}]", planner.label(), reference.label()),
                    r.is_some_and(|r| r >= *min && r <= *max),
                )
            }
        };
        GateResult { description, passed }
    }
}

pub fn evaluate_gates(gates: &[Gate], report: &BenchReport) -> Vec<GateResult> {
    gates.iter().flat_map(|g| g.evaluate(report)).collect()
}
