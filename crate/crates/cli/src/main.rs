use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use rapf::bench::{
    evaluate_gates, replay, run_bench, BenchConfig, GateFile, Manifest, ScenarioSource, DEFAULT_TRIALS,
    FULL_TRIALS,
};
use rapf::geometry::{ObstacleKind, Path};
use rapf::potentials::PotentialMap;
use rapf::sensor_sim::{run_trial, write_trace_csv, SensorModel, TrialConfig};
use rapf::terrain::{area_fraction, generate_scenario, ScenarioSpec};
use rapf::{PlannerKind, PlannerParams, Rect, Scenario, Vec2};

const EXIT_USAGE: u8 = 1;
const EXIT_GATE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "rapf", version, about = "Potential-field path planners for planetary rovers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random terrain scenario from a preset.
    Generate {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run one closed-loop trial on a scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "rapf")]
        planner: PlannerKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-step CSV of the walked trajectory.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Gaussian potential grid; the walked and last planned paths go to
        /// `<stem>_paths.csv` next to it.
        #[arg(long)]
        export_potential_map: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        cell: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo comparison over scenarios and planners.
    Bench {
        /// Preset names or scenario files.
        #[arg(long, value_delimiter = ',', default_value = "A,B,C")]
        scenarios: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "apf,rvf,crbapf,rapf,astar")]
        planners: Vec<PlannerKind>,
        /// Trials per (scenario, planner) cell [default: 100].
        #[arg(long)]
        trials: Option<usize>,
        /// Use 500 trials per cell.
        #[arg(long, conflicts_with = "trials")]
        full: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, short, default_value = "bench_out")]
        out: PathBuf,
        /// JSON file of pass/fail gates checked against the summaries.
        #[arg(long)]
        gate: Option<PathBuf>,
        /// Re-run every trial of a manifest and compare.
        #[arg(long, conflicts_with_all = ["gate", "trials", "full"])]
        replay: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the Gaussian potential of a scenario as a CSV grid.
    ExportMap {
        scenario: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        cell: f64,
        /// xmin,ymin,xmax,ymax [default: the world rectangle].
        #[arg(long, value_parser = parse_bounds)]
        bounds: Option<Rect>,
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON file of parameter overrides.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Give planners the full obstacle map instead of FOV sensing.
    #[arg(long)]
    omniscient: bool,
    #[arg(long)]
    sensor_range: Option<f64>,
    /// Field of view in degrees.
    #[arg(long)]
    sensor_fov: Option<f64>,
}

impl Common {
    fn params(&self) -> rapf::Result<PlannerParams> {
        load_params(self.params.as_deref())
    }

    fn sensor(&self) -> rapf::Result<SensorModel> {
        let d = SensorModel::default();
        SensorModel::new(
            self.sensor_range.unwrap_or(d.range),
            self.sensor_fov.map_or(d.fov, f64::to_radians),
        )
    }
}

fn parse_bounds(s: &str) -> Result<Rect, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("`{c}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x0, y0, x1, y1] if x1 > x0 && y1 > y0 => Ok(Rect::new(Vec2::new(x0, y0), Vec2::new(x1, y1))),
        [_, _, _, _] => Err("expected xmin < xmax and ymin < ymax".into()),
        _ => Err(format!("expected 4 comma-separated numbers, got {}", v.len())),
    }
}

fn load_params(path: Option<&FsPath>) -> rapf::Result<PlannerParams> {
    let p = match path {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => PlannerParams::default(),
    };
    p.validate()?;
    Ok(p)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() && !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn dispatch(cmd: Command) -> rapf::Result<ExitCode> {
    match cmd {
        Command::Generate { preset, seed, out } => generate(&preset, seed, &out),
        Command::Run {
            scenario,
            planner,
            seed,
            trace,
            export_potential_map,
            cell,
            common,
        } => run(&scenario, planner, seed, trace.as_deref(), export_potential_map.as_deref(), cell, &common),
        Command::Bench {
            scenarios,
            planners,
            trials,
            full,
            seed,
            workers,
            out,
            gate,
            replay,
            common,
        } => {
            if let Some(manifest) = replay {
                return replay_manifest(&manifest, workers);
            }
            let config = BenchConfig {
                scenarios: scenarios.iter().map(|s| ScenarioSource::parse(s)).collect(),
                planners,
                trials_per_cell: if full { FULL_TRIALS } else { trials.unwrap_or(DEFAULT_TRIALS) },
                base_seed: seed,
                params: common.params()?,
                sensor: common.sensor()?,
                omniscient: common.omniscient,
                workers,
                ..BenchConfig::default()
            };
            bench(&config, &out, gate.as_deref())
        }
        Command::ExportMap {
            scenario,
            out,
            cell,
            bounds,
            params,
        } => {
            let scenario = Scenario::load(&scenario)?;
            let bounds = bounds.unwrap_or_else(|| scenario.world_size.rect());
            let params = load_params(params.as_deref())?;
            write_map(&scenario, bounds, cell, &params, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn generate(preset: &str, seed: u64, out: &FsPath) -> rapf::Result<ExitCode> {
    let spec = ScenarioSpec::preset(preset)?;
    let scenario = generate_scenario(&spec, seed)?;
    scenario.save(out)?;
    let count = |k| scenario.obstacles.iter().filter(|o| o.kind == k).count();
    let region = &scenario.obstacle_region;
    println!("wrote {}", out.display());
    println!(
        "rocks {}  coverage {:.2}%",
        count(ObstacleKind::Rock),
        100.0 * area_fraction(&scenario.obstacles, ObstacleKind::Rock, region)
    );
    println!(
        "craters {}  coverage {:.2}%",
        count(ObstacleKind::Crater),
        100.0 * area_fraction(&scenario.obstacles, ObstacleKind::Crater, region)
    );
    Ok(ExitCode::SUCCESS)
}

fn run(
    scenario_path: &FsPath,
    planner: PlannerKind,
    seed: u64,
    trace: Option<&FsPath>,
    map: Option<&FsPath>,
    cell: f64,
    common: &Common,
) -> rapf::Result<ExitCode> {
    let scenario = Scenario::load(scenario_path)?;
    let params = common.params()?;
    let config = TrialConfig {
        sensor: common.sensor()?,
        omniscient: common.omniscient,
        record_trace: trace.is_some(),
        ..TrialConfig::default()
    };
    let o = run_trial(&scenario, planner, &params, &config, seed)?;
    println!("planner          {}", planner.label());
    println!("status           {}", o.status.name());
    println!("walked length    {:.3} m", o.walked_length);
    println!("steps            {}", o.steps);
    println!("replans          {}", o.replan_count);
    println!("artificial obs.  {}", o.artificial_count);
    println!("potential evals  {}", o.potential_evals);
    println!("planning time    {:.3} ms total", 1e3 * o.planning_time_total);
    if let Some(min) = o.safety_samples.iter().map(|s| s.min_distance - s.radius).reduce(f64::min) {
        println!("min edge clear.  {min:.3} m");
    }
    if let Some(path) = trace {
        let mut f = fs::File::create(path)?;
        write_trace_csv(&o.trace, &mut f)?;
        println!("trace            {}", path.display());
    }
    if let Some(path) = map {
        write_map(&scenario, scenario.world_size.rect(), cell, &params, path)?;
        let paths = paths_file(path);
        write_paths(&o.walked, &o.last_plan, &paths)?;
        println!("potential map    {}", path.display());
        println!("paths            {}", paths.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn paths_file(map: &FsPath) -> PathBuf {
    let stem = map.file_stem().map_or_else(|| "map".into(), |s| s.to_string_lossy().into_owned());
    map.with_file_name(format!("{stem}_paths.csv"))
}

fn write_map(scenario: &Scenario, bounds: Rect, cell: f64, params: &PlannerParams, out: &FsPath) -> rapf::Result<()> {
    let params = PlannerParams {
        rover_radius: scenario.rover_radius,
        ..params.clone()
    };
    let map = PotentialMap::compute(bounds, cell, scenario.goal_center, &scenario.obstacles, &params)?;
    let mut f = std::io::BufWriter::new(fs::File::create(out)?);
    map.write_csv(&mut f)?;
    f.flush()?;
    Ok(())
}

fn write_paths(walked: &Path, planned: &Path, out: &FsPath) -> rapf::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(out)?);
    writeln!(f, "path,index,x,y")?;
    for (name, path) in [("walked", walked), ("planned", planned)] {
        for (i, p) in path.waypoints().iter().enumerate() {
            writeln!(f, "{name},{i},{},{}", p.x, p.y)?;
        }
    }
    f.flush()?;
    Ok(())
}

fn bench(config: &BenchConfig, out: &FsPath, gate: Option<&FsPath>) -> rapf::Result<ExitCode> {
    // Load gates first so a bad file fails before a long run.
    let gates = gate.map(GateFile::load).transpose()?;
    let report = run_bench(config)?;
    report.write_outputs(out)?;
    print!("{}", report.table());
    println!("outputs written to {}", out.display());
    let Some(gates) = gates else {
        return Ok(ExitCode::SUCCESS);
    };
    let results = evaluate_gates(&gates.gates, &report);
    for r in &results {
        println!("[{}] {}", if r.passed { "PASS" } else { "FAIL" }, r.description);
    }
    if results.iter().all(|r| r.passed) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_GATE))
    }
}

fn replay_manifest(path: &FsPath, workers: usize) -> rapf::Result<ExitCode> {
    let manifest = Manifest::load(path)?;
    let mismatches = replay(&manifest, workers)?;
    for m in &mismatches {
        println!("mismatch: {m}");
    }
    println!(
        "replayed {} trials, {} mismatches",
        manifest.trials.len(),
        mismatches.len()
    );
    Ok(if mismatches.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_GATE) })
}
