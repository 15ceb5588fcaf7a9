use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use beamopt::objective::PathSampling;
use beamopt::scenario::{CrossSection, Resolved, Scenario};
use beamopt::thermal::FieldSpec;
use beamopt::{BeamParameters, Point3, ThermalModel};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

mod tables;

#[derive(Parser)]
#[command(name = "beamopt", version, about = "Optimize beam spot size and speed along a scan path")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file, or one of example1, example2, example3.
    #[arg(long)]
    scenario: String,
    /// Output directory (defaults to the scenario's output_dir, then ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Deterministic mode. Always on: no step of the program is randomized.
    #[arg(long, default_value_t = true)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate temperatures and write maximum-temperature profiles and fields.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Parameter table (k, gamma_i_mm, sigma_mm, v_mm_s); defaults to the initial guess.
        #[arg(long)]
        beam: Option<PathBuf>,
        /// Skip the surface grid and cross sections.
        #[arg(long)]
        profiles_only: bool,
    },
    /// Run the configured greedy optimization.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Report the objective of a parameter table.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beam: PathBuf,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Abort(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Abort(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

trait Classify<T> {
    fn config(self) -> Result<T, Failure>;
    fn other(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn other(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Other(e.into()))
    }
}

struct RunContext {
    scenario: Scenario,
    resolved: Resolved,
    out: PathBuf,
}

fn setup(common: &Common) -> Result<RunContext, Failure> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().config()?;
    }
    let scenario = Scenario::load_or_builtin(&common.scenario).config()?;
    let resolved = scenario.resolve().config()?;
    let out = common
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)
        .with_context(|| format!("cannot create {}", out.display()))
        .other()?;
    Ok(RunContext { scenario, resolved, out })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn simulate(common: &Common, beam: Option<&Path>, profiles_only: bool) -> Result<(), Failure> {
    let ctx = setup(common)?;
    let r = &ctx.resolved;
    let beam = match beam {
        Some(file) => tables::read_parameters(file, r.path.len()).config()?,
        None => r.initial.clone(),
    };
    let model = ThermalModel::new(r.material, &r.path, beam, r.jump_dwell).config()?;
    let sampling = PathSampling::for_spec(&r.path, &r.spec).config()?;
    let evaluation = beamopt::objective::global_objective(&model, &r.spec, &sampling).other()?;
    tables::write_profiles(&ctx.out, &sampling, &evaluation).other()?;
    write_json(&ctx.out.join("report.json"), &json!(evaluation.report)).other()?;
    if profiles_only {
        return Ok(());
    }
    let field = FieldSpec::MaxOverScan(r.spec.time_sampling);
    if let Some((xs, ys)) = &ctx.scenario.outputs.surface_grid {
        let points: Vec<Point3> = ys
            .points()
            .iter()
            .flat_map(|&y| xs.points().into_iter().map(move |x| Point3::surface(x / 1e3, y / 1e3)))
            .collect();
        if !points.is_empty() {
            info!("surface grid: {} points", points.len());
            let values = model.field_on_grid(&points, field).other()?;
            tables::write_field(&ctx.out.join("surface_max.csv"), &points, &values).other()?;
        }
    }
    for (i, section) in ctx.scenario.outputs.cross_sections.iter().enumerate() {
        let points: Vec<Point3> = match section {
            CrossSection::X { at, y, depth } => depth
                .points()
                .iter()
                .flat_map(|&d| y.points().into_iter().map(move |y| Point3::new(at / 1e3, y / 1e3, -d / 1e3)))
                .collect(),
            CrossSection::Y { at, x, depth } => depth
                .points()
                .iter()
                .flat_map(|&d| x.points().into_iter().map(move |x| Point3::new(x / 1e3, at / 1e3, -d / 1e3)))
                .collect(),
        };
        if points.is_empty() {
            continue;
        }
        info!("cross section {}: {} points", i + 1, points.len());
        let values = model.field_on_grid(&points, field).other()?;
        tables::write_field(&ctx.out.join(format!("cross_section_{}.csv", i + 1)), &points, &values).other()?;
    }
    Ok(())
}

fn optimize(common: &Common) -> Result<(), Failure> {
    let ctx = setup(common)?;
    let run = ctx.scenario.optimize().map_err(|e| Failure::Abort(e.into()))?;
    let r = &ctx.resolved;
    tables::write_parameters(&ctx.out.join("parameters.csv"), &r.path, &run.beam).other()?;
    tables::write_trace(&ctx.out.join("trace.csv"), &run.greedy.trace).other()?;
    let mut summary = json!({
        "scenario": ctx.scenario.name,
        "algorithm": ctx.scenario.algorithm.algorithm,
        "units": { "J": "K^2 m", "sigma": "mm", "v": "mm/s" },
        "J_init": run.greedy.j_init,
        "J_opt": run.greedy.j_opt,
        "optimized_segments": run.optimized_segments,
        "segments": r.path.len(),
        "smoothing_per_K": run.greedy.smoothing,
        "report": run.greedy.evaluation.report,
        "trace": run.greedy.trace,
    });
    if let Some(c) = &run.greedy.coefficients {
        summary["coefficients"] = json!(c);
    }
    if let (Some(a), Some(b)) = (&run.full_initial, &run.full_final) {
        summary["full_path"] = json!({ "J_init": a.report.j, "J_extended": b.report.j, "report": b.report });
    }
    write_json(&ctx.out.join("summary.json"), &summary).other()?;
    println!(
        "J_init {:.2} J_opt {:.2} K^2 m ({} windows)",
        run.greedy.j_init,
        run.greedy.j_opt,
        run.greedy.trace.len()
    );
    if run.greedy.aborted() {
        return Err(Failure::Abort(anyhow::anyhow!("at least one window solve aborted; see trace.csv")));
    }
    Ok(())
}

fn evaluate(common: &Common, beam: &Path) -> Result<(), Failure> {
    let ctx = setup(common)?;
    let r = &ctx.resolved;
    let beam: BeamParameters = tables::read_parameters(beam, r.path.len()).config()?;
    let model = ThermalModel::new(r.material, &r.path, beam, r.jump_dwell).config()?;
    let sampling = PathSampling::for_spec(&r.path, &r.spec).config()?;
    let evaluation = beamopt::objective::global_objective(&model, &r.spec, &sampling).other()?;
    let report = json!(evaluation.report);
    write_json(&ctx.out.join("report.json"), &report).other()?;
    println!("{}", serde_json::to_string_pretty(&report).other()?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            common,
            beam,
            profiles_only,
        } => simulate(common, beam.as_deref(), *profiles_only),
        Command::Optimize { common } => optimize(common),
        Command::Evaluate { common, beam } => evaluate(common, beam),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Config(e) | Failure::Abort(e) | Failure::Other(e)) = f;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
