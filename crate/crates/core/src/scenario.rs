//! Run configurations as stored on disk. Lengths are in millimeters and
//! speeds in mm/s; [`Scenario::resolve`] converts everything to SI once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::{ObjectiveSpec, OffsetSpec};
use crate::objective::Evaluation;
use crate::optimize::{
    extend_solution, greedy_linewise, greedy_segmentwise, initial_coefficients, GreedyOutcome, OptimizeError, ParameterBounds,
    ParameterFunctionModel, Problem, SolverOptions, WindowSchedule,
};
use crate::scanpath::{OffsetMode, PathError, PathGenerator, ScanPath};
use crate::thermal::{BeamParameters, Material, ThermalError, TimeSampling};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("unknown builtin scenario {0:?} (expected example1, example2 or example3)")]
    UnknownBuiltin(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub conductivity_w_mk: f64,
    pub diffusivity_mm2_s: f64,
    pub initial_temperature_k: f64,
    pub power_w: f64,
}

impl MaterialConfig {
    pub fn to_material(&self) -> Result<Material, ThermalError> {
        Material::new(
            self.conductivity_w_mk,
            self.diffusivity_mm2_s / 1e6,
            self.initial_temperature_k,
            self.power_w,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathConfig {
    Generator(PathGenerator),
    Segments { segments_mm: Vec<[[f64; 2]; 2]> },
    /// JSON file holding `{"segments_mm": ...}` or a generator, relative to
    /// the scenario file.
    File { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetConfig {
    pub w_mm: f64,
    pub d_mm: f64,
    #[serde(default)]
    pub mode: OffsetMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub u_melt_k: f64,
    pub u_surf_k: f64,
    pub w1: f64,
    pub w2: f64,
    pub alpha_margin_mm: f64,
    pub h_mm: f64,
    pub offset: OffsetConfig,
    pub time_spacing_factor: f64,
    /// Beam positions farther than this from a point are not sampled for its
    /// maximum temperature.
    pub time_radius_mm: Option<f64>,
    /// Log-sum-exp scale (1/K); calibrated when absent.
    #[serde(default)]
    pub smoothing_per_k: Option<f64>,
}

impl ObjectiveConfig {
    pub fn to_spec(&self) -> ObjectiveSpec {
        ObjectiveSpec {
            melt_temperature: self.u_melt_k,
            surface_temperature: self.u_surf_k,
            melt_weight: self.w1,
            surface_weight: self.w2,
            end_margin: self.alpha_margin_mm / 1e3,
            sample_spacing: self.h_mm / 1e3,
            offset: OffsetSpec {
                width: self.offset.w_mm / 1e3,
                depth: self.offset.d_mm / 1e3,
                mode: self.offset.mode,
            },
            time_sampling: TimeSampling {
                spacing_factor: self.time_spacing_factor,
                radius: self.time_radius_mm.map(|r| r / 1e3),
            },
            smoothing: self.smoothing_per_k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Segmentwise,
    Linewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub sigma_mm: (f64, f64),
    pub v_mm_s: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialGuess {
    pub sigma_mm: f64,
    pub v_mm_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    /// Window size and freeze count, in segments or hatch lines.
    pub window: WindowSchedule,
    pub bounds: BoundsConfig,
    pub initial_guess: InitialGuess,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Profile coefficient bounds for the line-wise algorithm.
    #[serde(default)]
    pub model: ParameterFunctionModel,
    /// Optimize only the first this many hatch lines and repeat the last of
    /// them over the rest of the path.
    #[serde(default)]
    pub optimize_lines: Option<usize>,
}

/// A regular grid axis: `n` points from `from` to `to` inclusive (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub from: f64,
    pub to: f64,
    pub n: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        match self.n {
            0 => vec![],
            1 => vec![self.from],
            n => (0..n).map(|i| self.from + (self.to - self.from) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "plane", rename_all = "snake_case")]
pub enum CrossSection {
    /// Plane `x = at`, spanned by y and depth (depth axis in mm, positive down).
    X { at: f64, y: Axis, depth: Axis },
    /// Plane `y = at`, spanned by x and depth.
    Y { at: f64, x: Axis, depth: Axis },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    /// Surface grid for the maximum-temperature field.
    #[serde(default)]
    pub surface_grid: Option<(Axis, Axis)>,
    #[serde(default)]
    pub cross_sections: Vec<CrossSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub material: MaterialConfig,
    pub path: PathConfig,
    #[serde(default)]
    pub jump_dwell_s: f64,
    pub objective: ObjectiveConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Directory that relative file references resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// A scenario converted to SI with its path built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub material: Material,
    pub path: ScanPath,
    pub jump_dwell: f64,
    pub spec: ObjectiveSpec,
    pub bounds: ParameterBounds,
    pub initial: BeamParameters,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ScenarioError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let mut s: Scenario = read_json(path)?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        s.validate()?;
        Ok(s)
    }

    /// A builtin name or a file path.
    pub fn load_or_builtin(spec: &str) -> Result<Self, ScenarioError> {
        match spec {
            "example1" | "example2" | "example3" => Self::builtin(spec),
            _ => Self::load(Path::new(spec)),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let text = serde_json::to_string_pretty(self).expect("scenario serializes");
        std::fs::write(path, text + "\n").map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn builtin(name: &str) -> Result<Self, ScenarioError> {
        let text = match name {
            "example1" => include_str!("../scenarios/example1.json"),
            "example2" => include_str!("../scenarios/example2.json"),
            "example3" => include_str!("../scenarios/example3.json"),
            _ => return Err(ScenarioError::UnknownBuiltin(name.to_string())),
        };
        let s: Scenario = serde_json::from_str(text).map_err(|source| ScenarioError::Parse {
            path: PathBuf::from(format!("<builtin {name}>")),
            source,
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn build_path(&self) -> Result<ScanPath, ScenarioError> {
        match &self.path {
            PathConfig::Generator(g) => Ok(g.build()?),
            PathConfig::Segments { segments_mm } => Ok(ScanPath::from_millimeters(segments_mm)?),
            PathConfig::File { file } => {
                let full = match &self.base_dir {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                let inner: PathConfig = read_json(&full)?;
                match inner {
                    PathConfig::Generator(g) => Ok(g.build()?),
                    PathConfig::Segments { segments_mm } => Ok(ScanPath::from_millimeters(&segments_mm)?),
                    PathConfig::File { .. } => Err(ScenarioError::Invalid(format!("{} refers to another file", full.display()))),
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let material = self.material.to_material()?;
        let invalid = |e: &dyn std::fmt::Display| ScenarioError::Invalid(e.to_string());
        self.objective.to_spec().validate(material.initial_temperature).map_err(|e| invalid(&e))?;
        let a = &self.algorithm;
        a.window.validate().map_err(|e| invalid(&e))?;
        a.solver.validate().map_err(|e| invalid(&e))?;
        let bounds = self.bounds();
        bounds.validate().map_err(|e| invalid(&e))?;
        let g = &a.initial_guess;
        let (s, v) = (g.sigma_mm / 1e3, g.v_mm_s / 1e3);
        if !(s >= bounds.spot_size.0 && s <= bounds.spot_size.1 && v >= bounds.speed.0 && v <= bounds.speed.1) {
            return Err(ScenarioError::Invalid("initial guess lies outside the bounds".into()));
        }
        if a.algorithm == Algorithm::Linewise {
            a.model.validate().map_err(|e| invalid(&e))?;
        }
        if a.optimize_lines == Some(0) {
            return Err(ScenarioError::Invalid("optimize_lines must be positive".into()));
        }
        if !(self.jump_dwell_s >= 0.0) {
            return Err(ScenarioError::Invalid("jump dwell must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn bounds(&self) -> ParameterBounds {
        let b = &self.algorithm.bounds;
        ParameterBounds {
            spot_size: (b.sigma_mm.0 / 1e3, b.sigma_mm.1 / 1e3),
            speed: (b.v_mm_s.0 / 1e3, b.v_mm_s.1 / 1e3),
        }
    }

    pub fn resolve(&self) -> Result<Resolved, ScenarioError> {
        self.validate()?;
        let path = self.build_path()?;
        let g = &self.algorithm.initial_guess;
        if let Some(l) = self.algorithm.optimize_lines {
            if l > path.line_count() {
                return Err(ScenarioError::Invalid(format!(
                    "optimize_lines {l} exceeds the {} hatch lines of the path",
                    path.line_count()
                )));
            }
        }
        Ok(Resolved {
            material: self.material.to_material()?,
            initial: BeamParameters::uniform(path.len(), g.sigma_mm / 1e3, g.v_mm_s / 1e3),
            path,
            jump_dwell: self.jump_dwell_s,
            spec: self.objective.to_spec(),
            bounds: self.bounds(),
        })
    }
}

/// Result of optimizing a scenario.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Greedy result on the optimized lines.
    pub greedy: GreedyOutcome,
    /// Parameters for the whole path (extended when only some lines were
    /// optimized).
    pub beam: BeamParameters,
    /// Number of segments that took part in the optimization.
    pub optimized_segments: usize,
    /// Whole-path evaluations before and after, present when only some
    /// lines were optimized.
    pub full_initial: Option<Evaluation>,
    pub full_final: Option<Evaluation>,
}

impl Resolved {
    pub fn problem<'a>(&self, path: &'a ScanPath, solver: SolverOptions) -> Result<Problem<'a>, OptimizeError> {
        Problem::new(self.material, path, self.jump_dwell, self.spec, self.bounds, solver)
    }
}

impl Scenario {
    /// Runs the configured greedy algorithm and extends the result over the
    /// whole path if only the leading lines were optimized.
    pub fn optimize(&self) -> Result<RunResult, ScenarioError> {
        let r = self.resolve()?;
        let a = &self.algorithm;
        let lines = a.optimize_lines.unwrap_or(r.path.line_count());
        let sub = if lines < r.path.line_count() {
            Some(r.path.line_subpath(0, lines - 1)?)
        } else {
            None
        };
        let path = sub.as_ref().unwrap_or(&r.path);
        let problem = r.problem(path, a.solver)?;
        let initial = BeamParameters::uniform(path.len(), r.initial.spot_size[0], r.initial.speed[0]);
        let greedy = match a.algorithm {
            Algorithm::Segmentwise => greedy_segmentwise(&problem, a.window, &initial)?,
            Algorithm::Linewise => {
                let coefficients = initial_coefficients(&a.model, path, &r.bounds, initial.spot_size[0], initial.speed[0]);
                greedy_linewise(&problem, a.window, &a.model, &coefficients)?
            }
        };
        if sub.is_none() {
            return Ok(RunResult {
                beam: greedy.beam.clone(),
                optimized_segments: path.len(),
                greedy,
                full_initial: None,
                full_final: None,
            });
        }
        let beam = extend_solution(&greedy.beam, &r.path)?;
        let full = r.problem(&r.path, a.solver)?;
        Ok(RunResult {
            full_initial: Some(full.evaluate(&r.initial)?),
            full_final: Some(full.evaluate(&beam)?),
            optimized_segments: path.len(),
            beam,
            greedy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        let e1 = Scenario::builtin("example1").unwrap().resolve().unwrap();
        assert_eq!((e1.path.len(), e1.path.line_count()), (50, 5));
        let ti64 = Material::ti64();
        assert!((e1.material.diffusivity - ti64.diffusivity).abs() < 1e-18);
        assert_eq!(e1.material.power, ti64.power);
        assert_eq!(e1.bounds, ParameterBounds::example());
        assert_eq!(e1.initial, BeamParameters::uniform(50, 2e-4, 0.5));
        let spec = ObjectiveSpec::example();
        assert_eq!(e1.spec.melt_temperature, spec.melt_temperature);
        assert!((e1.spec.end_margin - spec.end_margin).abs() < 1e-15);
        let e2 = Scenario::builtin("example2").unwrap().resolve().unwrap();
        assert_eq!((e2.path.len(), e2.path.line_count()), (152, 19));
        assert_eq!(e2.spec.offset.mode, OffsetMode::NormalOffset);
        let e3 = Scenario::builtin("example3").unwrap();
        assert_eq!(e3.algorithm.algorithm, Algorithm::Linewise);
        assert!(Scenario::builtin("example4").is_err());
    }

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join(format!("beamopt-scenario-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        for name in ["example1", "example2", "example3"] {
            let s = Scenario::builtin(name).unwrap();
            let file = dir.join(format!("{name}.json"));
            s.save(&file).unwrap();
            let a = Scenario::load(&file).unwrap();
            a.save(&file).unwrap();
            let b = Scenario::load(&file).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.path, s.path);
            assert_eq!(a.algorithm, s.algorithm);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn segment_list_and_file_paths() {
        let dir = std::env::temp_dir().join(format!("beamopt-pathfile-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("p.json"), r#"{"segments_mm": [[[0, 0], [1, 0]], [[1, 0], [1, 1]]]}"#).unwrap();
        let mut s = Scenario::builtin("example1").unwrap();
        s.path = PathConfig::File { file: "p.json".into() };
        s.save(&dir.join("s.json")).unwrap();
        let loaded = Scenario::load(&dir.join("s.json")).unwrap();
        let path = loaded.build_path().unwrap();
        assert_eq!((path.len(), path.line_count()), (2, 2));
        s.path = PathConfig::File { file: "missing.json".into() };
        s.base_dir = Some(dir.clone());
        assert!(matches!(s.build_path(), Err(ScenarioError::Io { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut s = Scenario::builtin("example1").unwrap();
        s.objective.w1 = 0.0;
        s.objective.w2 = 0.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::builtin("example1").unwrap();
        s.algorithm.initial_guess.v_mm_s = 1e5;
        assert!(s.validate().is_err());
        let mut s = Scenario::builtin("example1").unwrap();
        s.material.diffusivity_mm2_s = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn axis_points() {
        assert_eq!(Axis { from: 0.0, to: 1.0, n: 3 }.points(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Axis { from: 2.0, to: 9.0, n: 1 }.points(), vec![2.0]);
        assert!(Axis { from: 0.0, to: 1.0, n: 0 }.points().is_empty());
    }
}
