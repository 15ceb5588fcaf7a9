//! Box-constrained quasi-Newton solver and the greedy receding-window
//! drivers built on it.
//!
//! The solver works on coordinates normalized to `[0, 1]` by the bounds and
//! estimates gradients by one-sided finite differences.

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::{global_objective, ObjectiveError, ObjectiveSpec, PathSampling, Window, WindowObjective, Evaluation};
use crate::scanpath::{PathError, ScanPath};
use crate::thermal::{calibrate_smoothing, BeamParameters, Material, MaxMethod, ThermalError, ThermalModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("objective is not finite at the starting point ({0})")]
    NonFiniteStart(f64),
    #[error("starting point lies outside the bounds at coordinate {0}")]
    StartOutOfBounds(usize),
    #[error("invalid bounds at coordinate {0}")]
    Bounds(usize),
    #[error("invalid solver options: {0}")]
    Options(&'static str),
    #[error("invalid schedule: {0}")]
    Schedule(&'static str),
    #[error("parameter model: {0}")]
    Model(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop when the relative decrease of the objective in one iteration
    /// falls below this.
    pub tolerance: f64,
    /// Finite-difference step on normalized coordinates.
    pub fd_step: f64,
    /// Stop when the projected gradient (normalized) is below this.
    pub gradient_tolerance: f64,
    /// Number of stored curvature pairs.
    pub history: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-3,
            fd_step: 1e-6,
            gradient_tolerance: 1e-8,
            history: 10,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.max_iterations == 0 || self.history == 0 {
            return Err(OptimizeError::Options("iteration and history counts must be positive"));
        }
        if !(self.tolerance > 0.0 && self.fd_step > 0.0 && self.fd_step < 0.5 && self.gradient_tolerance > 0.0) {
            return Err(OptimizeError::Options("tolerances and step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    /// The line search could not decrease the objective.
    Stalled,
    /// The objective failed; the best point seen so far is returned.
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome {
    /// Best point, physical units.
    pub x: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: SolverStatus,
    /// Objective value after each iteration.
    pub trace: Vec<f64>,
}

struct Normalized<'b, F> {
    f: F,
    lower: &'b [f64],
    upper: &'b [f64],
    evaluations: usize,
    best: (Vec<f64>, f64),
}

impl<F, E> Normalized<'_, F>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
    E: std::fmt::Display,
{
    fn physical(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.lower.iter().zip(self.upper))
            .map(|(&z, (&lo, &hi))| lo + z * (hi - lo))
            .collect()
    }

    fn eval(&mut self, z: &[f64]) -> Result<f64, String> {
        let x = self.physical(z);
        self.evaluations += 1;
        let v = (self.f)(&x).map_err(|e| e.to_string())?;
        if !v.is_finite() {
            return Err(format!("objective returned {v}"));
        }
        if v < self.best.1 {
            self.best = (z.to_vec(), v);
        }
        Ok(v)
    }

    /// Forward differences, stepping backward where a forward step would
    /// leave the box.
    fn gradient(&mut self, z: &[f64], fz: f64, h: f64) -> Result<Vec<f64>, String> {
        let mut g = vec![0.0; z.len()];
        let mut probe = z.to_vec();
        for i in 0..z.len() {
            let step = if z[i] + h <= 1.0 { h } else { -h };
            probe[i] = z[i] + step;
            g[i] = (self.eval(&probe)? - fz) / step;
            probe[i] = z[i];
        }
        Ok(g)
    }
}

fn project(z: &mut [f64]) {
    for v in z {
        *v = v.clamp(0.0, 1.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` over the box `[lower, upper]` from `x0` with a projected
/// limited-memory BFGS iteration. Coordinates pinned at a bound with the
/// gradient pushing outward are held fixed for the step.
pub fn solve_box_qn<F, E>(
    f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: &SolverOptions,
) -> Result<SolverOutcome, OptimizeError>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
    E: std::fmt::Display,
{
    options.validate()?;
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(OptimizeError::Bounds(n.min(lower.len()).min(upper.len())));
    }
    for i in 0..n {
        if !(lower[i] < upper[i]) || !lower[i].is_finite() || !upper[i].is_finite() {
            return Err(OptimizeError::Bounds(i));
        }
        if !(x0[i] >= lower[i] && x0[i] <= upper[i]) {
            return Err(OptimizeError::StartOutOfBounds(i));
        }
    }
    let mut z: Vec<f64> = (0..n).map(|i| ((x0[i] - lower[i]) / (upper[i] - lower[i])).clamp(0.0, 1.0)).collect();
    let mut prob = Normalized {
        f,
        lower,
        upper,
        evaluations: 0,
        best: (z.clone(), f64::INFINITY),
    };
    let f0 = prob.eval(&z).map_err(|_| OptimizeError::NonFiniteStart(f64::NAN))?;
    let mut fz = f0;
    let mut trace = Vec::new();
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new(); // (s, y, 1/(s·y))
    let mut iterations = 0;

    let finish = |prob: Normalized<'_, F>, status: SolverStatus, iterations: usize, trace: Vec<f64>| {
        let (zb, vb) = prob.best.clone();
        SolverOutcome {
            x: prob.physical(&zb),
            value: vb,
            initial_value: f0,
            iterations,
            evaluations: prob.evaluations,
            status,
            trace,
        }
    };

    let mut g = match prob.gradient(&z, fz, options.fd_step) {
        Ok(g) => g,
        Err(e) => return Ok(finish(prob, SolverStatus::Aborted(e), 0, trace)),
    };
    let status = loop {
        let free: Vec<bool> = (0..n).map(|i| !((z[i] <= 0.0 && g[i] > 0.0) || (z[i] >= 1.0 && g[i] < 0.0))).collect();
        let pg = (0..n)
            .map(|i| ((z[i] - g[i]).clamp(0.0, 1.0) - z[i]).abs())
            .fold(0.0, f64::max);
        if pg <= options.gradient_tolerance {
            break SolverStatus::Converged;
        }
        if iterations >= options.max_iterations {
            break SolverStatus::MaxIterations;
        }

        // Two-loop recursion restricted to free coordinates.
        let mut q: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
        let mask = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| if free[i] { v[i] } else { 0.0 }).collect() };
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let (s, y) = (mask(s), mask(y));
            let a = rho * dot(&s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.last() {
            let (s, y) = (mask(s), mask(y));
            let yy = dot(&y, &y);
            if yy > 0.0 {
                let gamma = dot(&s, &y) / yy;
                if gamma > 0.0 {
                    q.iter_mut().for_each(|v| *v *= gamma);
                }
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let (s, y) = (mask(s), mask(y));
            let b = rho * dot(&y, &q);
            for i in 0..n {
                q[i] += (a - b) * s[i];
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&d, &g) >= 0.0 || d.iter().any(|v| !v.is_finite()) {
            d = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
            history.clear();
        }
        // Without curvature information, cap the first move at 0.1 of the box.
        let mut step = if history.is_empty() {
            let dmax = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if dmax > 0.0 { (0.1 / dmax).min(1.0) } else { 1.0 }
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..30 {
            let mut trial: Vec<f64> = (0..n).map(|i| z[i] + step * d[i]).collect();
            project(&mut trial);
            let moved: Vec<f64> = (0..n).map(|i| trial[i] - z[i]).collect();
            if moved.iter().all(|m| m.abs() < 1e-15) {
                break;
            }
            let ft = match prob.eval(&trial) {
                Ok(v) => v,
                Err(e) => return Ok(finish(prob, SolverStatus::Aborted(e), iterations, trace)),
            };
            if ft <= fz + 1e-4 * dot(&g, &moved) {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((z_new, f_new)) = accepted else {
            break SolverStatus::Stalled;
        };
        iterations += 1;
        trace.push(f_new);
        let g_new = match prob.gradient(&z_new, f_new, options.fd_step) {
            Ok(g) => g,
            Err(e) => return Ok(finish(prob, SolverStatus::Aborted(e), iterations, trace)),
        };
        let s: Vec<f64> = (0..n).map(|i| z_new[i] - z[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).max(f64::MIN_POSITIVE) {
            if history.len() == options.history {
                history.remove(0);
            }
            history.push((s, y, 1.0 / sy));
        }
        let decrease = (fz - f_new) / fz.abs().max(f_new.abs()).max(1.0);
        z = z_new;
        fz = f_new;
        g = g_new;
        if decrease <= options.tolerance {
            break SolverStatus::Converged;
        }
    };
    Ok(finish(prob, status, iterations, trace))
}

/// Box bounds on spot size and speed (m, m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBounds {
    pub spot_size: (f64, f64),
    pub speed: (f64, f64),
}

impl ParameterBounds {
    /// 10 µm to 1 mm spot size, 1 cm/s to 10 m/s speed.
    pub fn example() -> Self {
        Self {
            spot_size: (1e-5, 1e-3),
            speed: (0.01, 10.0),
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi > lo && hi.is_finite();
        if !ok(self.spot_size) {
            return Err(OptimizeError::Bounds(0));
        }
        if !ok(self.speed) {
            return Err(OptimizeError::Bounds(1));
        }
        Ok(())
    }

    pub fn contains(&self, beam: &BeamParameters) -> bool {
        let (sl, sh) = self.spot_size;
        let (vl, vh) = self.speed;
        beam.spot_size.iter().all(|s| *s >= sl && *s <= sh) && beam.speed.iter().all(|v| *v >= vl && *v <= vh)
    }
}

/// Everything a greedy driver needs besides the schedule.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub material: Material,
    pub path: &'a ScanPath,
    pub jump_dwell: f64,
    pub spec: ObjectiveSpec,
    pub sampling: PathSampling,
    pub bounds: ParameterBounds,
    pub solver: SolverOptions,
}

impl<'a> Problem<'a> {
    pub fn new(
        material: Material,
        path: &'a ScanPath,
        jump_dwell: f64,
        spec: ObjectiveSpec,
        bounds: ParameterBounds,
        solver: SolverOptions,
    ) -> Result<Self, OptimizeError> {
        material.validate()?;
        spec.validate(material.initial_temperature)?;
        bounds.validate()?;
        solver.validate()?;
        let sampling = PathSampling::for_spec(path, &spec)?;
        Ok(Self {
            material,
            path,
            jump_dwell,
            spec,
            sampling,
            bounds,
            solver,
        })
    }

    /// Exact global objective of a full beam vector.
    pub fn evaluate(&self, beam: &BeamParameters) -> Result<Evaluation, OptimizeError> {
        let model = ThermalModel::new(self.material, self.path, beam.clone(), self.jump_dwell)?;
        Ok(global_objective(&model, &self.spec, &self.sampling)?)
    }

    /// Smoothing scale from the spec, or calibrated on a single pass with the
    /// first segment's parameters (within 5 K of the exact maximum).
    pub fn smoothing(&self, beam: &BeamParameters) -> Result<f64, OptimizeError> {
        match self.spec.smoothing {
            Some(k) => Ok(k),
            None => Ok(calibrate_smoothing(
                &self.material,
                beam.spot_size[0],
                beam.speed[0],
                self.spec.time_sampling,
                0.1,
                5.0,
            )?),
        }
    }
}

/// Constant window size and freeze count, in segments or hatch lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSchedule {
    pub size: usize,
    pub freeze: usize,
}

impl WindowSchedule {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.size == 0 || self.freeze == 0 || self.freeze > self.size {
            return Err(OptimizeError::Schedule("need 1 <= freeze <= size"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    /// First and last unit (segment or hatch line) of the window, 0-based.
    pub first: usize,
    pub last: usize,
    pub freeze: usize,
    pub j_before: f64,
    pub j_after: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: SolverStatus,
    /// Window objective grew more than tenfold; frozen anyway.
    pub flagged: bool,
    /// First segment frozen by this window and the parameters it was frozen
    /// with.
    pub frozen_from: usize,
    pub frozen: BeamParameters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    pub beam: BeamParameters,
    pub j_init: f64,
    pub j_opt: f64,
    pub evaluation: Evaluation,
    pub trace: Vec<WindowRecord>,
    /// Coefficients per hatch line for the line-wise driver.
    pub coefficients: Option<Vec<LineCoefficients>>,
    pub smoothing: f64,
}

impl GreedyOutcome {
    pub fn aborted(&self) -> bool {
        self.trace.iter().any(|r| matches!(r.status, SolverStatus::Aborted(_)))
    }
}

/// Sliding-window sweep over segments: solve the window, copy the result to
/// the window and its last values to every later segment, freeze the leading
/// segments, advance.
pub fn greedy_segmentwise(problem: &Problem<'_>, schedule: WindowSchedule, initial: &BeamParameters) -> Result<GreedyOutcome, OptimizeError> {
    schedule.validate()?;
    let path = problem.path;
    let n = path.len();
    initial.validate(n)?;
    if !problem.bounds.contains(initial) {
        return Err(OptimizeError::StartOutOfBounds(0));
    }
    let j_init = problem.evaluate(initial)?.report.j;
    let smoothing = problem.smoothing(initial)?;
    let mut beam = initial.clone();
    let mut trace = Vec::new();
    let (mut p, mut q, mut r) = (0, schedule.size.min(n) - 1, schedule.freeze.min(n));
    let ParameterBounds { spot_size: (sl, sh), speed: (vl, vh) } = problem.bounds;
    while p < n {
        let window = Window::new(p, q, r, n)?;
        let m = window.len();
        let mut objective = WindowObjective::new(
            problem.material,
            path,
            problem.jump_dwell,
            &problem.spec,
            &problem.sampling,
            window,
            beam.clone(),
            MaxMethod::Smoothed { k: smoothing },
            true,
        )?;
        // Layout: [σ_p, v_p, σ_{p+1}, v_{p+1}, ...].
        let x0: Vec<f64> = (p..=q).flat_map(|k| [beam.spot_size[k], beam.speed[k]]).collect();
        let lower: Vec<f64> = (0..m).flat_map(|_| [sl, vl]).collect();
        let upper: Vec<f64> = (0..m).flat_map(|_| [sh, vh]).collect();
        let outcome = solve_box_qn(
            |x: &[f64]| {
                let s: Vec<f64> = x.iter().step_by(2).copied().collect();
                let v: Vec<f64> = x.iter().skip(1).step_by(2).copied().collect();
                objective.evaluate(&s, &v)
            },
            &x0,
            &lower,
            &upper,
            &problem.solver,
        )?;
        let flagged = outcome.value > 10.0 * outcome.initial_value;
        if flagged {
            warn!("window [{p}, {q}] objective grew from {} to {}", outcome.initial_value, outcome.value);
        }
        if let SolverStatus::Aborted(e) = &outcome.status {
            warn!("window [{p}, {q}] aborted ({e}); freezing best candidate");
        }
        for (i, k) in (p..=q).enumerate() {
            beam.spot_size[k] = outcome.x[2 * i];
            beam.speed[k] = outcome.x[2 * i + 1];
        }
        for k in q + 1..n {
            beam.spot_size[k] = beam.spot_size[q];
            beam.speed[k] = beam.speed[q];
        }
        info!(
            "window [{p}, {q}] J {:.4} -> {:.4} in {} iterations",
            outcome.initial_value, outcome.value, outcome.iterations
        );
        trace.push(WindowRecord {
            first: p,
            last: q,
            freeze: r,
            j_before: outcome.initial_value,
            j_after: outcome.value,
            iterations: outcome.iterations,
            evaluations: outcome.evaluations,
            status: outcome.status,
            flagged,
            frozen_from: p,
            frozen: BeamParameters {
                spot_size: beam.spot_size[p..p + r].to_vec(),
                speed: beam.speed[p..p + r].to_vec(),
            },
        });
        p += r;
        q = (q + r).min(n - 1);
        if p < n {
            r = schedule.freeze.min(q - p + 1);
        }
    }
    let evaluation = problem.evaluate(&beam)?;
    Ok(GreedyOutcome {
        j_opt: evaluation.report.j,
        beam,
        j_init,
        evaluation,
        trace,
        coefficients: None,
        smoothing,
    })
}

/// Coefficients of `F(g) = C₁(1 + C₂ / (1 + C₃ g^C₄))` for spot size and speed
/// on one hatch line; `g` is the scanning distance from the line start (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineCoefficients {
    pub spot_size: [f64; 4],
    pub speed: [f64; 4],
}

impl LineCoefficients {
    fn to_vec(self) -> Vec<f64> {
        self.spot_size.iter().chain(&self.speed).copied().collect()
    }

    fn from_slice(x: &[f64]) -> Self {
        Self {
            spot_size: [x[0], x[1], x[2], x[3]],
            speed: [x[4], x[5], x[6], x[7]],
        }
    }
}

/// Per-line decaying profile `C₁(1 + C₂ / (1 + C₃ g^C₄))`.
pub fn profile(c: &[f64; 4], g: f64) -> f64 {
    c[0] * (1.0 + c[1] / (1.0 + c[2] * g.powf(c[3])))
}

/// Bounds on the profile coefficients other than the leading scale, which is
/// bounded by the parameter bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterFunctionModel {
    pub amplitude: (f64, f64),
    pub rate: (f64, f64),
    pub exponent: (f64, f64),
    /// Starting amplitude, rate and exponent.
    pub initial: [f64; 3],
}

impl Default for ParameterFunctionModel {
    fn default() -> Self {
        Self {
            amplitude: (0.0, 20.0),
            rate: (0.0, 1e7),
            exponent: (0.5, 4.0),
            initial: [0.5, 5e6, 1.0],
        }
    }
}

impl ParameterFunctionModel {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let [a, c, e] = self.initial;
        let within = |v: f64, (lo, hi): (f64, f64)| lo < hi && v >= lo && v <= hi;
        if !(within(a, self.amplitude) && within(c, self.rate) && within(e, self.exponent)) || self.amplitude.0 < 0.0 || self.rate.0 < 0.0 || self.exponent.0 <= 0.0 {
            return Err(OptimizeError::Model("initial coefficients must lie inside valid bounds".into()));
        }
        Ok(())
    }

    fn lower_upper(&self, bounds: &ParameterBounds) -> (Vec<f64>, Vec<f64>) {
        let (a, c, e) = (self.amplitude, self.rate, self.exponent);
        let lower = vec![bounds.spot_size.0, a.0, c.0, e.0, bounds.speed.0, a.0, c.0, e.0];
        let upper = vec![bounds.spot_size.1, a.1, c.1, e.1, bounds.speed.1, a.1, c.1, e.1];
        (lower, upper)
    }

    /// Coefficients whose profile is the least-squares fit to the constant
    /// `value` over the line's segment starts, with the other coefficients at
    /// their initial values. The scale is clamped into `range`.
    pub fn fit_constant(&self, offsets: &[f64], value: f64, range: (f64, f64)) -> [f64; 4] {
        let [a, c, e] = self.initial;
        let shape: Vec<f64> = offsets.iter().map(|&g| profile(&[1.0, a, c, e], g)).collect();
        let scale = value * shape.iter().sum::<f64>() / shape.iter().map(|s| s * s).sum::<f64>();
        [scale.clamp(range.0, range.1), a, c, e]
    }
}

/// Distance of every segment start from the start of its hatch line (m).
pub fn line_offsets(path: &ScanPath) -> Vec<f64> {
    (0..path.len())
        .map(|k| path.gamma_start(k) - path.gamma_start(path.first_segment_of_line(path.line_of_segment(k))))
        .collect()
}

/// Per-segment spot sizes and speeds induced by per-line coefficients,
/// clamped into the parameter bounds.
pub fn eval_parameter_functions(coefficients: &[LineCoefficients], path: &ScanPath, bounds: &ParameterBounds) -> Result<BeamParameters, OptimizeError> {
    if coefficients.len() != path.line_count() {
        return Err(OptimizeError::Model(format!(
            "expected {} coefficient sets, got {}",
            path.line_count(),
            coefficients.len()
        )));
    }
    let offsets = line_offsets(path);
    let mut beam = BeamParameters::uniform(path.len(), 0.0, 0.0);
    for k in 0..path.len() {
        let c = &coefficients[path.line_of_segment(k)];
        beam.spot_size[k] = profile(&c.spot_size, offsets[k]).clamp(bounds.spot_size.0, bounds.spot_size.1);
        beam.speed[k] = profile(&c.speed, offsets[k]).clamp(bounds.speed.0, bounds.speed.1);
    }
    Ok(beam)
}

/// Starting coefficients for every line: each line's profile fitted to the
/// constant initial spot size and speed.
pub fn initial_coefficients(model: &ParameterFunctionModel, path: &ScanPath, bounds: &ParameterBounds, spot_size: f64, speed: f64) -> Vec<LineCoefficients> {
    let offsets = line_offsets(path);
    path.hatch_lines()
        .iter()
        .map(|line| {
            let g = &offsets[line.first_segment..=line.last_segment];
            LineCoefficients {
                spot_size: model.fit_constant(g, spot_size, bounds.spot_size),
                speed: model.fit_constant(g, speed, bounds.speed),
            }
        })
        .collect()
}

/// Sliding-window sweep over hatch lines, optimizing the profile
/// coefficients of the lines in the window.
pub fn greedy_linewise(
    problem: &Problem<'_>,
    schedule: WindowSchedule,
    model: &ParameterFunctionModel,
    initial: &[LineCoefficients],
) -> Result<GreedyOutcome, OptimizeError> {
    schedule.validate()?;
    model.validate()?;
    let path = problem.path;
    let lines = path.line_count();
    let n = path.len();
    let (lower1, upper1) = model.lower_upper(&problem.bounds);
    for c in initial {
        for (i, v) in c.to_vec().into_iter().enumerate() {
            if !(v >= lower1[i] && v <= upper1[i]) {
                return Err(OptimizeError::StartOutOfBounds(i));
            }
        }
    }
    let mut coefficients = initial.to_vec();
    let start_beam = eval_parameter_functions(&coefficients, path, &problem.bounds)?;
    let j_init = problem.evaluate(&start_beam)?.report.j;
    let smoothing = problem.smoothing(&start_beam)?;
    let maps = path.hatch_line_maps();
    let segment_end = |l: usize| if l + 1 < lines { maps.first_segment[l + 1] - 1 } else { n - 1 };
    let mut trace = Vec::new();
    let (mut p, mut q, mut r) = (0, schedule.size.min(lines) - 1, schedule.freeze.min(lines));
    while p < lines {
        let (first, last) = (maps.first_segment[p], segment_end(q));
        let freeze_segments = segment_end(p + r - 1) - first + 1;
        let window = Window::new(first, last, freeze_segments, n)?;
        let beam = eval_parameter_functions(&coefficients, path, &problem.bounds)?;
        let mut objective = WindowObjective::new(
            problem.material,
            path,
            problem.jump_dwell,
            &problem.spec,
            &problem.sampling,
            window,
            beam,
            MaxMethod::Smoothed { k: smoothing },
            true,
        )?;
        let x0: Vec<f64> = coefficients[p..=q].iter().flat_map(|c| c.to_vec()).collect();
        let count = q - p + 1;
        let lower: Vec<f64> = (0..count).flat_map(|_| lower1.clone()).collect();
        let upper: Vec<f64> = (0..count).flat_map(|_| upper1.clone()).collect();
        let mut trial = coefficients.clone();
        let outcome = solve_box_qn(
            |x: &[f64]| -> Result<f64, OptimizeError> {
                for (i, l) in (p..=q).enumerate() {
                    trial[l] = LineCoefficients::from_slice(&x[8 * i..8 * i + 8]);
                }
                let b = eval_parameter_functions(&trial, path, &problem.bounds)?;
                Ok(objective.evaluate(&b.spot_size[first..=last], &b.speed[first..=last])?)
            },
            &x0,
            &lower,
            &upper,
            &problem.solver,
        )?;
        let flagged = outcome.value > 10.0 * outcome.initial_value;
        if flagged {
            warn!("lines [{p}, {q}] objective grew from {} to {}", outcome.initial_value, outcome.value);
        }
        if let SolverStatus::Aborted(e) = &outcome.status {
            warn!("lines [{p}, {q}] aborted ({e}); freezing best candidate");
        }
        for (i, l) in (p..=q).enumerate() {
            coefficients[l] = LineCoefficients::from_slice(&outcome.x[8 * i..8 * i + 8]);
        }
        for l in q + 1..lines {
            coefficients[l] = coefficients[q];
        }
        let frozen_beam = eval_parameter_functions(&coefficients, path, &problem.bounds)?;
        let frozen_range = first..=segment_end(p + r - 1);
        info!(
            "lines [{p}, {q}] J {:.4} -> {:.4} in {} iterations",
            outcome.initial_value, outcome.value, outcome.iterations
        );
        trace.push(WindowRecord {
            first: p,
            last: q,
            freeze: r,
            j_before: outcome.initial_value,
            j_after: outcome.value,
            iterations: outcome.iterations,
            evaluations: outcome.evaluations,
            status: outcome.status,
            flagged,
            frozen_from: first,
            frozen: BeamParameters {
                spot_size: frozen_beam.spot_size[frozen_range.clone()].to_vec(),
                speed: frozen_beam.speed[frozen_range].to_vec(),
            },
        });
        p += r;
        q = (q + r).min(lines - 1);
        if p < lines {
            r = schedule.freeze.min(q - p + 1);
        }
    }
    let beam = eval_parameter_functions(&coefficients, path, &problem.bounds)?;
    let evaluation = problem.evaluate(&beam)?;
    Ok(GreedyOutcome {
        j_opt: evaluation.report.j,
        beam,
        j_init,
        evaluation,
        trace,
        coefficients: Some(coefficients),
        smoothing,
    })
}

/// Extends parameters optimized on the first hatch lines of `path` to all of
/// its lines by repeating the last optimized line. Lines whose segment count
/// differs are resampled by relative position along the line.
pub fn extend_solution(partial: &BeamParameters, path: &ScanPath) -> Result<BeamParameters, OptimizeError> {
    let lines = path.hatch_lines();
    let covered = lines
        .iter()
        .take_while(|l| l.last_segment < partial.len())
        .count();
    if covered == 0 || lines[covered - 1].last_segment + 1 != partial.len() {
        return Err(OptimizeError::Model(format!(
            "{} parameter pairs do not cover whole hatch lines",
            partial.len()
        )));
    }
    let source = &lines[covered - 1];
    let source_start = path.gamma_start(source.first_segment);
    let source_length = path.gamma_end(source.last_segment) - source_start;
    let mut beam = BeamParameters::uniform(path.len(), 0.0, 0.0);
    beam.spot_size[..partial.len()].copy_from_slice(&partial.spot_size);
    beam.speed[..partial.len()].copy_from_slice(&partial.speed);
    for line in &lines[covered..] {
        let same = line.segment_count() == source.segment_count();
        let start = path.gamma_start(line.first_segment);
        let length = path.gamma_end(line.last_segment) - start;
        for (i, k) in line.segments().enumerate() {
            let src = if same {
                source.first_segment + i
            } else {
                let mid = 0.5 * (path.gamma_start(k) + path.gamma_end(k)) - start;
                let target = source_start + mid / length * source_length;
                source
                    .segments()
                    .find(|&j| path.gamma_end(j) >= target)
                    .unwrap_or(source.last_segment)
            };
            beam.spot_size[k] = partial.spot_size[src];
            beam.speed[k] = partial.speed[src];
        }
    }
    Ok(beam)
}
