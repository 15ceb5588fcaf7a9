//! Tracking objectives: squared deviation of maximum temperatures from
//! reference values, integrated along the beam path (surface reference) and
//! along the offset secondary path (melt reference).
//!
//! Objective values are in K²·m: residuals in kelvin, path measure in meters.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scanpath::{OffsetMode, PathError, Point3, ScanPath, SecondaryPath};
use crate::thermal::{BeamParameters, Material, MaxMethod, SamplePlan, ThermalError, ThermalModel, TimeSampling};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("invalid objective specification: {0}")]
    Spec(String),
    #[error("window [{first}, {last}] with freeze count {freeze} is invalid for {len} segments")]
    Window {
        first: usize,
        last: usize,
        freeze: usize,
        len: usize,
    },
    #[error("segment {segment} lies outside window [{first}, {last}]")]
    OutsideWindow { segment: usize, first: usize, last: usize },
    #[error("expected {expected} window parameters, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Offset of the secondary path from the beam path (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetSpec {
    pub width: f64,
    pub depth: f64,
    #[serde(default)]
    pub mode: OffsetMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    /// Reference maximum temperature on the secondary path (K).
    pub melt_temperature: f64,
    /// Reference maximum temperature on the beam path (K).
    pub surface_temperature: f64,
    pub melt_weight: f64,
    pub surface_weight: f64,
    /// Length masked out at both ends of every hatch line (m).
    pub end_margin: f64,
    /// Path sample spacing (m).
    pub sample_spacing: f64,
    pub offset: OffsetSpec,
    pub time_sampling: TimeSampling,
    /// Log-sum-exp scale (1/K) used during optimization. `None` asks the
    /// driver to calibrate it.
    pub smoothing: Option<f64>,
}

impl ObjectiveSpec {
    /// Settings of the snake-path example: W₁ = 0.7, W₂ = 0.3, 0.4 mm end mask,
    /// 50 µm samples, secondary path 100 µm aside and 50 µm deep.
    pub fn example() -> Self {
        Self {
            melt_temperature: 1800.0,
            surface_temperature: 2800.0,
            melt_weight: 0.7,
            surface_weight: 0.3,
            end_margin: 0.4e-3,
            sample_spacing: 50e-6,
            offset: OffsetSpec {
                width: 100e-6,
                depth: 50e-6,
                mode: OffsetMode::GlobalOffset,
            },
            time_sampling: TimeSampling {
                spacing_factor: 0.25,
                radius: Some(1e-3),
            },
            smoothing: None,
        }
    }

    pub fn validate(&self, initial_temperature: f64) -> Result<(), ObjectiveError> {
        let fail = |m: &str| Err(ObjectiveError::Spec(m.to_string()));
        if !(self.melt_weight >= 0.0 && self.surface_weight >= 0.0) {
            return fail("weights must be nonnegative");
        }
        if !(self.melt_weight + self.surface_weight > 0.0) {
            return fail("at least one weight must be positive");
        }
        if !(self.melt_temperature > initial_temperature && self.surface_temperature > self.melt_temperature) {
            return fail("references must satisfy u_init < melt < surface");
        }
        if !(self.sample_spacing > 0.0 && self.sample_spacing.is_finite()) {
            return fail("sample spacing must be positive");
        }
        if !(self.end_margin >= 0.0) {
            return fail("end margin must be nonnegative");
        }
        if !(self.offset.depth >= 0.0 && self.offset.width.is_finite()) {
            return fail("secondary offset needs a finite width and nonnegative depth");
        }
        if !(self.time_sampling.spacing_factor > 0.0) {
            return fail("time sample spacing factor must be positive");
        }
        if let Some(r) = self.time_sampling.radius {
            if !(r > 0.0) {
                return fail("time sampling radius must be positive");
            }
        }
        if let Some(k) = self.smoothing {
            if !(k > 0.0 && k.is_finite()) {
                return fail("smoothing scale must be positive");
            }
        }
        Ok(())
    }
}

/// 0 within `margin` of either end of a hatch line of length `line_length`,
/// 1 elsewhere. `offset` is the arclength from the line start.
pub fn alpha_mask(offset: f64, line_length: f64, margin: f64) -> f64 {
    if offset < margin || line_length - offset < margin {
        0.0
    } else {
        1.0
    }
}

/// Segments `first..=last`; the leading `freeze` of them are fixed after the
/// window is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub first: usize,
    pub last: usize,
    pub freeze: usize,
}

impl Window {
    pub fn new(first: usize, last: usize, freeze: usize, segments: usize) -> Result<Self, ObjectiveError> {
        if first > last || last >= segments || freeze == 0 || freeze > last - first + 1 {
            return Err(ObjectiveError::Window {
                first,
                last,
                freeze,
                len: segments,
            });
        }
        Ok(Self { first, last, freeze })
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Weight of segment `k` inside `window`: 1 on the segments about to be
/// frozen, then decreasing quadratically with scanning distance to 0 at the
/// window end.
pub fn beta_weight(path: &ScanPath, window: &Window, k: usize) -> Result<f64, ObjectiveError> {
    if k < window.first || k > window.last {
        return Err(ObjectiveError::OutsideWindow {
            segment: k,
            first: window.first,
            last: window.last,
        });
    }
    if k < window.first + window.freeze {
        return Ok(1.0);
    }
    let end = path.gamma_end(window.last);
    let ratio = (end - path.gamma_start(k)) / (end - path.gamma_start(window.first));
    Ok(ratio * ratio)
}

/// One midpoint sample, with its image on the secondary path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub segment: usize,
    pub line: usize,
    pub gamma: f64,
    /// Arclength covered by the sample (m).
    pub weight: f64,
    pub alpha: f64,
    pub beam_point: Point3,
    pub secondary_point: Point3,
}

/// Midpoint discretization of the beam and secondary paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSampling {
    pub samples: Vec<PathSample>,
    pub spacing: f64,
    /// Index range into `samples` per segment.
    ranges: Vec<std::ops::Range<usize>>,
}

impl PathSampling {
    pub fn new(path: &ScanPath, secondary: &SecondaryPath, spacing: f64, margin: f64) -> Self {
        let mut samples = Vec::new();
        let mut ranges = Vec::with_capacity(path.len());
        for (l, line) in path.hatch_lines().iter().enumerate() {
            let line_start = path.gamma_start(line.first_segment);
            let line_length = path.gamma_end(line.last_segment) - line_start;
            for k in line.segments() {
                let seg = path.segment(k);
                let n = ((seg.length / spacing * (1.0 - 1e-12)).ceil() as usize).max(1);
                let first = samples.len();
                for j in 0..n {
                    let f = (j as f64 + 0.5) / n as f64;
                    let gamma = path.gamma_start(k) + f * seg.length;
                    samples.push(PathSample {
                        segment: k,
                        line: l,
                        gamma,
                        weight: seg.length / n as f64,
                        alpha: alpha_mask(gamma - line_start, line_length, margin),
                        beam_point: seg.point_at(f),
                        secondary_point: secondary.point_at(k, f),
                    });
                }
                ranges.push(first..samples.len());
            }
        }
        Self { samples, spacing, ranges }
    }

    pub fn for_spec(path: &ScanPath, spec: &ObjectiveSpec) -> Result<Self, ObjectiveError> {
        let secondary = SecondaryPath::new(path, spec.offset.width, spec.offset.depth, spec.offset.mode)?;
        Ok(Self::new(path, &secondary, spec.sample_spacing, spec.end_margin))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn segment_samples(&self, k: usize) -> &[PathSample] {
        &self.samples[self.ranges[k].clone()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineBreakdown {
    /// 1-based hatch line number.
    pub line: usize,
    pub g1: f64,
    pub g2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSummary {
    pub h_mm: f64,
    pub n_samples: usize,
}

/// Objective values in K²·m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    #[serde(rename = "J")]
    pub j: f64,
    pub f1: f64,
    pub f2: f64,
    pub per_line: Vec<LineBreakdown>,
    pub sampling: SamplingSummary,
}

/// Maximum temperatures at every path sample, with the resulting report.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: ObjectiveReport,
    /// Maximum temperature on the beam path, per sample.
    pub surface_max: Vec<f64>,
    /// Maximum temperature on the secondary path, per sample.
    pub secondary_max: Vec<f64>,
}

/// Full objective with exact sampled maxima over the whole scan.
pub fn global_objective(
    model: &ThermalModel<'_>,
    spec: &ObjectiveSpec,
    sampling: &PathSampling,
) -> Result<Evaluation, ObjectiveError> {
    spec.validate(model.material().initial_temperature)?;
    let path = model.path();
    let plan = model.sample_plan(0, path.len() - 1, spec.time_sampling);
    let maxima: Vec<(f64, f64)> = sampling
        .samples
        .par_iter()
        .map(|s| {
            let ms = model.max_temperature_planned(&s.beam_point, &plan, MaxMethod::ExactSampled)?;
            let mw = model.max_temperature_planned(&s.secondary_point, &plan, MaxMethod::ExactSampled)?;
            Ok((ms, mw))
        })
        .collect::<Result<_, ThermalError>>()?;
    let mut per_line: Vec<LineBreakdown> = (0..path.line_count())
        .map(|l| LineBreakdown { line: l + 1, g1: 0.0, g2: 0.0 })
        .collect();
    let (mut f1, mut f2) = (0.0, 0.0);
    for (s, &(ms, mw)) in sampling.samples.iter().zip(&maxima) {
        let w = s.weight * s.alpha;
        let g1 = w * (mw - spec.melt_temperature).powi(2);
        let g2 = w * (ms - spec.surface_temperature).powi(2);
        per_line[s.line].g1 += g1;
        per_line[s.line].g2 += g2;
        f1 += g1;
        f2 += g2;
    }
    Ok(Evaluation {
        report: ObjectiveReport {
            j: spec.melt_weight * f1 + spec.surface_weight * f2,
            f1,
            f2,
            per_line,
            sampling: SamplingSummary {
                h_mm: sampling.spacing * 1e3,
                n_samples: sampling.len(),
            },
        },
        surface_max: maxima.iter().map(|m| m.0).collect(),
        secondary_max: maxima.iter().map(|m| m.1).collect(),
    })
}

/// A point tracked by the local objective and its weighted reference.
#[derive(Debug, Clone, Copy)]
struct Target {
    point: Point3,
    reference: f64,
    weight: f64,
}

/// Memoized heat input at one target. Segments before the window are frozen,
/// so their summed rise depends only on time; window segments are keyed by
/// their own parameters and start time as well.
#[derive(Debug, Default)]
struct TargetCache {
    history: HashMap<u64, f64>,
    window: HashMap<(usize, u64, u64, u64, u64), f64>,
}

const CACHE_LIMIT: usize = 1 << 16;

impl TargetCache {
    fn trim(&mut self) {
        if self.history.len() > CACHE_LIMIT {
            self.history.clear();
        }
        if self.window.len() > CACHE_LIMIT {
            self.window.clear();
        }
    }
}

/// Windowed objective `W₁g₁ + W₂g₂` as a function of the window's spot sizes
/// and speeds. Segments before the window keep the values in `base`;
/// segments after it do not influence the window.
pub struct WindowObjective<'a> {
    material: Material,
    path: &'a ScanPath,
    jump_dwell: f64,
    window: Window,
    base: BeamParameters,
    targets: Vec<Target>,
    plan: SamplePlan,
    method: MaxMethod,
    caches: Vec<TargetCache>,
    evaluations: usize,
}

impl<'a> WindowObjective<'a> {
    /// `base` supplies the frozen history and the spot sizes that fix the
    /// time sample plan; `beta` switches the window weighting on.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        material: Material,
        path: &'a ScanPath,
        jump_dwell: f64,
        spec: &ObjectiveSpec,
        sampling: &PathSampling,
        window: Window,
        base: BeamParameters,
        method: MaxMethod,
        beta: bool,
    ) -> Result<Self, ObjectiveError> {
        spec.validate(material.initial_temperature)?;
        Window::new(window.first, window.last, window.freeze, path.len())?;
        base.validate(path.len())?;
        let mut targets = Vec::new();
        for k in window.first..=window.last {
            let b = if beta { beta_weight(path, &window, k)? } else { 1.0 };
            for s in sampling.segment_samples(k) {
                let w = s.weight * s.alpha * b;
                if w == 0.0 {
                    continue;
                }
                if spec.melt_weight > 0.0 {
                    targets.push(Target {
                        point: s.secondary_point,
                        reference: spec.melt_temperature,
                        weight: spec.melt_weight * w,
                    });
                }
                if spec.surface_weight > 0.0 {
                    targets.push(Target {
                        point: s.beam_point,
                        reference: spec.surface_temperature,
                        weight: spec.surface_weight * w,
                    });
                }
            }
        }
        let plan = SamplePlan::for_window(path, &base, window.first, window.last, spec.time_sampling);
        let caches = targets.iter().map(|_| TargetCache::default()).collect();
        Ok(Self {
            material,
            path,
            jump_dwell,
            window,
            base,
            targets,
            plan,
            method,
            caches,
            evaluations: 0,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Full beam vector with the window entries replaced.
    pub fn beam_with(&self, spot_size: &[f64], speed: &[f64]) -> Result<BeamParameters, ObjectiveError> {
        let n = self.window.len();
        for got in [spot_size.len(), speed.len()] {
            if got != n {
                return Err(ObjectiveError::Dimension { expected: n, got });
            }
        }
        let mut beam = self.base.clone();
        beam.spot_size[self.window.first..=self.window.last].copy_from_slice(spot_size);
        beam.speed[self.window.first..=self.window.last].copy_from_slice(speed);
        Ok(beam)
    }

    /// Objective value for the given window spot sizes and speeds.
    pub fn evaluate(&mut self, spot_size: &[f64], speed: &[f64]) -> Result<f64, ObjectiveError> {
        let beam = self.beam_with(spot_size, speed)?;
        let model = ThermalModel::new(self.material, self.path, beam, self.jump_dwell)?;
        let (first, last) = (self.window.first, self.window.last);
        let plan = &self.plan;
        let path = self.path;
        let method = self.method;
        let u_init = self.material.initial_temperature;
        self.evaluations += 1;
        let terms: Vec<f64> = self
            .targets
            .par_iter()
            .zip(self.caches.par_iter_mut())
            .map(|(target, cache)| {
                cache.trim();
                let mut samples: Vec<(f64, f64)> = Vec::new(); // (u, dt)
                for (k, f) in plan.positions(path, &target.point) {
                    let t = model.time_at(k, f);
                    let history = match cache.history.get(&t.to_bits()) {
                        Some(&h) => h,
                        None => {
                            let h = model.partial_rise(&target.point, t, 0..first)?;
                            cache.history.insert(t.to_bits(), h);
                            h
                        }
                    };
                    let mut u = u_init + history;
                    for j in first..=k {
                        let key = (
                            j,
                            t.to_bits(),
                            model.beam().spot_size[j].to_bits(),
                            model.beam().speed[j].to_bits(),
                            model.timing().start(j).to_bits(),
                        );
                        u += match cache.window.get(&key) {
                            Some(&c) => c,
                            None => {
                                let c = model.segment_contribution(&target.point, t, j)?;
                                cache.window.insert(key, c);
                                c
                            }
                        };
                    }
                    let n = plan.counts[k - first] as f64;
                    samples.push((u, (model.timing().end(k) - model.timing().start(k)) / n));
                }
                let m = if samples.is_empty() {
                    model.partial_rise(&target.point, model.timing().end(last), 0..last + 1)? + u_init
                } else {
                    let best = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
                    match method {
                        MaxMethod::Smoothed { k } => {
                            let sum: f64 = samples.iter().map(|&(u, dt)| dt * (k * (u - best)).exp()).sum();
                            best + sum.ln() / k
                        }
                        MaxMethod::ExactSampled => model.max_temperature_planned(&target.point, plan, method)?,
                    }
                };
                Ok(target.weight * (m - target.reference).powi(2))
            })
            .collect::<Result<_, ThermalError>>()?;
        Ok(terms.iter().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scanpath::PathGenerator;
    use approx::assert_relative_eq;

    fn example_path() -> ScanPath {
        PathGenerator::Snake {
            lines: 5,
            line_length_mm: 5.0,
            line_offset_mm: 0.2,
            segments_per_line: 10,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn spec_guards() {
        let mut spec = ObjectiveSpec::example();
        assert!(spec.validate(1000.0).is_ok());
        spec.melt_weight = 0.0;
        spec.surface_weight = 0.0;
        assert!(spec.validate(1000.0).is_err());
        let mut spec = ObjectiveSpec::example();
        spec.melt_temperature = 3000.0;
        assert!(spec.validate(1000.0).is_err());
        spec = ObjectiveSpec::example();
        spec.sample_spacing = 0.0;
        assert!(spec.validate(1000.0).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_mask(0.2e-3, 5e-3, 0.4e-3), 0.0);
        assert_eq!(alpha_mask(4.7e-3, 5e-3, 0.4e-3), 0.0);
        assert_eq!(alpha_mask(2.5e-3, 5e-3, 0.4e-3), 1.0);
        assert_eq!(alpha_mask(0.0, 5e-3, 0.0), 1.0);
    }

    #[test]
    fn beta_table() {
        let path = example_path();
        let w = Window::new(0, 4, 1, path.len()).unwrap();
        let betas: Vec<f64> = (0..5).map(|k| beta_weight(&path, &w, k).unwrap()).collect();
        for (b, e) in betas.iter().zip([1.0, 0.64, 0.36, 0.16, 0.04]) {
            assert_relative_eq!(*b, e, epsilon = 1e-12);
        }
        let all = Window::new(3, 7, 5, path.len()).unwrap();
        assert!((3..=7).all(|k| beta_weight(&path, &all, k).unwrap() == 1.0));
        assert!(beta_weight(&path, &w, 5).is_err());
    }

    #[test]
    fn window_guards() {
        assert!(Window::new(2, 1, 1, 10).is_err());
        assert!(Window::new(0, 10, 1, 10).is_err());
        assert!(Window::new(0, 4, 0, 10).is_err());
        assert!(Window::new(0, 4, 6, 10).is_err());
    }

    #[test]
    fn sampling_layout() {
        let path = example_path();
        let spec = ObjectiveSpec::example();
        let s = PathSampling::for_spec(&path, &spec).unwrap();
        assert_eq!(s.len(), 500);
        for k in 0..path.len() {
            let w: f64 = s.segment_samples(k).iter().map(|p| p.weight).sum();
            assert_relative_eq!(w, 0.5e-3, max_relative = 1e-12);
        }
        // 8 of 100 samples per line fall inside the two 0.4 mm end masks.
        let masked = s.samples.iter().filter(|p| p.alpha == 0.0).count();
        assert_eq!(masked, 5 * 16);
        let p = s.samples[3];
        assert_relative_eq!(p.secondary_point.y, p.beam_point.y + 1e-4);
        assert_eq!(p.secondary_point.z, -5e-5);
    }

    #[test]
    fn fully_masked_window_is_zero() {
        let path = ScanPath::new(&[(Point3::surface(0.0, 0.0), Point3::surface(0.5e-3, 0.0))]).unwrap();
        let spec = ObjectiveSpec {
            end_margin: 1e-3,
            ..ObjectiveSpec::example()
        };
        let sampling = PathSampling::for_spec(&path, &spec).unwrap();
        let base = BeamParameters::uniform(1, 2e-4, 0.5);
        let w = Window::new(0, 0, 1, 1).unwrap();
        let mut obj = WindowObjective::new(Material::ti64(), &path, 0.0, &spec, &sampling, w, base, MaxMethod::Smoothed { k: 3.0 }, true).unwrap();
        assert_eq!(obj.evaluate(&[2e-4], &[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn reference_shift_identity() {
        let path = ScanPath::new(&[(Point3::surface(0.0, 0.0), Point3::surface(1e-3, 0.0))]).unwrap();
        let spec = ObjectiveSpec {
            end_margin: 0.0,
            sample_spacing: 0.1e-3,
            surface_weight: 0.0,
            melt_weight: 1.0,
            ..ObjectiveSpec::example()
        };
        let sampling = PathSampling::for_spec(&path, &spec).unwrap();
        let model = ThermalModel::new(Material::ti64(), &path, BeamParameters::uniform(1, 2e-4, 0.5), 0.0).unwrap();
        let base = global_objective(&model, &spec, &sampling).unwrap();
        let delta = 37.0;
        let shifted_spec = ObjectiveSpec {
            melt_temperature: spec.melt_temperature + delta,
            ..spec
        };
        let shifted = global_objective(&model, &shifted_spec, &sampling).unwrap();
        let expected: f64 = sampling
            .samples
            .iter()
            .zip(&base.secondary_max)
            .map(|(s, m)| s.weight * s.alpha * (2.0 * (m - spec.melt_temperature) * -delta + delta * delta))
            .sum();
        assert_relative_eq!(shifted.report.f1 - base.report.f1, expected, max_relative = 1e-9);
    }

    #[test]
    fn window_objective_matches_global_on_full_window() {
        let path = ScanPath::new(&[
            (Point3::surface(0.0, 0.0), Point3::surface(0.5e-3, 0.0)),
            (Point3::surface(0.5e-3, 0.0), Point3::surface(1e-3, 0.0)),
        ])
        .unwrap();
        let spec = ObjectiveSpec {
            end_margin: 0.1e-3,
            sample_spacing: 0.1e-3,
            ..ObjectiveSpec::example()
        };
        let sampling = PathSampling::for_spec(&path, &spec).unwrap();
        let beam = BeamParameters {
            spot_size: vec![2e-4, 1.5e-4],
            speed: vec![0.5, 0.8],
        };
        let model = ThermalModel::new(Material::ti64(), &path, beam.clone(), 0.0).unwrap();
        let global = global_objective(&model, &spec, &sampling).unwrap().report.j;
        let w = Window::new(0, 1, 2, 2).unwrap();
        let mut local = WindowObjective::new(Material::ti64(), &path, 0.0, &spec, &sampling, w, beam.clone(), MaxMethod::ExactSampled, true).unwrap();
        let j = local.evaluate(&beam.spot_size, &beam.speed).unwrap();
        assert_relative_eq!(j, global, max_relative = 1e-9);
        let mut smooth = WindowObjective::new(Material::ti64(), &path, 0.0, &spec, &sampling, w, beam.clone(), MaxMethod::Smoothed { k: 3.0 }, true).unwrap();
        let js = smooth.evaluate(&beam.spot_size, &beam.speed).unwrap();
        assert!((js - global).abs() < 0.05 * global, "{js} vs {global}");
    }

    #[test]
    fn cached_evaluations_are_reproducible() {
        let path = example_path();
        let spec = ObjectiveSpec::example();
        let sampling = PathSampling::for_spec(&path, &spec).unwrap();
        let base = BeamParameters::uniform(path.len(), 2e-4, 0.5);
        let w = Window::new(10, 14, 1, path.len()).unwrap();
        let mut obj = WindowObjective::new(Material::ti64(), &path, 0.0, &spec, &sampling, w, base, MaxMethod::Smoothed { k: 3.0 }, true).unwrap();
        let (s, v) = ([2e-4; 5], [0.5; 5]);
        let a = obj.evaluate(&s, &v).unwrap();
        let b = obj.evaluate(&[2.1e-4, 2e-4, 2e-4, 2e-4, 2e-4], &v).unwrap();
        let c = obj.evaluate(&s, &v).unwrap();
        assert_eq!(a.to_bits(), c.to_bits());
        assert_ne!(a, b);
    }
}
