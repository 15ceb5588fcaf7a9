//! Pointwise temperatures of a half-space heated by a moving Gaussian beam.
//!
//! Each segment contributes a single time integral of the insulated
//! half-space Green's function convolved with the Gaussian surface flux:
//!
//! ```text
//! ΔT_k(x, t) = P/(ρc_p) ∫ exp(-|x_⊥ - x_b(t-τ)|² / 2(2κτ+σ²)) / (2π(2κτ+σ²))
//!                       · exp(-z²/4κτ) / sqrt(πκτ) dτ
//! ```
//!
//! over `τ ∈ [max(0, t - t_k^f), t - t_k^i]`. The integral is evaluated in
//! `s = sqrt(τ)`, which removes the `τ^{-1/2}` endpoint singularity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::quadrature::{self, QuadratureError, Tolerance};
use crate::scanpath::{PathError, Point3, ScanPath, ScanTiming};

/// Contributions whose conservative upper bound is below this (K) are skipped.
pub const CULL_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermalError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("invalid material: {0}")]
    Material(&'static str),
    #[error("invalid beam parameters: {0}")]
    Beam(String),
    #[error("point lies above the surface (z = {0})")]
    AboveSurface(f64),
    #[error("time window [{first}, {last}] is invalid for {len} segments")]
    Window { first: usize, last: usize, len: usize },
    #[error("smoothing scale must be positive")]
    Smoothing,
    #[error("time {0} outside the scan interval")]
    Time(f64),
}

/// Constant material data and absorbed beam power, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Thermal conductivity λ, W/(m·K).
    pub conductivity: f64,
    /// Thermal diffusivity κ, m²/s.
    pub diffusivity: f64,
    /// Initial temperature, K.
    pub initial_temperature: f64,
    /// Absorbed beam power, W.
    pub power: f64,
}

impl Material {
    pub fn new(conductivity: f64, diffusivity: f64, initial_temperature: f64, power: f64) -> Result<Self, ThermalError> {
        let m = Self {
            conductivity,
            diffusivity,
            initial_temperature,
            power,
        };
        m.validate()?;
        Ok(m)
    }

    /// Ti-6Al-4V values used in the worked examples.
    pub fn ti64() -> Self {
        Self {
            conductivity: 20.0,
            diffusivity: 8.45e-6,
            initial_temperature: 1000.0,
            power: 100.0,
        }
    }

    pub fn validate(&self) -> Result<(), ThermalError> {
        if !(self.conductivity > 0.0) {
            return Err(ThermalError::Material("conductivity must be positive"));
        }
        if !(self.diffusivity > 0.0) {
            return Err(ThermalError::Material("diffusivity must be positive"));
        }
        if !(self.power >= 0.0) {
            return Err(ThermalError::Material("power must be non-negative"));
        }
        if !(self.initial_temperature > 0.0) {
            return Err(ThermalError::Material("initial temperature must be positive"));
        }
        Ok(())
    }

    /// ρc_p = λ/κ.
    pub fn volumetric_heat_capacity(&self) -> f64 {
        self.conductivity / self.diffusivity
    }
}

/// Per-segment spot size σ_k and speed v_k (m, m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamParameters {
    pub spot_size: Vec<f64>,
    pub speed: Vec<f64>,
}

impl BeamParameters {
    pub fn uniform(n: usize, spot_size: f64, speed: f64) -> Self {
        Self {
            spot_size: vec![spot_size; n],
            speed: vec![speed; n],
        }
    }

    pub fn len(&self) -> usize {
        self.spot_size.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spot_size.is_empty()
    }

    pub fn validate(&self, segments: usize) -> Result<(), ThermalError> {
        if self.spot_size.len() != segments || self.speed.len() != segments {
            return Err(ThermalError::Beam(format!(
                "expected {segments} spot sizes and speeds, got {} and {}",
                self.spot_size.len(),
                self.speed.len()
            )));
        }
        if let Some(k) = self.spot_size.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(ThermalError::Beam(format!("spot size on segment {k} must be positive")));
        }
        if let Some(k) = self.speed.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(ThermalError::Beam(format!("speed on segment {k} must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MaxMethod {
    /// Maximum over time samples, refined by golden-section search.
    ExactSampled,
    /// Shifted log-sum-exp over the same samples with scale `k` (1/K).
    Smoothed { k: f64 },
}

/// How time samples for maximum-temperature evaluation are placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSampling {
    /// Beam advance between samples as a fraction of the smallest spot size
    /// in the window.
    pub spacing_factor: f64,
    /// Only beam positions within this distance (m) of the query point are
    /// sampled. `None` samples the whole window.
    pub radius: Option<f64>,
}

impl Default for TimeSampling {
    fn default() -> Self {
        Self {
            spacing_factor: 0.25,
            radius: None,
        }
    }
}

/// Maximum of the temperature at `point` over segments `first..=last`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxTempQuery {
    pub point: Point3,
    pub first: usize,
    pub last: usize,
    pub method: MaxMethod,
}

/// Fixed per-segment sample counts for a window. Samples sit at beam
/// positions `j / n_k`, `j = 1..=n_k`, so their location on the path does not
/// move when speeds change.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub first: usize,
    pub counts: Vec<usize>,
    pub radius: Option<f64>,
}

impl SamplePlan {
    pub fn for_window(path: &ScanPath, beam: &BeamParameters, first: usize, last: usize, sampling: TimeSampling) -> Self {
        let sigma_min = beam.spot_size[first..=last].iter().copied().fold(f64::INFINITY, f64::min);
        let step = sampling.spacing_factor * sigma_min;
        let counts = (first..=last)
            .map(|k| ((path.segment(k).length / step * (1.0 - 1e-12)).ceil() as usize).max(1))
            .collect();
        Self {
            first,
            counts,
            radius: sampling.radius,
        }
    }

    pub fn last(&self) -> usize {
        self.first + self.counts.len() - 1
    }

    /// (segment, fraction) pairs of samples within the plan radius of `point`.
    pub fn positions<'a>(&'a self, path: &'a ScanPath, point: &'a Point3) -> impl Iterator<Item = (usize, f64)> + 'a {
        let r2 = self.radius.map(|r| r * r);
        self.counts.iter().enumerate().flat_map(move |(i, &n)| {
            let k = self.first + i;
            let seg = path.segment(k);
            (1..=n).filter_map(move |j| {
                let f = j as f64 / n as f64;
                if let Some(r2) = r2 {
                    let b = seg.point_at(f);
                    let (dx, dy) = (b.x - point.x, b.y - point.y);
                    if dx * dx + dy * dy > r2 {
                        return None;
                    }
                }
                Some((k, f))
            })
        })
    }
}

/// Precomputed per-segment kernel data.
#[derive(Debug, Clone, Copy)]
struct SegmentKernel {
    x0: f64,
    y0: f64,
    dir_x: f64,
    dir_y: f64,
    speed: f64,
    sigma2: f64,
    t_start: f64,
    t_end: f64,
}

/// A path, its beam parameters and the induced timing: everything needed to
/// evaluate temperatures.
#[derive(Debug, Clone)]
pub struct ThermalModel<'a> {
    material: Material,
    path: &'a ScanPath,
    beam: BeamParameters,
    timing: ScanTiming,
    kernels: Vec<SegmentKernel>,
    tolerance: Tolerance,
    cull_threshold: f64,
}

impl<'a> ThermalModel<'a> {
    pub fn new(material: Material, path: &'a ScanPath, beam: BeamParameters, jump_dwell: f64) -> Result<Self, ThermalError> {
        material.validate()?;
        beam.validate(path.len())?;
        let timing = ScanTiming::new(path, &beam.speed, jump_dwell)?;
        let kernels = path
            .segments()
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let (dir_x, dir_y) = ((s.end.x - s.start.x) / s.length, (s.end.y - s.start.y) / s.length);
                SegmentKernel {
                    x0: s.start.x,
                    y0: s.start.y,
                    dir_x,
                    dir_y,
                    speed: beam.speed[k],
                    sigma2: beam.spot_size[k] * beam.spot_size[k],
                    t_start: timing.start(k),
                    t_end: timing.end(k),
                }
            })
            .collect();
        Ok(Self {
            material,
            path,
            beam,
            timing,
            kernels,
            tolerance: Tolerance::default(),
            cull_threshold: CULL_THRESHOLD,
        })
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_cull_threshold(mut self, threshold: f64) -> Self {
        self.cull_threshold = threshold;
        self
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn path(&self) -> &'a ScanPath {
        self.path
    }

    pub fn beam(&self) -> &BeamParameters {
        &self.beam
    }

    pub fn timing(&self) -> &ScanTiming {
        &self.timing
    }

    /// Time at which the beam is the fraction `f` along segment `k`.
    pub fn time_at(&self, k: usize, f: f64) -> f64 {
        let kr = &self.kernels[k];
        kr.t_start + f * (kr.t_end - kr.t_start)
    }

    /// Temperature rise at `x`, time `t`, due to segment `k` alone.
    pub fn segment_contribution(&self, x: &Point3, t: f64, k: usize) -> Result<f64, ThermalError> {
        if x.z > 0.0 {
            return Err(ThermalError::AboveSurface(x.z));
        }
        Ok(self.contribution(x, t, k)?)
    }

    fn contribution(&self, x: &Point3, t: f64, k: usize) -> Result<f64, QuadratureError> {
        let kr = &self.kernels[k];
        if t <= kr.t_start || self.material.power == 0.0 {
            return Ok(0.0);
        }
        let kappa = self.material.diffusivity;
        let tau_lo = (t - kr.t_end).max(0.0);
        let tau_hi = t - kr.t_start;

        let (rx, ry) = (x.x - kr.x0, x.y - kr.y0);
        let along = rx * kr.dir_x + ry * kr.dir_y;
        let perp2 = (rx * rx + ry * ry - along * along).max(0.0);
        // Along-track offset of the point from the beam at lag τ is xi + vτ.
        let xi = along - kr.speed * (t - kr.t_start);
        let z2 = x.z * x.z;
        let scale = self.material.power / self.material.volumetric_heat_capacity() / (2.0 * PI) / (PI * kappa).sqrt();

        // Conservative bound: prefactor ≤ 1/(σ²√τ) or its value at τ_lo,
        // exponent at its largest lateral variance and nearest approach.
        let off_lo = xi + kr.speed * tau_lo;
        let off_hi = xi + kr.speed * tau_hi;
        let nearest = if off_lo <= 0.0 && off_hi >= 0.0 { 0.0 } else { off_lo.abs().min(off_hi.abs()) };
        let var_hi = 2.0 * kappa * tau_hi + kr.sigma2;
        let expo = (-(perp2 + nearest * nearest) / (2.0 * var_hi) - z2 / (4.0 * kappa * tau_hi)).exp();
        let mut bound = 2.0 * (tau_hi.sqrt() - tau_lo.sqrt()) / kr.sigma2;
        if tau_lo > 0.0 {
            bound = bound.min((tau_hi - tau_lo) / ((2.0 * kappa * tau_lo + kr.sigma2) * tau_lo.sqrt()));
        }
        if scale * bound * expo < self.cull_threshold {
            return Ok(0.0);
        }

        let integrand = |s: f64| {
            let tau = s * s;
            let var = 2.0 * kappa * tau + kr.sigma2;
            let off = xi + kr.speed * tau;
            let mut e = -(perp2 + off * off) / (2.0 * var);
            if z2 > 0.0 {
                if tau == 0.0 {
                    return 0.0;
                }
                e -= z2 / (4.0 * kappa * tau);
            }
            2.0 * e.exp() / var
        };

        // Split around the closest approach so a narrow peak and its tails
        // are seen by the rule.
        let mut breaks = [0.0; 7];
        let mut nb = 0;
        let tau_peak = -xi / kr.speed;
        if tau_peak > tau_lo && tau_peak < tau_hi {
            let width = (2.0 * kappa * tau_peak + kr.sigma2).sqrt() / kr.speed;
            for c in [-18.0, -6.0, -2.0, 0.0, 2.0, 6.0, 18.0] {
                let tb = tau_peak + c * width;
                if tb > tau_lo && tb < tau_hi {
                    breaks[nb] = tb.sqrt();
                    nb += 1;
                }
            }
        }
        let tol = Tolerance {
            absolute: self.tolerance.absolute / scale,
            ..self.tolerance
        };
        let est = quadrature::integrate(integrand, tau_lo.sqrt(), tau_hi.sqrt(), &breaks[..nb], tol)?;
        Ok(scale * est.value)
    }

    /// Temperature at `x` and time `t`.
    pub fn temperature(&self, x: &Point3, t: f64) -> Result<f64, ThermalError> {
        if x.z > 0.0 {
            return Err(ThermalError::AboveSurface(x.z));
        }
        if !(t >= 0.0 && t <= self.timing.total_time() * (1.0 + 1e-12)) {
            return Err(ThermalError::Time(t));
        }
        Ok(self.temperature_unchecked(x, t)?)
    }

    /// Summed rise at `x`, time `t`, due to the segments in `segments` only.
    /// The time is not range-checked.
    pub fn partial_rise(&self, x: &Point3, t: f64, segments: std::ops::Range<usize>) -> Result<f64, ThermalError> {
        if x.z > 0.0 {
            return Err(ThermalError::AboveSurface(x.z));
        }
        let mut rise = 0.0;
        for k in segments {
            if self.kernels[k].t_start >= t {
                break;
            }
            rise += self.contribution(x, t, k)?;
        }
        Ok(rise)
    }

    pub(crate) fn temperature_unchecked(&self, x: &Point3, t: f64) -> Result<f64, QuadratureError> {
        let mut u = self.material.initial_temperature;
        for k in 0..self.kernels.len() {
            if self.kernels[k].t_start >= t {
                break;
            }
            u += self.contribution(x, t, k)?;
        }
        Ok(u)
    }

    /// Sample plan for `first..=last` derived from the current spot sizes.
    pub fn sample_plan(&self, first: usize, last: usize, sampling: TimeSampling) -> SamplePlan {
        SamplePlan::for_window(self.path, &self.beam, first, last, sampling)
    }

    fn check_window(&self, first: usize, last: usize) -> Result<(), ThermalError> {
        if first > last || last >= self.path.len() {
            return Err(ThermalError::Window {
                first,
                last,
                len: self.path.len(),
            });
        }
        Ok(())
    }

    /// Maximum temperature at the query point over the query window, with
    /// time samples placed according to `sampling`.
    pub fn max_temperature(&self, query: &MaxTempQuery, sampling: TimeSampling) -> Result<f64, ThermalError> {
        self.check_window(query.first, query.last)?;
        let plan = self.sample_plan(query.first, query.last, sampling);
        self.max_temperature_planned(&query.point, &plan, query.method)
    }

    /// As [`max_temperature`](Self::max_temperature) but with an explicit plan.
    pub fn max_temperature_planned(&self, point: &Point3, plan: &SamplePlan, method: MaxMethod) -> Result<f64, ThermalError> {
        self.check_window(plan.first, plan.last())?;
        if point.z > 0.0 {
            return Err(ThermalError::AboveSurface(point.z));
        }
        if let MaxMethod::Smoothed { k } = method {
            if !(k > 0.0) {
                return Err(ThermalError::Smoothing);
            }
        }
        let mut samples: Vec<(f64, f64, f64)> = Vec::new(); // (t, u, weight)
        for (k, f) in plan.positions(self.path, point) {
            let n = plan.counts[k - plan.first] as f64;
            let t = self.time_at(k, f);
            let dt = (self.kernels[k].t_end - self.kernels[k].t_start) / n;
            samples.push((t, self.temperature_unchecked(point, t)?, dt));
        }
        if samples.is_empty() {
            // No beam position within the radius: the point only sees history.
            let t = self.kernels[plan.last()].t_end;
            return Ok(self.temperature_unchecked(point, t)?);
        }
        let (ibest, &(tb, ub, dtb)) = samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .unwrap();
        match method {
            MaxMethod::Smoothed { k } => {
                let sum: f64 = samples.iter().map(|&(_, u, w)| w * (k * (u - ub)).exp()).sum();
                Ok(ub + sum.ln() / k)
            }
            MaxMethod::ExactSampled => {
                let t_min = self.kernels[plan.first].t_start;
                let t_max = self.kernels[plan.last()].t_end;
                let lo = if ibest > 0 { samples[ibest - 1].0.max(tb - dtb) } else { tb - dtb };
                let hi = samples.get(ibest + 1).map_or(tb + dtb, |s| s.0.min(tb + dtb));
                let (lo, hi) = (lo.max(t_min), hi.min(t_max));
                let refined = self.golden_max(point, lo, hi, 1e-3 * dtb)?;
                Ok(refined.max(ub))
            }
        }
    }

    fn golden_max(&self, point: &Point3, mut a: f64, mut b: f64, tol: f64) -> Result<f64, QuadratureError> {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        if !(b > a) {
            return self.temperature_unchecked(point, b);
        }
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = self.temperature_unchecked(point, c)?;
        let mut fd = self.temperature_unchecked(point, d)?;
        for _ in 0..60 {
            if b - a <= tol {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.temperature_unchecked(point, c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.temperature_unchecked(point, d)?;
            }
        }
        Ok(fc.max(fd))
    }

    /// Temperature or maximum temperature at every grid point, in input order.
    pub fn field_on_grid(&self, grid: &[Point3], spec: FieldSpec) -> Result<Vec<f64>, ThermalError> {
        if let FieldSpec::Snapshot(t) = spec {
            if !(t >= 0.0 && t <= self.timing.total_time() * (1.0 + 1e-12)) {
                return Err(ThermalError::Time(t));
            }
        }
        let n = self.path.len();
        let plan = match spec {
            FieldSpec::MaxOverScan(sampling) => Some(self.sample_plan(0, n - 1, sampling)),
            FieldSpec::Snapshot(_) => None,
        };
        grid.par_iter()
            .map(|x| match (&spec, &plan) {
                (FieldSpec::Snapshot(t), _) => self.temperature(x, *t),
                (FieldSpec::MaxOverScan(_), Some(plan)) => self.max_temperature_planned(x, plan, MaxMethod::ExactSampled),
                _ => unreachable!(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    Snapshot(f64),
    MaxOverScan(TimeSampling),
}

/// Long-time temperature rise under a stationary Gaussian source at its center.
pub fn stationary_center_rise(material: &Material, spot_size: f64) -> f64 {
    material.power / (2.0 * (2.0 * PI).sqrt() * material.conductivity * spot_size)
}

/// Largest smoothing scale needed so the smoothed maximum is within
/// `tolerance` (K) of the exact one on a single-segment probe: a surface
/// point at the middle of a 1 mm pass with the given spot size and speed.
/// Starts from `initial` and doubles.
pub fn calibrate_smoothing(
    material: &Material,
    spot_size: f64,
    speed: f64,
    sampling: TimeSampling,
    initial: f64,
    tolerance: f64,
) -> Result<f64, ThermalError> {
    if !(initial > 0.0) {
        return Err(ThermalError::Smoothing);
    }
    let path = ScanPath::new(&[(Point3::surface(0.0, 0.0), Point3::surface(1e-3, 0.0))])?;
    let model = ThermalModel::new(*material, &path, BeamParameters::uniform(1, spot_size, speed), 0.0)?;
    let mut query = MaxTempQuery {
        point: Point3::surface(0.5e-3, 0.0),
        first: 0,
        last: 0,
        method: MaxMethod::ExactSampled,
    };
    let exact = model.max_temperature(&query, sampling)?;
    let mut k = initial;
    for _ in 0..40 {
        query.method = MaxMethod::Smoothed { k };
        let smooth = model.max_temperature(&query, sampling)?;
        if (smooth - exact).abs() < tolerance {
            return Ok(k);
        }
        k *= 2.0;
    }
    Err(ThermalError::Smoothing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_mm() -> ScanPath {
        ScanPath::new(&[(Point3::surface(0.0, 0.0), Point3::surface(1e-3, 0.0))]).unwrap()
    }

    #[test]
    fn material_guards() {
        assert!(Material::new(0.0, 1e-6, 1000.0, 100.0).is_err());
        assert!(Material::new(20.0, 8.45e-6, 1000.0, -1.0).is_err());
        let m = Material::ti64();
        assert_eq!(m.volumetric_heat_capacity(), 20.0 / 8.45e-6);
    }

    #[test]
    fn inactive_segment_contributes_nothing() {
        let path = one_mm();
        let model = ThermalModel::new(Material::ti64(), &path, BeamParameters::uniform(1, 2e-4, 0.5), 0.0).unwrap();
        assert_eq!(model.segment_contribution(&Point3::surface(0.0, 0.0), 0.0, 0).unwrap(), 0.0);
        assert_eq!(model.temperature(&Point3::surface(0.0, 0.0), 0.0).unwrap(), 1000.0);
    }

    #[test]
    fn power_scales_rise() {
        let path = one_mm();
        let beam = BeamParameters::uniform(1, 2e-4, 0.5);
        let m1 = ThermalModel::new(Material::ti64(), &path, beam.clone(), 0.0).unwrap();
        let m2 = ThermalModel::new(Material { power: 200.0, ..Material::ti64() }, &path, beam, 0.0).unwrap();
        let x = Point3::new(0.6e-3, 0.05e-3, -2e-5);
        let a = m1.segment_contribution(&x, 1.5e-3, 0).unwrap();
        let b = m2.segment_contribution(&x, 1.5e-3, 0).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-9);
    }

    #[test]
    fn far_field_is_initial_temperature() {
        let path = one_mm();
        let model = ThermalModel::new(Material::ti64(), &path, BeamParameters::uniform(1, 2e-4, 0.5), 0.0).unwrap();
        let u = model.temperature(&Point3::surface(0.05, 0.0), 2e-3).unwrap();
        assert!((u - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_points_above_surface_and_bad_windows() {
        let path = one_mm();
        let model = ThermalModel::new(Material::ti64(), &path, BeamParameters::uniform(1, 2e-4, 0.5), 0.0).unwrap();
        assert!(matches!(model.temperature(&Point3::new(0.0, 0.0, 1e-6), 1e-3), Err(ThermalError::AboveSurface(_))));
        let q = MaxTempQuery {
            point: Point3::surface(0.0, 0.0),
            first: 0,
            last: 1,
            method: MaxMethod::ExactSampled,
        };
        assert!(matches!(model.max_temperature(&q, TimeSampling::default()), Err(ThermalError::Window { .. })));
    }

    #[test]
    fn exact_max_dominates_samples() {
        let path = one_mm();
        let model = ThermalModel::new(Material::ti64(), &path, BeamParameters::uniform(1, 2e-4, 0.5), 0.0).unwrap();
        let x = Point3::new(0.5e-3, 1e-4, -5e-5);
        let q = MaxTempQuery {
            point: x,
            first: 0,
            last: 0,
            method: MaxMethod::ExactSampled,
        };
        let m = model.max_temperature(&q, TimeSampling::default()).unwrap();
        for i in 1..=40 {
            let t = model.timing().total_time() * i as f64 / 40.0;
            assert!(m >= model.temperature(&x, t).unwrap() - 1e-9);
        }
    }

    #[test]
    fn continuity_across_segment_end() {
        let path = ScanPath::new(&[
            (Point3::surface(0.0, 0.0), Point3::surface(0.5e-3, 0.0)),
            (Point3::surface(0.5e-3, 0.0), Point3::surface(1e-3, 0.0)),
        ])
        .unwrap();
        let model = ThermalModel::new(
            Material::ti64(),
            &path,
            BeamParameters {
                spot_size: vec![2e-4, 1e-4],
                speed: vec![0.5, 0.3],
            },
            0.0,
        )
        .unwrap();
        let t = model.timing().end(0);
        let x = Point3::new(0.45e-3, 0.0, -1e-5);
        let left = model.temperature(&x, t * (1.0 - 1e-9)).unwrap();
        let right = model.temperature(&x, t * (1.0 + 1e-9)).unwrap();
        assert!((left - right).abs() < 1e-3, "{left} vs {right}");
    }

    #[test]
    fn smoothing_calibration_meets_bound() {
        let m = Material::ti64();
        let k = calibrate_smoothing(&m, 2e-4, 0.5, TimeSampling::default(), 0.1, 5.0).unwrap();
        assert!(k >= 0.1);
        assert!(calibrate_smoothing(&m, 2e-4, 0.5, TimeSampling::default(), 0.0, 5.0).is_err());
    }
}
