//! CSV tables written and read by the commands. Every numeric column carries
//! its unit in the header.

use std::path::Path;

use anyhow::{bail, Context, Result};
use beamopt::objective::{Evaluation, PathSampling};
use beamopt::optimize::WindowRecord;
use beamopt::{BeamParameters, Point3, ScanPath};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct ParameterRow {
    pub k: usize,
    pub gamma_i_mm: f64,
    pub sigma_mm: f64,
    pub v_mm_s: f64,
}

#[derive(Debug, Serialize)]
struct ProfileRow {
    gamma_mm: f64,
    #[serde(rename = "M_K")]
    m_k: f64,
    alpha: f64,
}

#[derive(Debug, Serialize)]
struct FieldRow {
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
    #[serde(rename = "value_K")]
    value_k: f64,
}

#[derive(Debug, Serialize)]
struct TraceRow<'a> {
    p: usize,
    q: usize,
    r: usize,
    #[serde(rename = "J_pq_before_K2m")]
    j_before: f64,
    #[serde(rename = "J_pq_after_K2m")]
    j_after: f64,
    inner_iterations: usize,
    evaluations: usize,
    status: &'a str,
    flagged: bool,
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_parameters(path: &Path, scan: &ScanPath, beam: &BeamParameters) -> Result<()> {
    let mut w = writer(path)?;
    for k in 0..scan.len() {
        w.serialize(ParameterRow {
            k: k + 1,
            gamma_i_mm: scan.gamma_start(k) * 1e3,
            sigma_mm: beam.spot_size[k] * 1e3,
            v_mm_s: beam.speed[k] * 1e3,
        })?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Reads a parameter table; rows must list segments 1..=N in order.
pub fn read_parameters(path: &Path, segments: usize) -> Result<BeamParameters> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut beam = BeamParameters::uniform(0, 0.0, 0.0);
    for (i, row) in r.deserialize::<ParameterRow>().enumerate() {
        let row = row.with_context(|| format!("malformed row {} in {}", i + 1, path.display()))?;
        if row.k != i + 1 {
            bail!("{}: row {} lists segment {}", path.display(), i + 1, row.k);
        }
        beam.spot_size.push(row.sigma_mm / 1e3);
        beam.speed.push(row.v_mm_s / 1e3);
    }
    if beam.len() != segments {
        bail!("{} lists {} segments, the path has {}", path.display(), beam.len(), segments);
    }
    Ok(beam)
}

/// Beam-path and secondary-path maximum temperature profiles.
pub fn write_profiles(dir: &Path, sampling: &PathSampling, evaluation: &Evaluation) -> Result<()> {
    for (name, values) in [("beam_path_profile.csv", &evaluation.surface_max), ("secondary_path_profile.csv", &evaluation.secondary_max)] {
        let file = dir.join(name);
        let mut w = writer(&file)?;
        for (s, m) in sampling.samples.iter().zip(values.iter()) {
            w.serialize(ProfileRow {
                gamma_mm: s.gamma * 1e3,
                m_k: *m,
                alpha: s.alpha,
            })?;
        }
        w.flush().with_context(|| format!("cannot write {}", file.display()))?;
    }
    Ok(())
}

pub fn write_field(path: &Path, points: &[Point3], values: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    for (p, v) in points.iter().zip(values) {
        w.serialize(FieldRow {
            x_mm: p.x * 1e3,
            y_mm: p.y * 1e3,
            z_mm: p.z * 1e3,
            value_k: *v,
        })?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &[WindowRecord]) -> Result<()> {
    let mut w = writer(path)?;
    for r in trace {
        let status = match &r.status {
            beamopt::optimize::SolverStatus::Converged => "converged",
            beamopt::optimize::SolverStatus::MaxIterations => "max_iterations",
            beamopt::optimize::SolverStatus::Stalled => "stalled",
            beamopt::optimize::SolverStatus::Aborted(_) => "aborted",
        };
        w.serialize(TraceRow {
            p: r.first + 1,
            q: r.last + 1,
            r: r.freeze,
            j_before: r.j_before,
            j_after: r.j_after,
            inner_iterations: r.iterations,
            evaluations: r.evaluations,
            status,
            flagged: r.flagged,
        })?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
