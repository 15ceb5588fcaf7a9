//! Explicit finite-difference reference solver for the heated half-space.
//!
//! Vertex-centred grid on a truncated box `[x0, x1] × [y0, y1] × [-depth, 0]`.
//! The Gaussian beam flux enters through the `z = 0` layer; all other faces
//! are insulated. Boundary vertices carry half (or quarter, eighth) control
//! volumes, which makes the scheme exactly conservative. This module shares
//! no numerics with [`crate::thermal`] and exists to validate it.

use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

use crate::scanpath::{Point3, ScanPath, ScanTiming};
use crate::thermal::{BeamParameters, Material};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("explicit scheme unstable: κΔt·Σ1/Δ² = {0:.4} exceeds 1/2")]
    Unstable(f64),
    #[error("probe {0} lies outside the grid box")]
    ProbeOutside(usize),
    #[error("invalid grid: {0}")]
    Grid(&'static str),
    #[error("beam parameters do not match the path")]
    Beam,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGrid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub depth: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dt: f64,
}

impl FdGrid {
    /// Grid with uniform spacing `h` and a time step at `safety` times the
    /// explicit stability limit.
    pub fn uniform(x_range: (f64, f64), y_range: (f64, f64), depth: f64, h: f64, diffusivity: f64, safety: f64) -> Self {
        let dt = safety * 0.5 / (diffusivity * 3.0 / (h * h));
        Self {
            x_range,
            y_range,
            depth,
            dx: h,
            dy: h,
            dz: h,
            dt,
        }
    }

    pub fn stability_number(&self, diffusivity: f64) -> f64 {
        diffusivity * self.dt * (1.0 / (self.dx * self.dx) + 1.0 / (self.dy * self.dy) + 1.0 / (self.dz * self.dz))
    }

    fn counts(&self) -> (usize, usize, usize) {
        let n = |len: f64, h: f64| (len / h).round() as usize + 1;
        (
            n(self.x_range.1 - self.x_range.0, self.dx),
            n(self.y_range.1 - self.y_range.0, self.dy),
            n(self.depth, self.dz),
        )
    }
}

#[derive(Debug, Clone)]
pub struct FdResult {
    /// Output times (s), one per step, starting at 0.
    pub times: Vec<f64>,
    /// `history[i][p]`: temperature of probe `p` at `times[i]`.
    pub history: Vec<Vec<f64>>,
    /// Largest rise above the initial temperature on the lateral and bottom faces.
    pub boundary_rise: f64,
    /// Set when `boundary_rise` exceeds 1e-3 K.
    pub boundary_contaminated: bool,
    /// ∫ρc_p(u - u_init)dV at the final time (J).
    pub stored_energy: f64,
    /// Energy delivered by the discrete surface flux (J).
    pub injected_energy: f64,
}

impl FdResult {
    pub fn final_values(&self) -> &[f64] {
        self.history.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Probe histories as CSV: `t_s,u_K_0,u_K_1,...`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.history.first().map_or(0, Vec::len);
        write!(w, "t_s")?;
        for p in 0..n {
            write!(w, ",u_K_{p}")?;
        }
        writeln!(w)?;
        for (t, row) in self.times.iter().zip(&self.history) {
            write!(w, "{t:e}")?;
            for u in row {
                write!(w, ",{u:.9}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

struct Beam<'a> {
    path: &'a ScanPath,
    timing: ScanTiming,
    spot: &'a [f64],
}

impl Beam<'_> {
    /// Beam center and spot size at time t, or None after the scan ends.
    fn at(&self, t: f64) -> Option<(f64, f64, f64)> {
        if t >= self.timing.total_time() {
            return None;
        }
        let k = self.timing.starts().partition_point(|&s| s <= t).saturating_sub(1);
        let (t0, t1) = (self.timing.start(k), self.timing.end(k));
        if t >= t1 {
            return None; // dwell between segments
        }
        let p = self.path.segment(k).point_at((t - t0) / (t1 - t0));
        Some((p.x, p.y, self.spot[k]))
    }
}

/// Runs the explicit scheme to `t_final` and samples `probes` every step.
pub fn fd_solve(
    grid: &FdGrid,
    material: &Material,
    beam: &BeamParameters,
    path: &ScanPath,
    jump_dwell: f64,
    probes: &[Point3],
    t_final: f64,
) -> Result<FdResult, OracleError> {
    let kappa = material.diffusivity;
    let s = grid.stability_number(kappa);
    if s > 0.5 {
        return Err(OracleError::Unstable(s));
    }
    if !(grid.dx > 0.0 && grid.dy > 0.0 && grid.dz > 0.0 && grid.dt > 0.0) {
        return Err(OracleError::Grid("spacings and time step must be positive"));
    }
    if beam.len() != path.len() {
        return Err(OracleError::Beam);
    }
    let timing = ScanTiming::new(path, &beam.speed, jump_dwell).map_err(|_| OracleError::Beam)?;
    let source = Beam {
        path,
        timing,
        spot: &beam.spot_size,
    };
    let (nx, ny, nz) = grid.counts();
    if nx < 3 || ny < 3 || nz < 3 {
        return Err(OracleError::Grid("need at least 3 vertices per direction"));
    }
    for (i, p) in probes.iter().enumerate() {
        let inside = p.x >= grid.x_range.0
            && p.x <= grid.x_range.1
            && p.y >= grid.y_range.0
            && p.y <= grid.y_range.1
            && p.z <= 0.0
            && p.z >= -grid.depth;
        if !inside {
            return Err(OracleError::ProbeOutside(i));
        }
    }

    let u0 = material.initial_temperature;
    let rho_c = material.volumetric_heat_capacity();
    let plane = nx * ny;
    let mut u = vec![u0; plane * nz];
    let mut next = u.clone();
    let xs: Vec<f64> = (0..nx).map(|i| grid.x_range.0 + i as f64 * grid.dx).collect();
    let ys: Vec<f64> = (0..ny).map(|j| grid.y_range.0 + j as f64 * grid.dy).collect();
    let half = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };

    let sample = |u: &[f64]| -> Vec<f64> { probes.iter().map(|p| trilinear(u, grid, (nx, ny, nz), p)).collect() };
    let mut times = vec![0.0];
    let mut history = vec![sample(&u)];
    let mut injected = 0.0;
    let mut flux = vec![0.0; plane];

    let (cx, cy, cz) = (kappa / (grid.dx * grid.dx), kappa / (grid.dy * grid.dy), kappa / (grid.dz * grid.dz));
    let mut t = 0.0;
    while t < t_final * (1.0 - 1e-12) {
        let dt = grid.dt.min(t_final - t);
        // Surface flux at the midpoint of the step, per unit area.
        flux.iter_mut().for_each(|f| *f = 0.0);
        if let Some((bx, by, sigma)) = source.at(t + 0.5 * dt) {
            let norm = material.power / (2.0 * PI * sigma * sigma);
            let inv = 1.0 / (2.0 * sigma * sigma);
            for j in 0..ny {
                let ey = (ys[j] - by) * (ys[j] - by);
                for i in 0..nx {
                    let r2 = (xs[i] - bx) * (xs[i] - bx) + ey;
                    let f = norm * (-r2 * inv).exp();
                    flux[j * nx + i] = f;
                    injected += f * dt * grid.dx * grid.dy * half(i, nx) * half(j, ny);
                }
            }
        }
        let u_ref = &u;
        let flux_ref = &flux;
        next.par_chunks_mut(plane).enumerate().for_each(|(k, layer)| {
            let km = if k == 0 { 1 } else { k - 1 };
            let kp = if k == nz - 1 { nz - 2 } else { k + 1 };
            for j in 0..ny {
                let jm = if j == 0 { 1 } else { j - 1 };
                let jp = if j == ny - 1 { ny - 2 } else { j + 1 };
                for i in 0..nx {
                    let im = if i == 0 { 1 } else { i - 1 };
                    let ip = if i == nx - 1 { nx - 2 } else { i + 1 };
                    let at = |ii: usize, jj: usize, kk: usize| u_ref[kk * plane + jj * nx + ii];
                    let c = at(i, j, k);
                    let lap = cx * (at(ip, j, k) - 2.0 * c + at(im, j, k))
                        + cy * (at(i, jp, k) - 2.0 * c + at(i, jm, k))
                        + cz * (at(i, j, kp) - 2.0 * c + at(i, j, km));
                    let mut du = lap;
                    if k == 0 {
                        // Half control volume at the surface receives the flux.
                        du += 2.0 * flux_ref[j * nx + i] / (rho_c * grid.dz);
                    }
                    layer[j * nx + i] = c + dt * du;
                }
            }
        });
        std::mem::swap(&mut u, &mut next);
        t += dt;
        times.push(t);
        history.push(sample(&u));
    }

    let mut stored = 0.0;
    let mut boundary_rise: f64 = 0.0;
    let cell = grid.dx * grid.dy * grid.dz;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let du = u[k * plane + j * nx + i] - u0;
                stored += rho_c * du * cell * half(i, nx) * half(j, ny) * half(k, nz);
                let on_face = i == 0 || i == nx - 1 || j == 0 || j == ny - 1 || k == nz - 1;
                if on_face {
                    boundary_rise = boundary_rise.max(du);
                }
            }
        }
    }

    Ok(FdResult {
        times,
        history,
        boundary_rise,
        boundary_contaminated: boundary_rise > 1e-3,
        stored_energy: stored,
        injected_energy: injected,
    })
}

fn trilinear(u: &[f64], grid: &FdGrid, (nx, ny, nz): (usize, usize, usize), p: &Point3) -> f64 {
    let locate = |v: f64, h: f64, n: usize| {
        let s = (v / h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    };
    let (i, fx) = locate(p.x - grid.x_range.0, grid.dx, nx);
    let (j, fy) = locate(p.y - grid.y_range.0, grid.dy, ny);
    let (k, fz) = locate(-p.z, grid.dz, nz);
    let plane = nx * ny;
    let at = |ii: usize, jj: usize, kk: usize| u[kk * plane + jj * nx + ii];
    let mut acc = 0.0;
    for (dk, wz) in [(0, 1.0 - fz), (1, fz)] {
        for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
            for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
                let w = wx * wy * wz;
                if w != 0.0 {
                    acc += w * at(i + di, j + dj, k + dk);
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> FdGrid {
        FdGrid::uniform((-0.6e-3, 0.6e-3), (-0.4e-3, 0.4e-3), 0.3e-3, 40e-6, 8.45e-6, 0.8)
    }

    fn path() -> ScanPath {
        ScanPath::new(&[(Point3::surface(-0.2e-3, 0.0), Point3::surface(0.2e-3, 0.0))]).unwrap()
    }

    #[test]
    fn no_source_keeps_initial_temperature() {
        let m = Material { power: 0.0, ..Material::ti64() };
        let r = fd_solve(&small_grid(), &m, &BeamParameters::uniform(1, 1e-4, 0.5), &path(), 0.0, &[Point3::surface(0.0, 0.0)], 5e-4)
            .unwrap();
        assert!(r.history.iter().all(|h| h[0] == 1000.0));
    }

    #[test]
    fn energy_balance() {
        let r = fd_solve(
            &small_grid(),
            &Material::ti64(),
            &BeamParameters::uniform(1, 1e-4, 0.5),
            &path(),
            0.0,
            &[],
            6e-4,
        )
        .unwrap();
        let delivered = 100.0 * 6e-4;
        assert!((r.stored_energy - r.injected_energy).abs() < 1e-9 * delivered);
        assert!((r.injected_energy - delivered).abs() < 0.01 * delivered);
    }

    #[test]
    fn maximum_principle() {
        let r = fd_solve(
            &small_grid(),
            &Material::ti64(),
            &BeamParameters::uniform(1, 1e-4, 0.5),
            &path(),
            0.0,
            &[Point3::new(0.3e-3, 0.2e-3, -0.1e-3), Point3::surface(0.0, 0.0)],
            8e-4,
        )
        .unwrap();
        assert!(r.history.iter().flatten().all(|&u| u >= 1000.0));
    }

    #[test]
    fn rejects_unstable_step_and_outside_probe() {
        let mut g = small_grid();
        g.dt *= 2.0;
        let err = fd_solve(&g, &Material::ti64(), &BeamParameters::uniform(1, 1e-4, 0.5), &path(), 0.0, &[], 1e-4).unwrap_err();
        assert!(matches!(err, OracleError::Unstable(_)));
        let err = fd_solve(
            &small_grid(),
            &Material::ti64(),
            &BeamParameters::uniform(1, 1e-4, 0.5),
            &path(),
            0.0,
            &[Point3::surface(1.0, 0.0)],
            1e-4,
        )
        .unwrap_err();
        assert!(matches!(err, OracleError::ProbeOutside(0)));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = fd_solve(
            &small_grid(),
            &Material::ti64(),
            &BeamParameters::uniform(1, 1e-4, 0.5),
            &path(),
            0.0,
            &[Point3::surface(0.0, 0.0)],
            1e-4,
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_s,u_K_0\n"));
        assert_eq!(text.lines().count(), r.times.len() + 1);
    }
}
