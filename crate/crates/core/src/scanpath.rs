//! Piecewise-linear beam paths, hatch-line structure, speed-induced timing
//! and the secondary (sub-surface) tracking path.
//!
//! Segment and hatch-line indices are 0-based throughout the library. File
//! formats written by the CLI use 1-based numbering.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two segments whose directions differ by at most this much (radians) may
/// belong to the same hatch line.
pub const ANGLE_TOLERANCE: f64 = 1e-9;
/// Endpoint distance (m) under which two consecutive segments count as connected.
pub const CONNECTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("segment {0} has zero length")]
    ZeroLength(usize),
    #[error("segment {0} does not lie in the surface plane z = 0")]
    NonPlanar(usize),
    #[error("path has no segments")]
    Empty,
    #[error("segment index {index} out of range for a path with {len} segments")]
    SegmentOutOfRange { index: usize, len: usize },
    #[error("arclength fraction {0} outside [0, 1]")]
    FractionOutOfRange(f64),
    #[error("time {t} outside the scan interval [0, {end}]")]
    TimeOutOfRange { t: f64, end: f64 },
    #[error("speed on segment {0} must be positive and finite")]
    InvalidSpeed(usize),
    #[error("expected {expected} speeds, got {got}")]
    SpeedCount { expected: usize, got: usize },
    #[error("dwell time must be non-negative")]
    NegativeDwell,
    #[error("secondary path depth must be non-negative, got {0}")]
    NegativeDepth(f64),
    #[error("invalid generator: {0}")]
    Generator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn surface(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Linear interpolation `self + f (other - self)`.
    pub fn lerp(&self, other: &Point3, f: f64) -> Point3 {
        Point3::new(
            self.x + f * (other.x - self.x),
            self.y + f * (other.y - self.y),
            self.z + f * (other.z - self.z),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: Point3,
    pub end: Point3,
    pub length: f64,
    /// Direction angle from the positive x axis.
    pub angle: f64,
}

impl Segment {
    pub fn direction(&self) -> (f64, f64) {
        (self.angle.cos(), self.angle.sin())
    }

    pub fn point_at(&self, fraction: f64) -> Point3 {
        self.start.lerp(&self.end, fraction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatchLine {
    pub first_segment: usize,
    pub last_segment: usize,
    pub angle: f64,
}

impl HatchLine {
    pub fn segments(&self) -> std::ops::RangeInclusive<usize> {
        self.first_segment..=self.last_segment
    }

    pub fn segment_count(&self) -> usize {
        self.last_segment - self.first_segment + 1
    }
}

/// An immutable beam path: ordered segments, their hatch lines and the
/// scanning distance at every segment start.
#[derive(Debug, Clone)]
pub struct ScanPath {
    segments: Vec<Segment>,
    hatch_lines: Vec<HatchLine>,
    line_of_segment: Vec<usize>,
    gamma_start: Vec<f64>,
    total_length: f64,
}

fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

impl ScanPath {
    /// Builds a path from surface segment endpoints (meters).
    pub fn new(endpoints: &[(Point3, Point3)]) -> Result<Self, PathError> {
        if endpoints.is_empty() {
            return Err(PathError::Empty);
        }
        let mut segments = Vec::with_capacity(endpoints.len());
        for (i, (a, b)) in endpoints.iter().enumerate() {
            if a.z != 0.0 || b.z != 0.0 {
                return Err(PathError::NonPlanar(i));
            }
            let length = a.distance(b);
            if !(length > 0.0) {
                return Err(PathError::ZeroLength(i));
            }
            segments.push(Segment {
                start: *a,
                end: *b,
                length,
                angle: (b.y - a.y).atan2(b.x - a.x),
            });
        }

        let mut gamma_start = Vec::with_capacity(segments.len());
        let mut acc = 0.0;
        for s in &segments {
            gamma_start.push(acc);
            acc += s.length;
        }

        let mut hatch_lines: Vec<HatchLine> = Vec::new();
        let mut line_of_segment = Vec::with_capacity(segments.len());
        for (k, seg) in segments.iter().enumerate() {
            let continues = k > 0 && {
                let prev = &segments[k - 1];
                prev.end.distance(&seg.start) <= CONNECTION_TOLERANCE
                    && angle_difference(prev.angle, seg.angle) <= ANGLE_TOLERANCE
            };
            if continues {
                hatch_lines.last_mut().unwrap().last_segment = k;
            } else {
                hatch_lines.push(HatchLine {
                    first_segment: k,
                    last_segment: k,
                    angle: seg.angle,
                });
            }
            line_of_segment.push(hatch_lines.len() - 1);
        }

        Ok(Self {
            segments,
            hatch_lines,
            line_of_segment,
            gamma_start,
            total_length: acc,
        })
    }

    pub fn from_millimeters(endpoints_mm: &[[[f64; 2]; 2]]) -> Result<Self, PathError> {
        let pts: Vec<_> = endpoints_mm
            .iter()
            .map(|[a, b]| {
                (
                    Point3::surface(a[0] * 1e-3, a[1] * 1e-3),
                    Point3::surface(b[0] * 1e-3, b[1] * 1e-3),
                )
            })
            .collect();
        Self::new(&pts)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, k: usize) -> &Segment {
        &self.segments[k]
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn hatch_lines(&self) -> &[HatchLine] {
        &self.hatch_lines
    }

    pub fn line_count(&self) -> usize {
        self.hatch_lines.len()
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Scanning distance at the start of segment `k`.
    pub fn gamma_start(&self, k: usize) -> f64 {
        self.gamma_start[k]
    }

    pub fn gamma_end(&self, k: usize) -> f64 {
        self.gamma_start[k] + self.segments[k].length
    }

    /// Scanning distance of the point a fraction `fraction` along segment `k`.
    pub fn scan_distance(&self, k: usize, fraction: f64) -> Result<f64, PathError> {
        if k >= self.len() {
            return Err(PathError::SegmentOutOfRange {
                index: k,
                len: self.len(),
            });
        }
        if !(0.0..=1.0).contains(&fraction) {
            return Err(PathError::FractionOutOfRange(fraction));
        }
        Ok(self.gamma_start[k] + fraction * self.segments[k].length)
    }

    /// First segment of hatch line `l` (the map 𝒮).
    pub fn first_segment_of_line(&self, l: usize) -> usize {
        self.hatch_lines[l].first_segment
    }

    /// Hatch line containing segment `k` (the map 𝓛).
    pub fn line_of_segment(&self, k: usize) -> usize {
        self.line_of_segment[k]
    }

    pub fn hatch_line_maps(&self) -> HatchLineMaps {
        HatchLineMaps {
            first_segment: self.hatch_lines.iter().map(|h| h.first_segment).collect(),
            line_of_segment: self.line_of_segment.clone(),
        }
    }

    /// Whether segment `k` ends where segment `k + 1` begins.
    pub fn connected(&self, k: usize) -> bool {
        k + 1 < self.len()
            && self.segments[k].end.distance(&self.segments[k + 1].start) <= CONNECTION_TOLERANCE
    }

    /// Sub-path made of hatch lines `lines` (0-based, inclusive range).
    pub fn line_subpath(&self, first_line: usize, last_line: usize) -> Result<Self, PathError> {
        let a = self.hatch_lines[first_line].first_segment;
        let b = self.hatch_lines[last_line].last_segment;
        let pts: Vec<_> = self.segments[a..=b].iter().map(|s| (s.start, s.end)).collect();
        Self::new(&pts)
    }
}

/// The two index maps between hatch lines and segments.
#[derive(Debug, Clone, PartialEq)]
pub struct HatchLineMaps {
    pub first_segment: Vec<usize>,
    pub line_of_segment: Vec<usize>,
}

/// Segment start/end times induced by per-segment speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTiming {
    start: Vec<f64>,
    end: Vec<f64>,
}

impl ScanTiming {
    /// Derives times from speeds. `jump_dwell` (s) is inserted before every
    /// segment that does not connect to its predecessor.
    pub fn new(path: &ScanPath, speeds: &[f64], jump_dwell: f64) -> Result<Self, PathError> {
        if speeds.len() != path.len() {
            return Err(PathError::SpeedCount {
                expected: path.len(),
                got: speeds.len(),
            });
        }
        if !(jump_dwell >= 0.0) {
            return Err(PathError::NegativeDwell);
        }
        let mut start = Vec::with_capacity(speeds.len());
        let mut end = Vec::with_capacity(speeds.len());
        let mut t = 0.0;
        for (k, (seg, &v)) in path.segments.iter().zip(speeds).enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PathError::InvalidSpeed(k));
            }
            if k > 0 && !path.connected(k - 1) {
                t += jump_dwell;
            }
            start.push(t);
            t += seg.length / v;
            end.push(t);
        }
        Ok(Self { start, end })
    }

    pub fn start(&self, k: usize) -> f64 {
        self.start[k]
    }

    pub fn end(&self, k: usize) -> f64 {
        self.end[k]
    }

    pub fn starts(&self) -> &[f64] {
        &self.start
    }

    pub fn ends(&self) -> &[f64] {
        &self.end
    }

    pub fn total_time(&self) -> f64 {
        *self.end.last().unwrap_or(&0.0)
    }

    /// Segment active at time `t`, i.e. `t ∈ (t_k^i, t_k^f]`; segment 0 at t = 0.
    /// During a dwell the previous segment is reported.
    pub fn active_segment(&self, t: f64) -> usize {
        let idx = self.end.partition_point(|&e| e < t);
        idx.min(self.end.len() - 1)
    }
}

/// Beam center at time `t`.
pub fn beam_position(path: &ScanPath, timing: &ScanTiming, t: f64) -> Result<Point3, PathError> {
    let end = timing.total_time();
    if !(0.0..=end).contains(&t) {
        return Err(PathError::TimeOutOfRange { t, end });
    }
    let k = timing.active_segment(t);
    let seg = &path.segments[k];
    let dur = timing.end(k) - timing.start(k);
    let f = ((t - timing.start(k)) / dur).clamp(0.0, 1.0);
    Ok(seg.point_at(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetMode {
    /// `(x, y + w, -d)` for every point of the path.
    #[default]
    GlobalOffset,
    /// Offset by `w` to the right of the local travel direction, at depth `d`.
    NormalOffset,
}

/// Per-segment image of the beam path under the width/depth offset map.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondaryPath {
    starts: Vec<Point3>,
    ends: Vec<Point3>,
    pub width: f64,
    pub depth: f64,
    pub mode: OffsetMode,
}

impl SecondaryPath {
    pub fn new(path: &ScanPath, width: f64, depth: f64, mode: OffsetMode) -> Result<Self, PathError> {
        if !(depth >= 0.0) {
            return Err(PathError::NegativeDepth(depth));
        }
        let map = |p: &Point3, angle: f64| match mode {
            OffsetMode::GlobalOffset => Point3::new(p.x, p.y + width, -depth),
            OffsetMode::NormalOffset => {
                Point3::new(p.x + width * angle.sin(), p.y - width * angle.cos(), -depth)
            }
        };
        let starts = path.segments.iter().map(|s| map(&s.start, s.angle)).collect();
        let ends = path.segments.iter().map(|s| map(&s.end, s.angle)).collect();
        Ok(Self {
            starts,
            ends,
            width,
            depth,
            mode,
        })
    }

    pub fn start(&self, k: usize) -> Point3 {
        self.starts[k]
    }

    pub fn end(&self, k: usize) -> Point3 {
        self.ends[k]
    }

    /// Image of the point a fraction `f` along segment `k`.
    pub fn point_at(&self, k: usize, f: f64) -> Point3 {
        self.starts[k].lerp(&self.ends[k], f)
    }
}

/// Named path generators (all lengths in millimeters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum PathGenerator {
    /// Parallel lines along +x/-x alternately, stepping upward in y.
    Snake {
        lines: usize,
        line_length_mm: f64,
        line_offset_mm: f64,
        segments_per_line: usize,
    },
    /// Radial lines over the first quadrant of an annulus, hatched
    /// counter-clockwise, each line running from the outer to the inner radius.
    AnnulusQuadrant {
        r_inner_mm: f64,
        r_outer_mm: f64,
        n_lines: usize,
        delta_angle_deg: f64,
        segments_per_line: usize,
    },
}

impl PathGenerator {
    pub fn segments_mm(&self) -> Result<Vec<[[f64; 2]; 2]>, PathError> {
        let mut out = Vec::new();
        match *self {
            PathGenerator::Snake {
                lines,
                line_length_mm,
                line_offset_mm,
                segments_per_line,
            } => {
                if lines == 0 || segments_per_line == 0 || !(line_length_mm > 0.0) {
                    return Err(PathError::Generator("snake needs positive sizes".into()));
                }
                let dx = line_length_mm / segments_per_line as f64;
                for l in 0..lines {
                    let y = l as f64 * line_offset_mm;
                    for j in 0..segments_per_line {
                        let (a, b) = (j as f64 * dx, (j + 1) as f64 * dx);
                        if l % 2 == 0 {
                            out.push([[a, y], [b, y]]);
                        } else {
                            out.push([[line_length_mm - a, y], [line_length_mm - b, y]]);
                        }
                    }
                }
            }
            PathGenerator::AnnulusQuadrant {
                r_inner_mm,
                r_outer_mm,
                n_lines,
                delta_angle_deg,
                segments_per_line,
            } => {
                if n_lines == 0 || segments_per_line == 0 || !(r_outer_mm > r_inner_mm) {
                    return Err(PathError::Generator(
                        "annulus needs r_outer > r_inner and positive counts".into(),
                    ));
                }
                let dr = (r_outer_mm - r_inner_mm) / segments_per_line as f64;
                for l in 0..n_lines {
                    let phi = (l as f64 * delta_angle_deg).to_radians();
                    let (c, s) = (phi.cos(), phi.sin());
                    for j in 0..segments_per_line {
                        let ra = r_outer_mm - j as f64 * dr;
                        let rb = r_outer_mm - (j + 1) as f64 * dr;
                        out.push([[ra * c, ra * s], [rb * c, rb * s]]);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn build(&self) -> Result<ScanPath, PathError> {
        ScanPath::from_millimeters(&self.segments_mm()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example1() -> ScanPath {
        PathGenerator::Snake {
            lines: 5,
            line_length_mm: 5.0,
            line_offset_mm: 0.2,
            segments_per_line: 10,
        }
        .build()
        .unwrap()
    }

    fn example2() -> ScanPath {
        PathGenerator::AnnulusQuadrant {
            r_inner_mm: 1.0,
            r_outer_mm: 5.0,
            n_lines: 19,
            delta_angle_deg: 5.0,
            segments_per_line: 8,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn example_geometries() {
        let p = example1();
        assert_eq!((p.len(), p.line_count()), (50, 5));
        let p2 = example2();
        assert_eq!((p2.len(), p2.line_count()), (152, 19));
        for (l, h) in p2.hatch_lines().iter().enumerate() {
            assert_eq!(h.first_segment, 8 * l);
            assert_relative_eq!(p2.gamma_end(h.last_segment) - p2.gamma_start(h.first_segment), 4e-3, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_segment() {
        let p = ScanPath::new(&[(Point3::surface(0.0, 0.0), Point3::surface(1e-3, 0.0))]).unwrap();
        assert_eq!((p.len(), p.line_count()), (1, 1));
        assert_eq!(p.gamma_start(0), 0.0);
    }

    #[test]
    fn rejects_bad_segments() {
        let a = Point3::surface(0.0, 0.0);
        let b = Point3::surface(1e-3, 0.0);
        assert_eq!(ScanPath::new(&[(a, b), (b, b)]).unwrap_err(), PathError::ZeroLength(1));
        assert_eq!(
            ScanPath::new(&[(a, Point3::new(1e-3, 0.0, 1e-6))]).unwrap_err(),
            PathError::NonPlanar(0)
        );
        assert_eq!(ScanPath::new(&[]).unwrap_err(), PathError::Empty);
    }

    #[test]
    fn scan_distance_examples() {
        let p = example1();
        assert_eq!(p.scan_distance(0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(p.scan_distance(10, 0.0).unwrap(), 5e-3, epsilon = 1e-15);
        assert_relative_eq!(p.scan_distance(49, 1.0).unwrap(), 25e-3, epsilon = 1e-15);
        assert!(matches!(p.scan_distance(3, 1.5), Err(PathError::FractionOutOfRange(_))));
        assert!(matches!(p.scan_distance(50, 0.5), Err(PathError::SegmentOutOfRange { .. })));
    }

    #[test]
    fn hatch_maps() {
        let m = example1().hatch_line_maps();
        assert_eq!(m.first_segment, vec![0, 10, 20, 30, 40]);
        let m2 = example2().hatch_line_maps();
        assert!(m2.first_segment.iter().enumerate().all(|(l, &s)| s == 8 * l));
        for (n, &l) in m2.line_of_segment.iter().enumerate() {
            assert_eq!(l, n / 8);
        }
    }

    #[test]
    fn collinear_connected_path_is_one_line() {
        let pts: Vec<_> = (0..7)
            .map(|i| (Point3::surface(i as f64 * 1e-4, 0.0), Point3::surface((i + 1) as f64 * 1e-4, 0.0)))
            .collect();
        let p = ScanPath::new(&pts).unwrap();
        assert_eq!(p.line_count(), 1);
        assert!(p.hatch_line_maps().line_of_segment.iter().all(|&l| l == 0));
    }

    #[test]
    fn beam_position_examples() {
        let p = ScanPath::new(&[(Point3::surface(0.0, 0.0), Point3::surface(1e-3, 0.0))]).unwrap();
        let timing = ScanTiming::new(&p, &[0.5], 0.0).unwrap();
        assert_eq!(beam_position(&p, &timing, 0.0).unwrap(), Point3::surface(0.0, 0.0));
        let mid = beam_position(&p, &timing, 1e-3).unwrap();
        assert_relative_eq!(mid.x, 0.5e-3, epsilon = 1e-15);
        assert!(beam_position(&p, &timing, 3e-3).is_err());

        let p = example1();
        let timing = ScanTiming::new(&p, &vec![0.5; 50], 0.0).unwrap();
        for k in 0..p.len() {
            let x = beam_position(&p, &timing, timing.end(k)).unwrap();
            assert!(x.distance(&p.segment(k).end) < 1e-15);
        }
    }

    #[test]
    fn dwell_only_at_jumps() {
        let p = example1();
        let timing = ScanTiming::new(&p, &vec![0.5; 50], 1e-3).unwrap();
        assert_relative_eq!(timing.start(1), timing.end(0));
        assert_relative_eq!(timing.start(10), timing.end(9) + 1e-3);
        assert!(ScanTiming::new(&p, &vec![0.5; 50], -1.0).is_err());
        assert!(matches!(ScanTiming::new(&p, &vec![0.5; 49], 0.0), Err(PathError::SpeedCount { .. })));
    }

    #[test]
    fn secondary_path_modes() {
        let p = example1();
        let s = SecondaryPath::new(&p, 1e-4, 5e-5, OffsetMode::GlobalOffset).unwrap();
        for k in 0..p.len() {
            let (a, b) = (s.start(k), s.end(k));
            assert_eq!(a, Point3::new(p.segment(k).start.x, p.segment(k).start.y + 1e-4, -5e-5));
            assert_eq!(b.z, -5e-5);
        }
        let id = SecondaryPath::new(&p, 0.0, 0.0, OffsetMode::NormalOffset).unwrap();
        assert!(id.start(3).distance(&p.segment(3).start) < 1e-18);
        let n = SecondaryPath::new(&p, 1e-4, 0.0, OffsetMode::NormalOffset).unwrap();
        assert_relative_eq!(n.start(0).y, -1e-4, epsilon = 1e-18);
        assert!(SecondaryPath::new(&p, 1e-4, -1.0, OffsetMode::GlobalOffset).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gamma_additive_and_increasing(lengths in prop::collection::vec(1e-5f64..1e-3, 1..30)) {
                let mut x = 0.0;
                let pts: Vec<_> = lengths.iter().map(|l| {
                    let a = Point3::surface(x, 0.0);
                    x += l;
                    (a, Point3::surface(x, 0.0))
                }).collect();
                let p = ScanPath::new(&pts).unwrap();
                prop_assert_eq!(p.gamma_start(0), 0.0);
                for k in 1..p.len() {
                    prop_assert!((p.gamma_start(k) - (p.gamma_start(k - 1) + lengths[k - 1])).abs() < 1e-15);
                    prop_assert!(p.gamma_start(k) > p.gamma_start(k - 1));
                }
                prop_assert!((p.gamma_end(p.len() - 1) - lengths.iter().sum::<f64>()).abs() < 1e-14);
            }

            #[test]
            fn hatch_maps_are_consistent(lines in 1usize..8, per in 1usize..6) {
                let p = PathGenerator::Snake { lines, line_length_mm: 1.0, line_offset_mm: 0.1, segments_per_line: per }
                    .build().unwrap();
                let m = p.hatch_line_maps();
                prop_assert_eq!(m.first_segment.len(), lines);
                for (l, &s) in m.first_segment.iter().enumerate() {
                    prop_assert_eq!(m.line_of_segment[s], l);
                }
                for n in 0..p.len() {
                    let l = m.line_of_segment[n];
                    let next = m.first_segment.get(l + 1).copied().unwrap_or(p.len());
                    prop_assert!(m.first_segment[l] <= n && n < next);
                }
            }

            #[test]
            fn speed_scaling_scales_time(c in 0.1f64..10.0) {
                let p = PathGenerator::Snake { lines: 2, line_length_mm: 1.0, line_offset_mm: 0.1, segments_per_line: 3 }
                    .build().unwrap();
                let v: Vec<f64> = (0..p.len()).map(|k| 0.1 + 0.05 * k as f64).collect();
                let t1 = ScanTiming::new(&p, &v, 0.0).unwrap();
                let vc: Vec<f64> = v.iter().map(|x| x * c).collect();
                let t2 = ScanTiming::new(&p, &vc, 0.0).unwrap();
                for k in 0..p.len() {
                    prop_assert!((t2.end(k) * c - t1.end(k)).abs() <= 1e-12 * t1.end(k));
                }
            }
        }
    }
}
