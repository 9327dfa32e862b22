//! Synthetic 2D lidar enemy detection.
//!
//! Works in continuous cell units: grid cell `(i, j)` covers
//! `[i, i+1) x [j, j+1)`, so a robot standing on cell `(i, j)` is centred at
//! `(i + 0.5, j + 0.5)`. The pipeline is scan -> split-and-merge line
//! segments -> one circle per segment (the segment is treated as a chord) ->
//! drop circles centred inside walls -> fuse both robots' detections.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{CellKind, GridMap, Position};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LidarError {
    #[error("sensor pose ({0}, {1}) is outside the map or inside a wall")]
    InvalidPose(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Centre of grid cell `p`.
    pub fn cell_center(p: Position) -> Vec2 {
        Vec2::new(p.x as f64 + 0.5, p.y as f64 + 0.5)
    }

    /// Grid cell containing the point.
    pub fn cell(self) -> Position {
        Position::new(self.x.floor() as i32, self.y.floor() as i32)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;

    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;

    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub bearing: f64,
    pub range: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub origin: Vec2,
    pub max_range: f64,
    pub beams: Vec<Beam>,
}

impl LidarScan {
    pub fn hit_point(&self, beam: &Beam) -> Vec2 {
        self.origin + Vec2::new(beam.bearing.cos(), beam.bearing.sin()).scale(beam.range)
    }

    /// Angular spacing between consecutive beams.
    pub fn resolution(&self) -> f64 {
        TAU / self.beams.len().max(1) as f64
    }
}

/// A robot body as seen by the lidar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p1: Vec2,
    pub p2: Vec2,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.p1.dist(self.p2)
    }

    pub fn midpoint(&self) -> Vec2 {
        (self.p1 + self.p2).scale(0.5)
    }

    /// Perpendicular distance from `p` to the segment's supporting line.
    pub fn line_distance(&self, p: Vec2) -> f64 {
        let d = self.p2 - self.p1;
        let len = d.norm();
        if len == 0.0 {
            return p.dist(self.p1);
        }
        (d.cross(p - self.p1) / len).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    /// Largest point-to-chord deviation before a group is split.
    pub split_threshold: f64,
    pub min_points_per_segment: usize,
    /// Displacement of the circle centre behind the chord, and radius padding.
    pub circle_radius_margin: f64,
    pub robot_radius: f64,
    pub ally_match_radius: f64,
    /// Neighbouring hit points closer than
    /// `group_distance + group_beam_factor * range * resolution` share a group.
    pub group_distance: f64,
    pub group_beam_factor: f64,
    /// Standard deviation of optional Gaussian range jitter; 0 disables it.
    pub range_noise: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            split_threshold: 0.2,
            min_points_per_segment: 4,
            circle_radius_margin: 0.3,
            robot_radius: 0.5,
            ally_match_radius: 1.0,
            group_distance: 0.3,
            group_beam_factor: 3.0,
            range_noise: 0.0,
        }
    }
}

/// First wall boundary crossed along the ray, by grid traversal.
fn ray_wall(map: &GridMap, origin: Vec2, dir: Vec2, max_range: f64) -> Option<f64> {
    let mut cell = origin.cell();
    let step_x = if dir.x > 0.0 { 1 } else { -1 };
    let step_y = if dir.y > 0.0 { 1 } else { -1 };
    let next_boundary = |c: i32, s: i32| if s > 0 { (c + 1) as f64 } else { c as f64 };
    let mut t_max_x = if dir.x != 0.0 { (next_boundary(cell.x, step_x) - origin.x) / dir.x } else { f64::INFINITY };
    let mut t_max_y = if dir.y != 0.0 { (next_boundary(cell.y, step_y) - origin.y) / dir.y } else { f64::INFINITY };
    let t_dx = if dir.x != 0.0 { 1.0 / dir.x.abs() } else { f64::INFINITY };
    let t_dy = if dir.y != 0.0 { 1.0 / dir.y.abs() } else { f64::INFINITY };
    loop {
        let t = if t_max_x < t_max_y {
            cell.x += step_x;
            let t = t_max_x;
            t_max_x += t_dx;
            t
        } else {
            cell.y += step_y;
            let t = t_max_y;
            t_max_y += t_dy;
            t
        };
        if t > max_range || !map.in_bounds(cell) {
            return None;
        }
        if map.is_wall(cell) {
            return Some(t);
        }
    }
}

/// Nearest forward intersection of the ray with the disc boundary.
fn ray_disc(origin: Vec2, dir: Vec2, disc: &Disc) -> Option<f64> {
    let oc = origin - disc.center;
    let b = oc.dot(dir);
    let c = oc.dot(oc) - disc.radius * disc.radius;
    if c <= 0.0 {
        return None;
    }
    let disc2 = b * b - c;
    if disc2 < 0.0 {
        return None;
    }
    let t = -b - disc2.sqrt();
    (t >= 0.0).then_some(t)
}

/// Casts `n_beams` evenly spaced beams from `pose`, bearing `k * 2pi / n`.
pub fn simulate_scan(
    map: &GridMap,
    pose: Vec2,
    n_beams: usize,
    max_range: f64,
    robots: &[Disc],
) -> Result<LidarScan, LidarError> {
    if map.get(pose.cell()) != Some(CellKind::Empty) {
        return Err(LidarError::InvalidPose(pose.x, pose.y));
    }
    let beams = (0..n_beams)
        .map(|k| {
            let bearing = TAU * k as f64 / n_beams as f64;
            let dir = Vec2::new(bearing.cos(), bearing.sin());
            let mut best = ray_wall(map, pose, dir, max_range);
            for d in robots {
                if let Some(t) = ray_disc(pose, dir, d) {
                    if t <= max_range && best.is_none_or(|b| t < b) {
                        best = Some(t);
                    }
                }
            }
            match best {
                Some(range) => Beam { bearing, range, hit: true },
                None => Beam { bearing, range: max_range, hit: false },
            }
        })
        .collect();
    Ok(LidarScan { origin: pose, max_range, beams })
}

/// Adds zero-mean Gaussian jitter to every hit range, clamped to
/// `[0, max_range]`.
pub fn jitter_ranges<R: Rng + ?Sized>(scan: &mut LidarScan, std_dev: f64, rng: &mut R) {
    if std_dev <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, std_dev).expect("finite standard deviation");
    for b in scan.beams.iter_mut().filter(|b| b.hit) {
        b.range = (b.range + normal.sample(rng)).clamp(0.0, scan.max_range);
    }
}

/// Runs of adjacent hit points with no range discontinuity.
fn group_points(scan: &LidarScan, cfg: &DetectionConfig) -> Vec<Vec<Vec2>> {
    let n = scan.beams.len();
    let res = scan.resolution();
    let linked = |i: usize, j: usize| {
        let (a, b) = (&scan.beams[i], &scan.beams[j]);
        if !(a.hit && b.hit) {
            return false;
        }
        let gap = cfg.group_distance + cfg.group_beam_factor * a.range.min(b.range) * res;
        scan.hit_point(a).dist(scan.hit_point(b)) <= gap
    };
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if !scan.beams[i].hit {
            continue;
        }
        match groups.last_mut() {
            Some(g) if *g.last().unwrap() + 1 == i && linked(i - 1, i) => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    // Close the circle: the last run may continue into the first.
    if groups.len() > 1 && n > 1 && groups[0][0] == 0 && *groups.last().unwrap().last().unwrap() == n - 1 && linked(n - 1, 0)
    {
        let mut tail = groups.pop().unwrap();
        tail.extend(groups[0].iter());
        groups[0] = tail;
    }
    groups.into_iter().map(|g| g.into_iter().map(|i| scan.hit_point(&scan.beams[i])).collect()).collect()
}

fn max_deviation(points: &[Vec2]) -> (usize, f64) {
    let chord = Segment { p1: points[0], p2: points[points.len() - 1] };
    points
        .iter()
        .enumerate()
        .skip(1)
        .take(points.len().saturating_sub(2))
        .map(|(i, &p)| (i, chord.line_distance(p)))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Iterative end-point fit: index ranges `[start, end]` whose points stay
/// within `threshold` of their chord.
fn split(points: &[Vec2], start: usize, end: usize, threshold: f64, out: &mut Vec<(usize, usize)>) {
    if end <= start + 1 {
        out.push((start, end));
        return;
    }
    let (k, dev) = max_deviation(&points[start..=end]);
    if dev > threshold {
        split(points, start, start + k, threshold, out);
        split(points, start + k, end, threshold, out);
    } else {
        out.push((start, end));
    }
}

/// Split-and-merge line extraction.
pub fn extract_segments(scan: &LidarScan, cfg: &DetectionConfig) -> Vec<Segment> {
    let mut segments = Vec::new();
    for points in group_points(scan, cfg) {
        if points.len() < cfg.min_points_per_segment {
            continue;
        }
        // A robot-sized group is one chord: splitting a disc's arc would
        // only yield several overlapping circles for the same robot.
        let (first, last) = (points[0], points[points.len() - 1]);
        if first.dist(last) <= 2.0 * cfg.robot_radius + cfg.split_threshold {
            if first != last {
                segments.push(Segment { p1: first, p2: last });
            }
            continue;
        }
        let mut pieces = Vec::new();
        split(&points, 0, points.len() - 1, cfg.split_threshold, &mut pieces);
        // Merge neighbours whose union is still straight.
        let mut merged: Vec<(usize, usize)> = Vec::new();
        for piece in pieces {
            if let Some(last) = merged.last_mut() {
                if last.1 == piece.0 && max_deviation(&points[last.0..=piece.1]).1 <= cfg.split_threshold {
                    last.1 = piece.1;
                    continue;
                }
            }
            merged.push(piece);
        }
        for (s, e) in merged {
            if e + 1 - s < cfg.min_points_per_segment || points[s] == points[e] {
                continue;
            }
            segments.push(Segment { p1: points[s], p2: points[e] });
        }
    }
    segments
}

/// Treats the segment as a chord: the centre sits `margin` behind the
/// midpoint (away from the sensor) and the radius is half the chord plus
/// `margin`.
pub fn segment_to_circle(seg: &Segment, sensor: Vec2, cfg: &DetectionConfig) -> Circle {
    let mid = seg.midpoint();
    let d = seg.p2 - seg.p1;
    let len = d.norm();
    let mut normal = Vec2::new(-d.y / len, d.x / len);
    if normal.dot(mid - sensor) < 0.0 {
        normal = normal.scale(-1.0);
    }
    Circle { center: mid + normal.scale(cfg.circle_radius_margin), radius: len / 2.0 + cfg.circle_radius_margin }
}

/// True when every grid cell touching `p` (one, or two/four on a boundary)
/// is a wall. Boundary points next to free space count as free.
pub fn inside_wall(map: &GridMap, p: Vec2) -> bool {
    let candidates = |v: f64| {
        let f = v.floor();
        if v == f {
            vec![f as i32 - 1, f as i32]
        } else {
            vec![f as i32]
        }
    };
    let mut any = false;
    for y in candidates(p.y) {
        for x in candidates(p.x) {
            let c = Position::new(x, y);
            if !map.in_bounds(c) {
                continue;
            }
            if !map.is_wall(c) {
                return false;
            }
            any = true;
        }
    }
    any
}

/// Drops circles whose centre lies inside a wall.
pub fn filter_walls(circles: Vec<Circle>, map: &GridMap) -> Vec<Circle> {
    circles.into_iter().filter(|c| !inside_wall(map, c.center)).collect()
}

/// One sensor's circles after wall filtering.
pub fn detect(map: &GridMap, scan: &LidarScan, cfg: &DetectionConfig) -> Vec<Circle> {
    let circles = extract_segments(scan, cfg).iter().map(|s| segment_to_circle(s, scan.origin, cfg)).collect();
    filter_walls(circles, map)
}

/// Nearest non-wall cell to `p` by centre distance; ties row-major.
pub fn snap_to_free_cell(map: &GridMap, p: Vec2) -> Option<Position> {
    let own = p.cell();
    if map.is_free(own) {
        return Some(own);
    }
    map.positions()
        .filter(|&c| map.is_free(c))
        .map(|c| (Vec2::cell_center(c).dist(p), c))
        .fold(None, |best: Option<(f64, Position)>, cur| match best {
            Some(b) if b.0 <= cur.0 => Some(b),
            _ => Some(cur),
        })
        .map(|(_, c)| c)
}

/// Merges both robots' detections into enemy cells. Circles near a known
/// ally are dropped, circles within `ally_match_radius` of each other are
/// merged by centroid, and centroids snap to the nearest free cell.
pub fn fuse_views(
    detections_a: &[Circle],
    detections_b: &[Circle],
    allies: &[Vec2],
    map: &GridMap,
    cfg: &DetectionConfig,
) -> Vec<Position> {
    let centers: Vec<Vec2> = detections_a
        .iter()
        .chain(detections_b)
        .map(|c| c.center)
        .filter(|c| allies.iter().all(|a| a.dist(*c) > cfg.ally_match_radius))
        .collect();

    // Single-linkage clusters via union-find.
    let mut parent: Vec<usize> = (0..centers.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if centers[i].dist(centers[j]) <= cfg.ally_match_radius {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut sums: Vec<(Vec2, usize)> = vec![(Vec2::default(), 0); centers.len()];
    for (i, &c) in centers.iter().enumerate() {
        let r = root(&mut parent, i);
        sums[r].0 = sums[r].0 + c;
        sums[r].1 += 1;
    }
    let mut out: Vec<Position> = sums
        .into_iter()
        .filter(|(_, n)| *n > 0)
        .filter_map(|(s, n)| snap_to_free_cell(map, s.scale(1.0 / n as f64)))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// A two-sensor scene: the sensing robots and the enemy robots, all discs of
/// `DetectionConfig::robot_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub sensors: Vec<Vec2>,
    pub enemies: Vec<Vec2>,
    #[serde(default = "default_beams")]
    pub n_beams: usize,
    #[serde(default = "default_max_range")]
    pub max_range: f64,
}

fn default_beams() -> usize {
    720
}

fn default_max_range() -> f64 {
    32.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneDetection {
    pub scans: Vec<LidarScan>,
    /// Wall-filtered circles from every sensor.
    pub circles: Vec<Circle>,
    pub enemies: Vec<Position>,
}

/// Scans from every sensor (each sees the other sensors and the enemies),
/// detects and fuses. Jitter is applied when `cfg.range_noise > 0`.
pub fn detect_scene<R: Rng + ?Sized>(
    map: &GridMap,
    scene: &Scene,
    cfg: &DetectionConfig,
    rng: &mut R,
) -> Result<SceneDetection, LidarError> {
    let disc = |center: Vec2| Disc { center, radius: cfg.robot_radius };
    let mut scans = Vec::with_capacity(scene.sensors.len());
    let mut per_sensor = Vec::with_capacity(scene.sensors.len());
    for (i, &pose) in scene.sensors.iter().enumerate() {
        let others: Vec<Disc> = scene
            .sensors
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &s)| disc(s))
            .chain(scene.enemies.iter().map(|&e| disc(e)))
            .collect();
        let mut scan = simulate_scan(map, pose, scene.n_beams, scene.max_range, &others)?;
        if cfg.range_noise > 0.0 {
            jitter_ranges(&mut scan, cfg.range_noise, rng);
        }
        per_sensor.push(detect(map, &scan, cfg));
        scans.push(scan);
    }
    let first = per_sensor.first().cloned().unwrap_or_default();
    let rest: Vec<Circle> = per_sensor.iter().skip(1).flatten().copied().collect();
    let enemies = fuse_views(&first, &rest, &scene.sensors, map, cfg);
    let circles = per_sensor.into_iter().flatten().collect();
    Ok(SceneDetection { scans, circles, enemies })
}
