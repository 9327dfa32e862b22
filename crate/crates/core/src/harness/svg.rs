//! Deterministic SVG rendering of maps, match traces, planned paths and
//! lidar detections. Output depends only on the inputs; numbers are printed
//! with fixed precision so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path as FsPath;

use super::{HarnessError, MatchResult};
use crate::arena::{ArenaConfig, ArenaState, GridMap, Position, RobotId, Team};
use crate::lidar::{Circle, LidarScan, Vec2};
use crate::planner::{plan, PlanRequest};
use crate::rewards::{assign_stag, punishment, r1, RewardConfig};

const CELL: f64 = 20.0;
const LEGEND_H: f64 = 24.0;

pub const BLUE: &str = "#1f5fd6";
pub const RED: &str = "#d62728";
pub const GREEN: &str = "#2ca02c";
pub const YELLOW: &str = "#e6c200";

/// A labelled polyline over cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlay {
    pub label: String,
    pub color: &'static str,
    pub cells: Vec<Position>,
}

struct Canvas {
    body: String,
    legend: Vec<(String, &'static str)>,
    width: usize,
    height: usize,
}

fn c(v: i32) -> f64 {
    (v as f64 + 0.5) * CELL
}

impl Canvas {
    fn new(map: &GridMap) -> Self {
        let mut body = String::new();
        let (w, h) = (map.width() as f64 * CELL, map.height() as f64 * CELL);
        let _ = writeln!(body, r##"<rect x="0" y="0" width="{w:.1}" height="{h:.1}" fill="#ffffff" stroke="#000000"/>"##);
        for p in map.positions().filter(|&p| map.is_wall(p)) {
            let _ = writeln!(
                body,
                r##"<rect x="{:.1}" y="{:.1}" width="{CELL:.1}" height="{CELL:.1}" fill="#404040"/>"##,
                p.x as f64 * CELL,
                p.y as f64 * CELL
            );
        }
        Canvas { body, legend: Vec::new(), width: map.width(), height: map.height() }
    }

    fn polyline(&mut self, cells: &[Position], color: &str, width: f64, dashed: bool) {
        let pts: Vec<String> = cells.iter().map(|p| format!("{:.1},{:.1}", c(p.x), c(p.y))).collect();
        let dash = if dashed { r#" stroke-dasharray="4,3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width:.1}"{dash}/>"#,
            pts.join(" ")
        );
    }

    fn dot(&mut self, p: Vec2, r: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{color}"/>"#,
            p.x * CELL,
            p.y * CELL,
            r * CELL
        );
    }

    fn ring(&mut self, center: Vec2, r: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            center.x * CELL,
            center.y * CELL,
            r * CELL
        );
    }

    fn line(&mut self, a: Vec2, b: Vec2, color: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="{width:.2}"/>"#,
            a.x * CELL,
            a.y * CELL,
            b.x * CELL,
            b.y * CELL
        );
    }

    fn label(&mut self, text: &str, color: &'static str) {
        if !self.legend.iter().any(|(t, _)| t == text) {
            self.legend.push((text.to_string(), color));
        }
    }

    fn finish(self) -> String {
        let (w, h) = (self.width as f64 * CELL, self.height as f64 * CELL);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{:.1}" viewBox="0 0 {w:.1} {:.1}">"#,
            h + LEGEND_H,
            h + LEGEND_H
        );
        out.push_str(&self.body);
        let mut x = 4.0;
        let y = h + LEGEND_H / 2.0;
        for (text, color) in &self.legend {
            let _ = writeln!(out, r#"<rect x="{x:.1}" y="{:.1}" width="12.0" height="6.0" fill="{color}"/>"#, y - 3.0);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="11">{text}</text>"#,
                x + 16.0,
                y + 4.0
            );
            x += 24.0 + 7.0 * text.len() as f64;
        }
        out.push_str("</svg>\n");
        out
    }
}

fn team_color(id: RobotId) -> &'static str {
    match id.team() {
        Team::Blue => BLUE,
        Team::Red => RED,
    }
}

fn robot_name(id: RobotId) -> &'static str {
    match id {
        RobotId::Agent1 => "A1",
        RobotId::Agent2 => "A2",
        RobotId::Enemy1 => "E1",
        RobotId::Enemy2 => "E2",
    }
}

/// Hill-climbs a per-cell score from `start` for up to `max_len` moves,
/// stopping at a local maximum. Ties go to the first neighbour in
/// Up/Down/Left/Right order.
fn greedy_path(map: &GridMap, start: Position, max_len: usize, score: impl Fn(Position) -> f64) -> Vec<Position> {
    let mut cells = vec![start];
    let mut cur = start;
    for _ in 0..max_len {
        let next = [(0, -1), (0, 1), (-1, 0), (1, 0)]
            .into_iter()
            .map(|(dx, dy)| cur.offset(dx, dy))
            .filter(|&n| map.is_free(n))
            .fold(None, |best: Option<(f64, Position)>, n| {
                let s = score(n);
                match best {
                    Some(b) if b.0 >= s => Some(b),
                    _ => Some((s, n)),
                }
            });
        match next {
            Some((s, n)) if s > score(cur) => {
                cur = n;
                cells.push(n);
            }
            _ => break,
        }
    }
    cells
}

/// Planner overlays for `Agent1` of `state`: greedy ascent on r1 (green),
/// on r2 (yellow) and the standoff A* path (red).
pub fn planner_overlays(state: &ArenaState, map: &GridMap, cfg: &ArenaConfig) -> Vec<Overlay> {
    let assignment = assign_stag(state);
    let stag = state.last_seen(assignment.stag);
    let hare = state.last_seen(assignment.hare);
    let rcfg = RewardConfig::for_arena(map, cfg);
    let start = state.position(RobotId::Agent1);
    let at = |p: Position| {
        let mut s = *state;
        s.pos[RobotId::Agent1.index()] = p;
        s
    };
    let max_len = map.width() * map.height();
    let mut out = vec![
        Overlay {
            label: "r1".into(),
            color: GREEN,
            cells: greedy_path(map, start, max_len, |p| r1(&at(p), RobotId::Agent1, stag, &rcfg)),
        },
        Overlay {
            label: "r2".into(),
            color: YELLOW,
            cells: greedy_path(map, start, max_len, |p| {
                let s = at(p);
                r1(&s, RobotId::Agent1, stag, &rcfg) + punishment(&s, RobotId::Agent1, hare, &rcfg)
            }),
        },
    ];
    let req = PlanRequest { start, stag, hare, attack_range: cfg.attack_range, safe_distance: cfg.safe_distance };
    if let Ok(path) = plan(map, &req) {
        out.push(Overlay { label: "A*".into(), color: RED, cells: path.cells });
    }
    out
}

/// Map, robot trajectories and optional overlays. A robot's polyline has one
/// point per trace state and is drawn only if the robot moved.
pub fn trace_svg(result: &MatchResult, map: &GridMap, overlays: &[Overlay]) -> String {
    let mut cv = Canvas::new(map);
    for o in overlays {
        cv.polyline(&o.cells, o.color, 3.0, true);
        cv.label(&o.label, o.color);
    }
    let trace = result.trace.as_deref().unwrap_or(&[]);
    if let Some(first) = trace.first() {
        for id in RobotId::ALL {
            let cells: Vec<Position> = trace.iter().map(|s| s.position(id)).collect();
            if cells.iter().any(|&p| p != first.position(id)) {
                cv.polyline(&cells, team_color(id), 2.0, false);
            }
            let last = *cells.last().unwrap();
            cv.dot(Vec2::cell_center(last), 0.3, team_color(id));
            let _ = writeln!(
                cv.body,
                r##"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="9" fill="#000000">{}</text>"##,
                c(last.x) + 6.0,
                c(last.y) - 6.0,
                robot_name(id)
            );
        }
        cv.label("blue team", BLUE);
        cv.label("red team", RED);
    }
    cv.finish()
}

/// Writes [`trace_svg`] with the planner overlays for the first trace state.
pub fn emit_trace_svg(result: &MatchResult, map: &GridMap, cfg: &ArenaConfig, path: &FsPath) -> Result<(), HarnessError> {
    let overlays = result
        .trace
        .as_ref()
        .and_then(|t| t.first())
        .map(|s| planner_overlays(s, map, cfg))
        .unwrap_or_default();
    fs::write(path, trace_svg(result, map, &overlays))?;
    Ok(())
}

/// A single planned path with its stag, hare and safety ring.
pub fn plan_svg(map: &GridMap, req: &PlanRequest, path: Option<&[Position]>) -> String {
    let mut cv = Canvas::new(map);
    cv.ring(Vec2::cell_center(req.hare), req.safe_distance, RED);
    cv.ring(Vec2::cell_center(req.stag), req.attack_range, GREEN);
    if let Some(cells) = path {
        cv.polyline(cells, RED, 3.0, false);
        cv.label("A*", RED);
    }
    cv.dot(Vec2::cell_center(req.start), 0.3, BLUE);
    cv.dot(Vec2::cell_center(req.stag), 0.3, GREEN);
    cv.dot(Vec2::cell_center(req.hare), 0.3, RED);
    cv.label("start", BLUE);
    cv.label("stag", GREEN);
    cv.label("hare", RED);
    cv.finish()
}

/// Scan rays (yellow), detected circles and sensor positions (blue).
pub fn detection_svg(map: &GridMap, scans: &[LidarScan], circles: &[Circle], enemies: &[Position]) -> String {
    let mut cv = Canvas::new(map);
    for scan in scans {
        for beam in &scan.beams {
            cv.line(scan.origin, scan.hit_point(beam), YELLOW, 0.5);
        }
    }
    if !scans.is_empty() {
        cv.label("scan", YELLOW);
    }
    for circle in circles {
        cv.ring(circle.center, circle.radius, GREEN);
    }
    if !circles.is_empty() {
        cv.label("circles", GREEN);
    }
    for &e in enemies {
        cv.dot(Vec2::cell_center(e), 0.25, RED);
    }
    if !enemies.is_empty() {
        cv.label("detected", RED);
    }
    for scan in scans {
        cv.dot(scan.origin, 0.3, BLUE);
    }
    if !scans.is_empty() {
        cv.label("sensors", BLUE);
    }
    cv.finish()
}
