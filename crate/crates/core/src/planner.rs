//! Standoff A*.
//!
//! Plans the shortest 4-connected route from a start cell to the nearest cell
//! that has the stag in attack range (with line of sight), never entering the
//! hare's safe-distance disc. Cells at exactly the safe distance are allowed.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{distance, within_attack_range, Action, GridMap, Position};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub start: Position,
    pub stag: Position,
    pub hare: Position,
    pub attack_range: f64,
    pub safe_distance: f64,
}

impl PlanRequest {
    /// Outside the hare exclusion zone.
    pub fn is_safe(&self, c: Position) -> bool {
        distance(c, self.hare) >= self.safe_distance
    }

    /// A valid place to stop.
    pub fn is_goal(&self, map: &GridMap, c: Position) -> bool {
        map.is_free(c) && self.is_safe(c) && within_attack_range(map, c, self.stag, self.attack_range)
    }

    /// Lower bound on the remaining number of moves from `c`: any goal is
    /// within `attack_range` of the stag, and a 4-connected path is never
    /// shorter than the straight line.
    pub fn heuristic(&self, c: Position) -> u32 {
        let gap = distance(c, self.stag) - self.attack_range;
        if gap <= 0.0 {
            0
        } else {
            (gap - 1e-9).ceil().max(0.0) as u32
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub cells: Vec<Position>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Number of moves.
    pub fn cost(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    pub fn goal(&self) -> Option<Position> {
        self.cells.last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no safe path reaches a standoff cell")]
    NoSafePath,
    #[error("start cell is a wall, off the map, or inside the hare's safe distance")]
    InvalidStart,
}

const NEIGHBOURS: [(i32, i32); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

/// Goal-set A* with a consistent straight-line heuristic. Open-list ties are
/// broken by lower f, then lower h, then row-major cell order.
pub fn plan(map: &GridMap, req: &PlanRequest) -> Result<Path, PlanError> {
    if !map.is_free(req.start) || !req.is_safe(req.start) {
        return Err(PlanError::InvalidStart);
    }
    let w = map.width();
    let idx = |p: Position| p.y as usize * w + p.x as usize;
    let n = w * map.height();
    let mut g = vec![u32::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    g[idx(req.start)] = 0;
    let h0 = req.heuristic(req.start);
    open.push(Reverse((h0, h0, req.start.y, req.start.x)));

    while let Some(Reverse((_, _, y, x))) = open.pop() {
        let cur = Position::new(x, y);
        let ci = idx(cur);
        if closed[ci] {
            continue;
        }
        closed[ci] = true;
        if req.is_goal(map, cur) {
            let mut cells = vec![cur];
            let mut at = ci;
            while parent[at] != usize::MAX {
                at = parent[at];
                cells.push(Position::new((at % w) as i32, (at / w) as i32));
            }
            cells.reverse();
            return Ok(Path { cells });
        }
        let gc = g[ci];
        for (dx, dy) in NEIGHBOURS {
            let nb = cur.offset(dx, dy);
            if !map.is_free(nb) || !req.is_safe(nb) {
                continue;
            }
            let ni = idx(nb);
            if closed[ni] || gc + 1 >= g[ni] {
                continue;
            }
            g[ni] = gc + 1;
            parent[ni] = ci;
            let h = req.heuristic(nb);
            open.push(Reverse((gc + 1 + h, h, nb.y, nb.x)));
        }
    }
    Err(PlanError::NoSafePath)
}

/// The move from `current` to its successor on `path`; `Stop` at the end.
/// `None` when `current` is not on the path.
pub fn next_action(path: &Path, current: Position) -> Option<Action> {
    let i = path.cells.iter().position(|&c| c == current)?;
    match path.cells.get(i + 1) {
        None => Some(Action::Stop),
        Some(&next) => Action::between(current, next),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::CellKind;
    use std::collections::VecDeque;

    fn p(x: i32, y: i32) -> Position {
        Position::new(x, y)
    }

    /// BFS with the same goal predicate and exclusion zone.
    fn bfs_cost(map: &GridMap, req: &PlanRequest) -> Option<usize> {
        let mut seen = std::collections::HashSet::new();
        let mut q = VecDeque::from([(req.start, 0usize)]);
        seen.insert(req.start);
        while let Some((c, d)) = q.pop_front() {
            if req.is_goal(map, c) {
                return Some(d);
            }
            for (dx, dy) in NEIGHBOURS {
                let nb = c.offset(dx, dy);
                if map.is_free(nb) && req.is_safe(nb) && seen.insert(nb) {
                    q.push_back((nb, d + 1));
                }
            }
        }
        None
    }

    fn req(start: Position, stag: Position, hare: Position, range: f64, safe: f64) -> PlanRequest {
        PlanRequest { start, stag, hare, attack_range: range, safe_distance: safe }
    }

    #[test]
    fn start_in_goal_set_is_single_cell() {
        let m = GridMap::empty(10, 10).unwrap();
        let path = plan(&m, &req(p(0, 0), p(2, 0), p(9, 9), 5.0, 3.0)).unwrap();
        assert_eq!(path.cells, vec![p(0, 0)]);
    }

    #[test]
    fn stops_at_standoff_cell() {
        let m = GridMap::empty(10, 10).unwrap();
        let r = req(p(0, 0), p(0, 9), p(9, 0), 2.0, 3.0);
        let path = plan(&m, &r).unwrap();
        assert_eq!(path.len(), 8);
        assert_eq!(path.goal(), Some(p(0, 7)));
        assert_eq!(bfs_cost(&m, &r), Some(7));
    }

    #[test]
    fn hare_on_corridor_blocks() {
        let m = GridMap::parse("##########\n..........\n##########").unwrap();
        let r = req(p(0, 1), p(9, 1), p(5, 1), 2.0, 2.0);
        assert_eq!(plan(&m, &r), Err(PlanError::NoSafePath));
        assert_eq!(bfs_cost(&m, &r), None);
    }

    #[test]
    fn invalid_starts() {
        let mut m = GridMap::empty(6, 6).unwrap();
        m.set(p(0, 0), CellKind::Wall);
        assert_eq!(plan(&m, &req(p(0, 0), p(5, 5), p(3, 0), 1.0, 1.0)), Err(PlanError::InvalidStart));
        assert_eq!(plan(&m, &req(p(2, 2), p(5, 5), p(3, 2), 1.0, 2.0)), Err(PlanError::InvalidStart));
        // Exactly at the safe distance is fine.
        assert!(plan(&m, &req(p(1, 2), p(5, 5), p(3, 2), 1.0, 2.0)).is_ok());
    }

    #[test]
    fn next_action_cases() {
        let path = Path { cells: vec![p(1, 1), p(1, 0), p(2, 0)] };
        assert_eq!(next_action(&path, p(1, 1)), Some(Action::Up));
        assert_eq!(next_action(&path, p(1, 0)), Some(Action::Right));
        assert_eq!(next_action(&path, p(2, 0)), Some(Action::Stop));
        assert_eq!(next_action(&path, p(5, 5)), None);
    }

    #[test]
    fn wall_blocks_line_of_sight_goal() {
        // Stag behind a wall: the planner must walk round to see it.
        let m = GridMap::parse(".......\n.......\n...#...\n...#...\n...#...\n.......").unwrap();
        let r = req(p(1, 3), p(5, 3), p(0, 0), 4.0, 0.0);
        let path = plan(&m, &r).unwrap();
        assert_eq!(path.cost(), bfs_cost(&m, &r).unwrap());
        assert!(within_attack_range(&m, path.goal().unwrap(), p(5, 3), 4.0));
        assert_ne!(path.goal(), Some(p(1, 3)));
    }

    #[test]
    fn heuristic_is_admissible_against_bfs() {
        let m = GridMap::default_arena();
        let free = m.empty_cells();
        for (i, &s) in free.iter().enumerate().step_by(37) {
            let stag = free[(i * 7 + 101) % free.len()];
            let hare = free[(i * 13 + 57) % free.len()];
            let r = req(s, stag, hare, 5.0, 3.0);
            if let Some(cost) = bfs_cost(&m, &r) {
                assert!(r.heuristic(s) as usize <= cost);
            }
        }
    }

    #[test]
    fn deterministic() {
        let m = GridMap::default_arena();
        let r = req(p(0, 0), p(30, 18), p(15, 12), 5.0, 3.0);
        assert_eq!(plan(&m, &r), plan(&m, &r));
    }
}
