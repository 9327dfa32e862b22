//! Grid line of sight.
//!
//! A sight line runs between cell centres. It is blocked when any wall cell
//! other than the two endpoints touches the segment, where "touches" means
//! the closed unit square of the cell intersects it. Passing exactly through a
//! cell corner therefore touches all four cells around that corner. The test
//! is done in doubled integer coordinates, so it is exact and symmetric in the
//! two endpoints.

use std::collections::BTreeSet;

use super::{distance, ArenaError, GridMap, Position};

fn touches_cell(a: Position, b: Position, c: Position) -> bool {
    let (dx, dy) = ((b.x - a.x) as i64, (b.y - a.y) as i64);
    let mut pos = false;
    let mut neg = false;
    for (ox, oy) in [(-1, -1), (1, -1), (-1, 1), (1, 1)] {
        let cx = 2 * (c.x - a.x) as i64 + ox;
        let cy = 2 * (c.y - a.y) as i64 + oy;
        let s = dx * cy - dy * cx;
        if s == 0 {
            return true;
        }
        if s > 0 {
            pos = true;
        } else {
            neg = true;
        }
    }
    pos && neg
}

/// Cells strictly between `a` and `b` that the sight line touches.
pub fn traversed_cells(a: Position, b: Position) -> Vec<Position> {
    let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
    let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = Position::new(x, y);
            if c != a && c != b && touches_cell(a, b, c) {
                out.push(c);
            }
        }
    }
    out
}

/// True when no wall lies strictly between `a` and `b`.
pub fn line_of_sight(map: &GridMap, a: Position, b: Position) -> bool {
    let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
    let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = Position::new(x, y);
            if c != a && c != b && map.is_wall(c) && touches_cell(a, b, c) {
                return false;
            }
        }
    }
    true
}

/// `b` is within `range` of `a` (Euclidean) and in line of sight.
pub fn is_visible(map: &GridMap, a: Position, b: Position, range: f64) -> bool {
    distance(a, b) <= range && line_of_sight(map, a, b)
}

/// Every cell within `range` of `from` whose sight line is unobstructed,
/// including `from` itself.
pub fn visible_cells(map: &GridMap, from: Position, range: f64) -> Result<BTreeSet<Position>, ArenaError> {
    if !map.is_free(from) {
        return Err(ArenaError::InvalidPose(from));
    }
    let r = range.max(0.0).floor() as i32;
    let mut out = BTreeSet::new();
    for y in (from.y - r).max(0)..=(from.y + r).min(map.height() as i32 - 1) {
        for x in (from.x - r).max(0)..=(from.x + r).min(map.width() as i32 - 1) {
            let c = Position::new(x, y);
            if is_visible(map, from, c, range) {
                out.insert(c);
            }
        }
    }
    Ok(out)
}
