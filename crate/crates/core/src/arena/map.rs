use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ArenaError, Position};

/// Static class of a grid cell. Robots are tracked in [`super::ArenaState`],
/// never in the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Wall,
    Empty,
}

/// Row-major occupancy grid. `(0, 0)` is the first character of the first
/// line of the map file; `y` grows downwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
}

const DEFAULT_ARENA: &str = include_str!("../../maps/default.txt");

impl GridMap {
    /// Builds a map from explicit cells. `cells.len()` must equal
    /// `width * height` and both dimensions must be at least 2.
    pub fn from_cells(width: usize, height: usize, cells: Vec<CellKind>) -> Result<Self, ArenaError> {
        if width < 2 || height < 2 {
            return Err(ArenaError::Dimensions { width, height });
        }
        if cells.len() != width * height {
            return Err(ArenaError::Dimensions { width, height });
        }
        Ok(Self { width, height, cells })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, ArenaError> {
        Self::from_cells(width, height, vec![CellKind::Empty; width * height])
    }

    /// The bundled 32x20 arena.
    pub fn default_arena() -> Self {
        Self::parse(DEFAULT_ARENA).expect("bundled arena map is well-formed")
    }

    /// Parses the ASCII map format: one row per line, `#` wall, `.` empty.
    /// The first line fixes the width; a trailing newline is optional.
    pub fn parse(text: &str) -> Result<Self, ArenaError> {
        let mut lines: Vec<&str> = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
        if lines.last() == Some(&"") {
            lines.pop();
        }
        if lines.is_empty() || lines[0].is_empty() {
            return Err(ArenaError::Parse { line: 1, column: 1, message: "empty map".into() });
        }
        let width = lines[0].chars().count();
        let mut cells = Vec::with_capacity(width * lines.len());
        for (row, line) in lines.iter().enumerate() {
            let len = line.chars().count();
            if len != width {
                return Err(ArenaError::Parse {
                    line: row + 1,
                    column: len.min(width) + 1,
                    message: format!("row has {len} cells, expected {width}"),
                });
            }
            for (col, ch) in line.chars().enumerate() {
                cells.push(match ch {
                    '#' => CellKind::Wall,
                    '.' => CellKind::Empty,
                    other => {
                        return Err(ArenaError::Parse {
                            line: row + 1,
                            column: col + 1,
                            message: format!("illegal character {other:?}"),
                        })
                    }
                });
            }
        }
        let height = lines.len();
        if width < 2 || height < 2 {
            return Err(ArenaError::Parse {
                line: 1,
                column: 1,
                message: format!("map must be at least 2x2, got {width}x{height}"),
            });
        }
        Ok(Self { width, height, cells })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, p: Position) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Cell class, or `None` outside the grid.
    pub fn get(&self, p: Position) -> Option<CellKind> {
        self.in_bounds(p).then(|| self.cells[p.y as usize * self.width + p.x as usize])
    }

    pub fn is_wall(&self, p: Position) -> bool {
        self.get(p) == Some(CellKind::Wall)
    }

    /// In bounds and not a wall.
    pub fn is_free(&self, p: Position) -> bool {
        self.get(p) == Some(CellKind::Empty)
    }

    pub fn set(&mut self, p: Position, kind: CellKind) {
        assert!(self.in_bounds(p), "{p:?} outside {}x{} map", self.width, self.height);
        self.cells[p.y as usize * self.width + p.x as usize] = kind;
    }

    /// All positions in row-major order.
    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Position::new(x as i32, y as i32)))
    }

    pub fn empty_cells(&self) -> Vec<Position> {
        self.positions().filter(|&p| self.is_free(p)).collect()
    }

    /// Rotates the map a quarter turn clockwise: `(x, y) -> (H-1-y, x)`.
    pub fn rotate_cw(&self) -> Self {
        let (w, h) = (self.height, self.width);
        let mut cells = vec![CellKind::Empty; w * h];
        for p in self.positions() {
            let q = rotate_cw_position(p, self.height);
            cells[q.y as usize * w + q.x as usize] = self.get(p).unwrap();
        }
        Self { width: w, height: h, cells }
    }
}

/// Position image under [`GridMap::rotate_cw`] for a map of `height` rows.
pub fn rotate_cw_position(p: Position, height: usize) -> Position {
    Position::new(height as i32 - 1 - p.y, p.x)
}

impl fmt::Display for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(self.width) {
            for c in row {
                f.write_str(if *c == CellKind::Wall { "#" } else { "." })?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}
