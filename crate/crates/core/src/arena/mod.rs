//! Deterministic grid-world combat arena.
//!
//! Four robots (two per team) move on a static wall/empty grid with
//! 4-connected single-cell moves. Each team keeps a fused "last seen" record
//! of the opposing robots, refreshed whenever any teammate has line of sight.

mod map;
mod visibility;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use map::{rotate_cw_position, CellKind, GridMap};
pub use visibility::{is_visible, line_of_sight, traversed_cells, visible_cells};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArenaError {
    #[error("map parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid map dimensions {width}x{height}")]
    Dimensions { width: usize, height: usize },
    #[error("pose {0:?} is outside the map or on a wall")]
    InvalidPose(Position),
    #[error("robots {0:?} and {1:?} share a cell")]
    Overlap(RobotId, RobotId),
    #[error("{0:?} is not a friendly agent")]
    NotAnAgent(RobotId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

/// Euclidean distance in cells.
pub fn distance(a: Position, b: Position) -> f64 {
    let dx = (a.x - b.x) as f64;
    let dy = (a.y - b.y) as f64;
    (dx * dx + dy * dy).sqrt()
}

pub fn manhattan(a: Position, b: Position) -> u32 {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RobotId {
    Agent1,
    Agent2,
    Enemy1,
    Enemy2,
}

impl RobotId {
    /// Resolution order for simultaneous moves.
    pub const ALL: [RobotId; 4] = [RobotId::Agent1, RobotId::Agent2, RobotId::Enemy1, RobotId::Enemy2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn team(self) -> Team {
        match self {
            RobotId::Agent1 | RobotId::Agent2 => Team::Blue,
            RobotId::Enemy1 | RobotId::Enemy2 => Team::Red,
        }
    }

    pub fn ally(self) -> RobotId {
        match self {
            RobotId::Agent1 => RobotId::Agent2,
            RobotId::Agent2 => RobotId::Agent1,
            RobotId::Enemy1 => RobotId::Enemy2,
            RobotId::Enemy2 => RobotId::Enemy1,
        }
    }

    pub fn is_agent(self) -> bool {
        self.team() == Team::Blue
    }

    /// The robot with the same slot on the other team.
    pub fn counterpart(self) -> RobotId {
        match self {
            RobotId::Agent1 => RobotId::Enemy1,
            RobotId::Agent2 => RobotId::Enemy2,
            RobotId::Enemy1 => RobotId::Agent1,
            RobotId::Enemy2 => RobotId::Agent2,
        }
    }
}

/// Blue owns the agents, red owns the enemies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Blue,
    Red,
}

impl Team {
    pub fn members(self) -> [RobotId; 2] {
        match self {
            Team::Blue => [RobotId::Agent1, RobotId::Agent2],
            Team::Red => [RobotId::Enemy1, RobotId::Enemy2],
        }
    }

    pub fn opponent(self) -> Team {
        match self {
            Team::Blue => Team::Red,
            Team::Red => Team::Blue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stop,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Stop];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    /// Cell offset; `Up` decreases `y`.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            Action::Stop => (0, 0),
        }
    }

    /// The action taking `from` to the 4-adjacent (or identical) cell `to`.
    pub fn between(from: Position, to: Position) -> Option<Action> {
        Self::ALL.into_iter().find(|a| {
            let (dx, dy) = a.delta();
            from.offset(dx, dy) == to
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArenaConfig {
    pub attack_range: f64,
    pub safe_distance: f64,
    pub sensor_range: f64,
    pub max_steps: u32,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self { attack_range: 5.0, safe_distance: 3.0, sensor_range: 32.0, max_steps: 400 }
    }
}

/// True robot positions plus the team-fused last observed position of every
/// robot, as seen by the opposing team. Indexed by [`RobotId::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArenaState {
    pub pos: [Position; 4],
    pub last_seen: [Position; 4],
    pub step: u32,
}

impl ArenaState {
    /// Fresh state at step 0; both teams know the spawn layout.
    pub fn new(pos: [Position; 4]) -> Self {
        Self { pos, last_seen: pos, step: 0 }
    }

    pub fn position(&self, id: RobotId) -> Position {
        self.pos[id.index()]
    }

    pub fn last_seen(&self, id: RobotId) -> Position {
        self.last_seen[id.index()]
    }

    pub fn validate(&self, map: &GridMap) -> Result<(), ArenaError> {
        for id in RobotId::ALL {
            if !map.is_free(self.position(id)) {
                return Err(ArenaError::InvalidPose(self.position(id)));
            }
            if !map.in_bounds(self.last_seen(id)) {
                return Err(ArenaError::InvalidPose(self.last_seen(id)));
            }
        }
        for (i, a) in RobotId::ALL.iter().enumerate() {
            for b in &RobotId::ALL[i + 1..] {
                if self.position(*a) == self.position(*b) {
                    return Err(ArenaError::Overlap(*a, *b));
                }
            }
        }
        Ok(())
    }

    /// The same state with the teams relabelled, so that red robots become
    /// `Agent1`/`Agent2`. Lets agent-centric code drive either team.
    pub fn swapped(&self) -> Self {
        let s = |a: [Position; 4]| [a[2], a[3], a[0], a[1]];
        Self { pos: s(self.pos), last_seen: s(self.last_seen), step: self.step }
    }

    /// Refreshes `last_seen` for every robot that some opponent can see.
    pub fn fuse_visibility(&mut self, map: &GridMap, sensor_range: f64) {
        for id in RobotId::ALL {
            let target = self.position(id);
            let seen = id
                .team()
                .opponent()
                .members()
                .iter()
                .any(|&o| is_visible(map, self.position(o), target, sensor_range));
            if seen {
                self.last_seen[id.index()] = target;
            }
        }
    }
}

/// Advances one tick. Robots resolve in [`RobotId::ALL`] order; a move that
/// leaves the grid, enters a wall, or enters a currently occupied cell
/// degrades to `Stop`.
pub fn step(state: &ArenaState, actions: &[Action; 4], map: &GridMap, cfg: &ArenaConfig) -> ArenaState {
    let mut next = *state;
    for id in RobotId::ALL {
        let (dx, dy) = actions[id.index()].delta();
        if (dx, dy) == (0, 0) {
            continue;
        }
        let target = next.pos[id.index()].offset(dx, dy);
        if map.is_free(target) && !next.pos.contains(&target) {
            next.pos[id.index()] = target;
        }
    }
    next.step += 1;
    next.fuse_visibility(map, cfg.sensor_range);
    next
}

/// Observation vector for `agent`, built from the given robot's own team
/// view: own position, ally position, then both opponents' last seen
/// positions. Coordinates are divided by the map dimensions.
pub fn team_observation(state: &ArenaState, robot: RobotId, map: &GridMap) -> [f64; 8] {
    let (w, h) = (map.width() as f64, map.height() as f64);
    let opp = robot.team().opponent().members();
    let cells = [
        state.position(robot),
        state.position(robot.ally()),
        state.last_seen(opp[0]),
        state.last_seen(opp[1]),
    ];
    let mut out = [0.0; 8];
    for (i, p) in cells.iter().enumerate() {
        out[2 * i] = p.x as f64 / w;
        out[2 * i + 1] = p.y as f64 / h;
    }
    out
}

/// Observation for a friendly agent (`Agent1` or `Agent2`).
pub fn observation(state: &ArenaState, agent: RobotId, map: &GridMap) -> Result<[f64; 8], ArenaError> {
    if !agent.is_agent() {
        return Err(ArenaError::NotAnAgent(agent));
    }
    Ok(team_observation(state, agent, map))
}

/// Within the Euclidean radius and in line of sight.
pub fn within_attack_range(map: &GridMap, a: Position, b: Position, range: f64) -> bool {
    is_visible(map, a, b, range)
}

pub fn in_attack_range(a: Position, b: Position, cfg: &ArenaConfig, map: &GridMap) -> bool {
    within_attack_range(map, a, b, cfg.attack_range)
}

/// One opponent is simultaneously in attack range of both members of `team`.
pub fn is_two_v_one(state: &ArenaState, team: Team, cfg: &ArenaConfig, map: &GridMap) -> bool {
    two_v_one_with_range(state, team, cfg.attack_range, map)
}

pub(crate) fn two_v_one_with_range(state: &ArenaState, team: Team, range: f64, map: &GridMap) -> bool {
    let [m1, m2] = team.members();
    team.opponent().members().iter().any(|&o| {
        let target = state.position(o);
        within_attack_range(map, state.position(m1), target, range)
            && within_attack_range(map, state.position(m2), target, range)
    })
}
