use rand::Rng;

use super::HarnessError;
use crate::arena::{is_two_v_one, ArenaConfig, ArenaState, GridMap, Position, Team};

const MAX_SPAWN_ATTEMPTS: usize = 10_000;

/// Four distinct uniformly random empty cells in `RobotId::ALL` order,
/// redrawn while either team already holds a 2-vs-1.
pub fn spawn_random<R: Rng + ?Sized>(map: &GridMap, cfg: &ArenaConfig, rng: &mut R) -> Result<ArenaState, HarnessError> {
    let free = map.empty_cells();
    if free.len() < 4 {
        return Err(HarnessError::MapTooSmall(free.len()));
    }
    for _ in 0..MAX_SPAWN_ATTEMPTS {
        let mut picked: [usize; 4] = [usize::MAX; 4];
        for k in 0..4 {
            picked[k] = loop {
                let i = rng.gen_range(0..free.len());
                if !picked[..k].contains(&i) {
                    break i;
                }
            };
        }
        let state = ArenaState::new(picked.map(|i| free[i]));
        if !is_two_v_one(&state, Team::Blue, cfg, map) && !is_two_v_one(&state, Team::Red, cfg, map) {
            return Ok(state);
        }
    }
    Err(HarnessError::SpawnExhausted(MAX_SPAWN_ATTEMPTS))
}

/// Seeds a fresh state from explicit cells (useful for scripted scenarios).
pub fn state_from_cells(cells: [Position; 4], map: &GridMap) -> Result<ArenaState, HarnessError> {
    let s = ArenaState::new(cells);
    s.validate(map)?;
    Ok(s)
}
