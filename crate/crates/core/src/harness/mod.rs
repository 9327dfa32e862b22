//! Matches, tournaments and trace rendering.
//!
//! A match spawns four robots at random, lets both teams act every step and
//! ends as soon as either team holds a 2-vs-1 (both teams at once is a draw)
//! or the step budget runs out.

mod policy;
mod spawn;
pub mod svg;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{is_two_v_one, step, ArenaConfig, ArenaError, ArenaState, GridMap, Team};

pub use policy::{astar_actions, Controller, Policy};
pub use spawn::{spawn_random, state_from_cells};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("map has only {0} empty cells, need 4")]
    MapTooSmall(usize),
    #[error("no spawn without an immediate 2-vs-1 after {0} attempts")]
    SpawnExhausted(usize),
    #[error("bad policy spec: {0}")]
    PolicySpec(String),
    #[error("tournament needs at least one match and one repeat")]
    EmptyTournament,
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error(transparent)]
    Dqn(#[from] crate::dqn::DqnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Blue,
    Red,
    Draw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub winner: Winner,
    pub steps: u32,
    /// Every state from spawn to the final one, when recorded.
    pub trace: Option<Vec<ArenaState>>,
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent per-match seed.
pub fn match_seed(base_seed: u64, repeat: usize, index: usize) -> u64 {
    mix(mix(base_seed ^ mix(repeat as u64)) ^ index as u64)
}

/// Plays from a given state until a 2-vs-1, a simultaneous 2-vs-1 (draw) or
/// `max_steps`.
pub fn run_match_from(
    start: ArenaState,
    blue: &mut Controller,
    red: &mut Controller,
    map: &GridMap,
    cfg: &ArenaConfig,
    max_steps: u32,
    record_trace: bool,
) -> MatchResult {
    let mut state = start;
    let mut trace = record_trace.then(|| vec![state]);
    let verdict = |s: &ArenaState| match (is_two_v_one(s, Team::Blue, cfg, map), is_two_v_one(s, Team::Red, cfg, map)) {
        (true, false) => Some(Winner::Blue),
        (false, true) => Some(Winner::Red),
        (true, true) => Some(Winner::Draw),
        (false, false) => None,
    };
    let mut steps = 0;
    let mut winner = verdict(&state);
    while winner.is_none() && steps < max_steps {
        let [a1, a2] = blue.act(&state, Team::Blue, map, cfg);
        let [e1, e2] = red.act(&state, Team::Red, map, cfg);
        state = step(&state, &[a1, a2, e1, e2], map, cfg);
        steps += 1;
        if let Some(t) = trace.as_mut() {
            t.push(state);
        }
        winner = verdict(&state);
    }
    MatchResult { winner: winner.unwrap_or(Winner::Draw), steps, trace }
}

/// Seeded match from a random spawn.
pub fn run_match(
    blue: &Policy,
    red: &Policy,
    map: &GridMap,
    cfg: &ArenaConfig,
    seed: u64,
    max_steps: u32,
    record_trace: bool,
) -> Result<MatchResult, HarnessError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let start = spawn_random(map, cfg, &mut rng)?;
    let mut b = blue.controller(mix(seed ^ 0xB1));
    let mut r = red.controller(mix(seed ^ 0x7ED));
    Ok(run_match_from(start, &mut b, &mut r, map, cfg, max_steps, record_trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub blue_wins: usize,
    pub red_wins: usize,
    pub draws: usize,
    pub blue_rate: f64,
    pub red_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub schema_version: u32,
    pub blue: String,
    pub red: String,
    pub matches_per_repeat: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub arena: ArenaConfig,
    pub per_repeat: Vec<RepeatResult>,
    pub blue_rate_min: f64,
    pub blue_rate_max: f64,
    pub red_rate_min: f64,
    pub red_rate_max: f64,
}

impl TournamentResult {
    pub fn total_blue_wins(&self) -> usize {
        self.per_repeat.iter().map(|r| r.blue_wins).sum()
    }

    pub fn total_red_wins(&self) -> usize {
        self.per_repeat.iter().map(|r| r.red_wins).sum()
    }

    pub fn blue_rate(&self) -> f64 {
        self.total_blue_wins() as f64 / (self.repeats * self.matches_per_repeat) as f64
    }

    pub fn red_rate(&self) -> f64 {
        self.total_red_wins() as f64 / (self.repeats * self.matches_per_repeat) as f64
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.per_repeat {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `repeats x n_matches` seeded matches; matches run in parallel and are
/// aggregated in index order.
pub fn run_tournament(
    blue: &Policy,
    red: &Policy,
    map: &GridMap,
    cfg: &ArenaConfig,
    n_matches: usize,
    repeats: usize,
    base_seed: u64,
) -> Result<TournamentResult, HarnessError> {
    if n_matches == 0 || repeats == 0 {
        return Err(HarnessError::EmptyTournament);
    }
    let mut per_repeat = Vec::with_capacity(repeats);
    for repeat in 0..repeats {
        let results: Vec<MatchResult> = (0..n_matches)
            .into_par_iter()
            .map(|i| run_match(blue, red, map, cfg, match_seed(base_seed, repeat, i), cfg.max_steps, false))
            .collect::<Result<_, _>>()?;
        let count = |w: Winner| results.iter().filter(|r| r.winner == w).count();
        let (blue_wins, red_wins, draws) = (count(Winner::Blue), count(Winner::Red), count(Winner::Draw));
        per_repeat.push(RepeatResult {
            repeat,
            blue_wins,
            red_wins,
            draws,
            blue_rate: blue_wins as f64 / n_matches as f64,
            red_rate: red_wins as f64 / n_matches as f64,
        });
    }
    let fold = |f: fn(&RepeatResult) -> f64, min: bool| {
        per_repeat.iter().map(f).fold(if min { f64::INFINITY } else { f64::NEG_INFINITY }, |a, b| if min { a.min(b) } else { a.max(b) })
    };
    Ok(TournamentResult {
        schema_version: SCHEMA_VERSION,
        blue: blue.to_string(),
        red: red.to_string(),
        matches_per_repeat: n_matches,
        repeats,
        base_seed,
        arena: *cfg,
        blue_rate_min: fold(|r| r.blue_rate, true),
        blue_rate_max: fold(|r| r.blue_rate, false),
        red_rate_min: fold(|r| r.red_rate, true),
        red_rate_max: fold(|r| r.red_rate, false),
        per_repeat,
    })
}
