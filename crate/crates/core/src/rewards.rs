//! Stag-hunt target assignment and reward shaping.
//!
//! The "stag" is the enemy both agents converge on; the "hare" is the other
//! enemy, which the agents keep clear of. Dense rewards are the normalised
//! distance to the stag (`r1`) plus a hare term (`r2 = r1 + punishment`).
//! Stag-hunt payoffs are granted on top whenever both agents have an enemy in
//! attack range.
//!
//! Reward components are rounded to multiples of 2^-40 so that the sum of two
//! components is exact in `f64`; `r2 - r1` then reproduces the punishment term
//! bit for bit.

use serde::{Deserialize, Serialize};

use crate::arena::{distance, within_attack_range, ArenaConfig, ArenaState, GridMap, Position, RobotId};

const QUANTUM: f64 = (1u64 << 40) as f64;

fn quantize(x: f64) -> f64 {
    // `+ 0.0` folds -0.0 into +0.0 so sums and differences compare bit-exactly.
    (x * QUANTUM).round() / QUANTUM + 0.0
}

/// Which enemy an agent is engaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Stag,
    Hare,
}

/// Per-agent stag-hunt payoffs, indexed `(agent1 target, agent2 target)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffTable {
    pub stag_stag: (f64, f64),
    pub stag_hare: (f64, f64),
    pub hare_stag: (f64, f64),
    pub hare_hare: (f64, f64),
}

impl Default for PayoffTable {
    fn default() -> Self {
        Self { stag_stag: (3.0, 3.0), stag_hare: (0.0, 2.0), hare_stag: (2.0, 0.0), hare_hare: (1.0, 1.0) }
    }
}

impl PayoffTable {
    pub fn payoff(&self, agent1: Target, agent2: Target) -> (f64, f64) {
        match (agent1, agent2) {
            (Target::Stag, Target::Stag) => self.stag_stag,
            (Target::Stag, Target::Hare) => self.stag_hare,
            (Target::Hare, Target::Stag) => self.hare_stag,
            (Target::Hare, Target::Hare) => self.hare_hare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagAssignment {
    pub stag: RobotId,
    pub hare: RobotId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PunishmentMode {
    /// `-d(agent, hare) / attack_range`, as literally stated.
    Paper,
    /// `-max(0, (attack_range - d) / attack_range)`: zero outside attack
    /// range, -1 at contact.
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Normalisation for `r1`: map width + map height.
    pub beta: f64,
    pub attack_range: f64,
    pub punishment_mode: PunishmentMode,
    pub sparse_hit_reward: f64,
    pub coop_bonus_scale: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            beta: 52.0,
            attack_range: 5.0,
            punishment_mode: PunishmentMode::Corrected,
            sparse_hit_reward: 1.0,
            coop_bonus_scale: 1.0,
        }
    }
}

impl RewardConfig {
    /// Defaults with `beta` and `attack_range` taken from the map and arena.
    pub fn for_arena(map: &GridMap, arena: &ArenaConfig) -> Self {
        Self { beta: (map.width() + map.height()) as f64, attack_range: arena.attack_range, ..Self::default() }
    }
}

/// Picks the enemy with the smallest summed distance to both agents, using
/// the agents' last-seen enemy positions. Ties go to `Enemy1`.
pub fn assign_stag(state: &ArenaState) -> StagAssignment {
    let cost = |e: RobotId| {
        let at = state.last_seen(e);
        distance(state.position(RobotId::Agent1), at) + distance(state.position(RobotId::Agent2), at)
    };
    if cost(RobotId::Enemy2) < cost(RobotId::Enemy1) {
        StagAssignment { stag: RobotId::Enemy2, hare: RobotId::Enemy1 }
    } else {
        StagAssignment { stag: RobotId::Enemy1, hare: RobotId::Enemy2 }
    }
}

/// Dense approach reward: `-d(agent, stag) / beta`.
pub fn r1(state: &ArenaState, agent: RobotId, stag: Position, cfg: &RewardConfig) -> f64 {
    quantize(-distance(state.position(agent), stag) / cfg.beta)
}

pub fn punishment(state: &ArenaState, agent: RobotId, hare: Position, cfg: &RewardConfig) -> f64 {
    let d = distance(state.position(agent), hare);
    let raw = match cfg.punishment_mode {
        PunishmentMode::Paper => -d / cfg.attack_range,
        PunishmentMode::Corrected => -((cfg.attack_range - d) / cfg.attack_range).max(0.0),
    };
    quantize(raw)
}

/// `r1 + punishment`, both measured against the true enemy positions.
pub fn r2(state: &ArenaState, agent: RobotId, assignment: &StagAssignment, cfg: &RewardConfig) -> f64 {
    r1(state, agent, state.position(assignment.stag), cfg) + punishment(state, agent, state.position(assignment.hare), cfg)
}

/// What `agent` has in attack range, preferring the stag.
pub fn engagement(
    state: &ArenaState,
    agent: RobotId,
    assignment: &StagAssignment,
    attack_range: f64,
    map: &GridMap,
) -> Option<Target> {
    let at = state.position(agent);
    if within_attack_range(map, at, state.position(assignment.stag), attack_range) {
        Some(Target::Stag)
    } else if within_attack_range(map, at, state.position(assignment.hare), attack_range) {
        Some(Target::Hare)
    } else {
        None
    }
}

/// Stag-hunt payoff pair `(agent1, agent2)`, scaled. Zero unless both agents
/// have some enemy in attack range.
pub fn coop_bonus(state: &ArenaState, assignment: &StagAssignment, cfg: &RewardConfig, map: &GridMap) -> (f64, f64) {
    let t1 = engagement(state, RobotId::Agent1, assignment, cfg.attack_range, map);
    let t2 = engagement(state, RobotId::Agent2, assignment, cfg.attack_range, map);
    match (t1, t2) {
        (Some(a), Some(b)) => {
            let (p1, p2) = PayoffTable::default().payoff(a, b);
            (p1 * cfg.coop_bonus_scale, p2 * cfg.coop_bonus_scale)
        }
        _ => (0.0, 0.0),
    }
}

fn bonus_for(agent: RobotId, pair: (f64, f64)) -> f64 {
    if agent == RobotId::Agent1 {
        pair.0
    } else {
        pair.1
    }
}

/// Event reward: `sparse_hit_reward` plus the agent's payoff, granted only
/// while the agent has the stag in attack range.
pub fn sparse_reward(
    state: &ArenaState,
    agent: RobotId,
    assignment: &StagAssignment,
    cfg: &RewardConfig,
    map: &GridMap,
) -> f64 {
    if engagement(state, agent, assignment, cfg.attack_range, map) != Some(Target::Stag) {
        return 0.0;
    }
    cfg.sparse_hit_reward + bonus_for(agent, coop_bonus(state, assignment, cfg, map))
}

/// Per-step dense reward used for shared-parameter training: `r2` plus the
/// agent's stag-hunt payoff.
pub fn dense_reward(
    state: &ArenaState,
    agent: RobotId,
    assignment: &StagAssignment,
    cfg: &RewardConfig,
    map: &GridMap,
) -> f64 {
    r2(state, agent, assignment, cfg) + bonus_for(agent, coop_bonus(state, assignment, cfg, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{within_attack_range, GridMap};
    use proptest::prelude::*;

    fn p(x: i32, y: i32) -> Position {
        Position::new(x, y)
    }

    fn cfg32() -> RewardConfig {
        RewardConfig::for_arena(&GridMap::empty(32, 20).unwrap(), &ArenaConfig::default())
    }

    #[test]
    fn payoff_table_entries() {
        let t = PayoffTable::default();
        assert_eq!(t.payoff(Target::Stag, Target::Stag), (3.0, 3.0));
        assert_eq!(t.payoff(Target::Stag, Target::Hare), (0.0, 2.0));
        assert_eq!(t.payoff(Target::Hare, Target::Stag), (2.0, 0.0));
        assert_eq!(t.payoff(Target::Hare, Target::Hare), (1.0, 1.0));
        // Symmetric under player exchange.
        for a in [Target::Stag, Target::Hare] {
            for b in [Target::Stag, Target::Hare] {
                let (x, y) = t.payoff(a, b);
                assert_eq!(t.payoff(b, a), (y, x));
            }
        }
    }

    #[test]
    fn stag_assignment_examples() {
        // Enemy1 closer to both agents.
        let s = ArenaState::new([p(0, 0), p(0, 2), p(1, 1), p(5, 5)]);
        assert_eq!(assign_stag(&s).stag, RobotId::Enemy1);
        // Exact tie.
        let s = ArenaState::new([p(2, 0), p(2, 4), p(0, 2), p(4, 2)]);
        assert_eq!(assign_stag(&s), StagAssignment { stag: RobotId::Enemy1, hare: RobotId::Enemy2 });
        // 6x6 layout: Enemy2 summed distance 7, Enemy1 summed distance 9.
        let s = ArenaState::new([p(0, 0), p(0, 5), p(4, 3), p(3, 0)]);
        let d = |a: Position, b: Position| distance(a, b);
        let e1 = d(p(0, 0), p(4, 3)) + d(p(0, 5), p(4, 3));
        let e2 = d(p(0, 0), p(3, 0)) + d(p(0, 5), p(3, 0));
        assert!((e1 - (5.0 + 20f64.sqrt())).abs() < 1e-12);
        assert!((e2 - (3.0 + 34f64.sqrt())).abs() < 1e-12);
        assert!(e2 < e1);
        assert_eq!(assign_stag(&s).stag, RobotId::Enemy2);
    }

    #[test]
    fn stag_assignment_uses_last_seen() {
        // Enemy1 is adjacent but was last seen far away.
        let mut s = ArenaState::new([p(0, 0), p(0, 1), p(1, 0), p(9, 9)]);
        s.last_seen[RobotId::Enemy1.index()] = p(14, 14);
        assert_eq!(assign_stag(&s).stag, RobotId::Enemy2);
    }

    #[test]
    fn r1_examples() {
        let c = cfg32();
        assert_eq!(c.beta, 52.0);
        let s = ArenaState::new([p(0, 0), p(9, 9), p(5, 0), p(26, 0)]);
        assert_eq!(r1(&s, RobotId::Agent1, p(0, 0), &c), 0.0);
        assert!((r1(&s, RobotId::Agent1, p(5, 0), &c) - (-5.0 / 52.0)).abs() < 1e-12);
        assert!((r1(&s, RobotId::Agent1, p(5, 0), &c) + 0.09615).abs() < 1e-5);
        assert_eq!(r1(&s, RobotId::Agent1, p(26, 0), &c), -0.5);
    }

    #[test]
    fn punishment_examples() {
        let mut c = cfg32();
        let s = ArenaState::new([p(0, 0), p(9, 9), p(5, 0), p(10, 0)]);
        assert_eq!(punishment(&s, RobotId::Agent1, p(5, 0), &c), 0.0);
        assert_eq!(punishment(&s, RobotId::Agent1, p(10, 0), &c), 0.0);
        assert_eq!(punishment(&s, RobotId::Agent1, p(0, 0), &c), -1.0);
        c.punishment_mode = PunishmentMode::Paper;
        assert_eq!(punishment(&s, RobotId::Agent1, p(10, 0), &c), -2.0);
    }

    #[test]
    fn r2_is_sum_of_parts() {
        let c = cfg32();
        // Hare outside attack range: r2 == r1.
        let s = ArenaState::new([p(0, 0), p(9, 9), p(3, 4), p(20, 0)]);
        let a = StagAssignment { stag: RobotId::Enemy1, hare: RobotId::Enemy2 };
        assert_eq!(r2(&s, RobotId::Agent1, &a, &c), r1(&s, RobotId::Agent1, p(3, 4), &c));
    }

    #[test]
    fn r2_matches_hand_computation_on_6x6() {
        let c = RewardConfig { beta: 12.0, attack_range: 5.0, ..RewardConfig::default() };
        // Agent1 (0,0), stag (3,4) at distance 5, hare (0,2) at distance 2.
        let s = ArenaState::new([p(0, 0), p(5, 5), p(3, 4), p(0, 2)]);
        let a = StagAssignment { stag: RobotId::Enemy1, hare: RobotId::Enemy2 };
        let expected = -5.0 / 12.0 - 3.0 / 5.0;
        assert!((r2(&s, RobotId::Agent1, &a, &c) - expected).abs() < 1e-11);
        let paper = RewardConfig { punishment_mode: PunishmentMode::Paper, ..c };
        assert!((r2(&s, RobotId::Agent1, &a, &paper) - (-5.0 / 12.0 - 2.0 / 5.0)).abs() < 1e-11);
    }

    #[test]
    fn coop_bonus_cases() {
        let m = GridMap::empty(30, 30).unwrap();
        let c = RewardConfig { beta: 60.0, attack_range: 3.0, coop_bonus_scale: 2.0, ..RewardConfig::default() };
        let a = StagAssignment { stag: RobotId::Enemy1, hare: RobotId::Enemy2 };
        let both = ArenaState::new([p(4, 5), p(6, 5), p(5, 5), p(25, 25)]);
        assert_eq!(coop_bonus(&both, &a, &c, &m), (6.0, 6.0));
        let split = ArenaState::new([p(4, 5), p(24, 25), p(5, 5), p(25, 25)]);
        assert_eq!(coop_bonus(&split, &a, &c, &m), (0.0, 4.0));
        let none = ArenaState::new([p(0, 0), p(0, 29), p(15, 15), p(29, 29)]);
        assert_eq!(coop_bonus(&none, &a, &c, &m), (0.0, 0.0));
        let lone = ArenaState::new([p(4, 5), p(0, 29), p(5, 5), p(29, 29)]);
        assert_eq!(coop_bonus(&lone, &a, &c, &m), (0.0, 0.0));
    }

    #[test]
    fn sparse_reward_cases() {
        let m = GridMap::empty(30, 30).unwrap();
        let c = RewardConfig { beta: 60.0, attack_range: 3.0, ..RewardConfig::default() };
        let a = StagAssignment { stag: RobotId::Enemy1, hare: RobotId::Enemy2 };
        let far = ArenaState::new([p(0, 0), p(0, 29), p(15, 15), p(29, 29)]);
        assert_eq!(sparse_reward(&far, RobotId::Agent1, &a, &c, &m), 0.0);
        let lone = ArenaState::new([p(14, 15), p(0, 29), p(15, 15), p(29, 29)]);
        assert_eq!(sparse_reward(&lone, RobotId::Agent1, &a, &c, &m), 1.0);
        assert_eq!(sparse_reward(&lone, RobotId::Agent2, &a, &c, &m), 0.0);
        let both = ArenaState::new([p(14, 15), p(16, 15), p(15, 15), p(29, 29)]);
        assert_eq!(sparse_reward(&both, RobotId::Agent1, &a, &c, &m), 4.0);
        assert_eq!(sparse_reward(&both, RobotId::Agent2, &a, &c, &m), 4.0);
    }

    fn arb_state() -> impl Strategy<Value = ArenaState> {
        prop::collection::vec((0i32..32, 0i32..20), 4)
            .prop_map(|v| ArenaState::new([p(v[0].0, v[0].1), p(v[1].0, v[1].1), p(v[2].0, v[2].1), p(v[3].0, v[3].1)]))
    }

    proptest! {
        #[test]
        fn additivity_is_bit_exact(s in arb_state(), paper in any::<bool>(), range in 0.5f64..10.0) {
            let c = RewardConfig {
                attack_range: range,
                punishment_mode: if paper { PunishmentMode::Paper } else { PunishmentMode::Corrected },
                ..cfg32()
            };
            let a = assign_stag(&s);
            for agent in [RobotId::Agent1, RobotId::Agent2] {
                let whole = r2(&s, agent, &a, &c);
                let part1 = r1(&s, agent, s.position(a.stag), &c);
                let pun = punishment(&s, agent, s.position(a.hare), &c);
                prop_assert_eq!((whole - part1).to_bits(), pun.to_bits());
            }
        }

        #[test]
        fn corrected_r2_bounded(s in arb_state()) {
            let c = cfg32();
            let a = assign_stag(&s);
            let v = r2(&s, RobotId::Agent1, &a, &c);
            prop_assert!(v > -2.0 && v <= 0.0);
        }

        #[test]
        fn r1_monotone_toward_stag(s in arb_state(), dir in 0usize..4) {
            let c = cfg32();
            let stag = s.position(RobotId::Enemy1);
            let (dx, dy) = [(0, 1), (0, -1), (1, 0), (-1, 0)][dir];
            let mut moved = s;
            moved.pos[0] = s.pos[0].offset(dx, dy);
            if distance(moved.pos[0], stag) < distance(s.pos[0], stag) {
                prop_assert!(r1(&moved, RobotId::Agent1, stag, &c) >= r1(&s, RobotId::Agent1, stag, &c));
            }
        }

        #[test]
        fn payoff_swaps_with_roles(s in arb_state()) {
            let m = GridMap::default_arena();
            let c = cfg32();
            let a = StagAssignment { stag: RobotId::Enemy1, hare: RobotId::Enemy2 };
            let mut t = s;
            t.pos.swap(0, 1);
            let (x, y) = coop_bonus(&s, &a, &c, &m);
            prop_assert_eq!(coop_bonus(&t, &a, &c, &m), (y, x));
        }

        #[test]
        fn sparse_implies_stag_in_range(s in arb_state()) {
            let m = GridMap::default_arena();
            let c = cfg32();
            let a = assign_stag(&s);
            for agent in [RobotId::Agent1, RobotId::Agent2] {
                if sparse_reward(&s, agent, &a, &c, &m) > 0.0 {
                    prop_assert!(within_attack_range(&m, s.position(agent), s.position(a.stag), c.attack_range));
                }
            }
        }
    }
}
