use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::arena::{Action, ArenaConfig, ArenaState, GridMap, RobotId, Team};
use crate::dqn::{greedy_actions, load_weights, ModelVariant, QNetwork};
use crate::planner::{next_action, plan, PlanRequest};
use crate::rewards::assign_stag;

/// A team controller description. Stateless; [`Policy::controller`] makes a
/// seeded instance for one match.
#[derive(Debug, Clone)]
pub enum Policy {
    /// Both teammates replan every step towards the same stag with the
    /// standoff A*.
    AStar,
    /// Greedy actions from a trained network.
    Dqn { net: Arc<QNetwork>, variant: ModelVariant },
    /// Uniform random actions.
    Random,
    Stationary,
}

impl Policy {
    /// Parses `astar`, `random`, `stationary` or `dqn:<weights>[:model1|model2|model3]`.
    /// Without an explicit variant a 25-way head means `model2`, otherwise `model1`.
    pub fn parse(spec: &str) -> Result<Self, HarnessError> {
        match spec {
            "astar" => Ok(Policy::AStar),
            "random" => Ok(Policy::Random),
            "stationary" => Ok(Policy::Stationary),
            _ => {
                let rest = spec.strip_prefix("dqn:").ok_or_else(|| HarnessError::PolicySpec(spec.to_string()))?;
                let (path, variant) = match rest.rsplit_once(':') {
                    Some((p, v)) if v.parse::<ModelVariant>().is_ok() => (p, Some(v.parse::<ModelVariant>().unwrap())),
                    _ => (rest, None),
                };
                let net = load_weights(Path::new(path))?;
                let variant = variant.unwrap_or(if net.output_dim() == 25 { ModelVariant::Model2 } else { ModelVariant::Model1 });
                Policy::dqn(net, variant)
            }
        }
    }

    pub fn dqn(net: QNetwork, variant: ModelVariant) -> Result<Self, HarnessError> {
        if net.output_dim() != variant.output_dim() || net.input_dim() != crate::dqn::OBS_DIM {
            return Err(HarnessError::PolicySpec(format!(
                "network {:?} does not fit {variant:?}",
                net.dims()
            )));
        }
        Ok(Policy::Dqn { net: Arc::new(net), variant })
    }

    pub fn controller(&self, seed: u64) -> Controller {
        Controller { policy: self.clone(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::AStar => f.write_str("astar"),
            Policy::Random => f.write_str("random"),
            Policy::Stationary => f.write_str("stationary"),
            Policy::Dqn { variant, .. } => write!(f, "dqn-{}", format!("{variant:?}").to_lowercase()),
        }
    }
}

/// A policy bound to its own RNG for one match.
#[derive(Debug, Clone)]
pub struct Controller {
    policy: Policy,
    rng: ChaCha8Rng,
}

impl Controller {
    /// Actions for the two members of `team`, in member order.
    pub fn act(&mut self, state: &ArenaState, team: Team, map: &GridMap, cfg: &ArenaConfig) -> [Action; 2] {
        let view = match team {
            Team::Blue => *state,
            Team::Red => state.swapped(),
        };
        match &self.policy {
            Policy::Stationary => [Action::Stop; 2],
            Policy::Random => [0, 1].map(|_| Action::from_index(self.rng.gen_range(0..Action::COUNT)).unwrap()),
            Policy::Dqn { net, variant } => greedy_actions(net, *variant, &view, map),
            Policy::AStar => astar_actions(&view, map, cfg),
        }
    }
}

/// Standoff A* for `Agent1`/`Agent2` of `view` against the last-seen enemies.
/// Falls back to planning without the hare constraint when the safe plan is
/// impossible, and to `Stop` when even that fails.
pub fn astar_actions(view: &ArenaState, map: &GridMap, cfg: &ArenaConfig) -> [Action; 2] {
    let assignment = assign_stag(view);
    [RobotId::Agent1, RobotId::Agent2].map(|agent| {
        let start = view.position(agent);
        let req = PlanRequest {
            start,
            stag: view.last_seen(assignment.stag),
            hare: view.last_seen(assignment.hare),
            attack_range: cfg.attack_range,
            safe_distance: cfg.safe_distance,
        };
        plan(map, &req)
            .or_else(|_| plan(map, &PlanRequest { safe_distance: 0.0, ..req }))
            .ok()
            .and_then(|path| next_action(&path, start))
            .unwrap_or(Action::Stop)
    })
}
