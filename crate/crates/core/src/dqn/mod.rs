//! Deep Q-learning from scratch: ReLU MLP with hand-written backprop,
//! proportional prioritized replay, a periodically synced target network and
//! an epsilon-greedy training loop over the three controller variants.

mod network;
mod replay;
mod train;
mod weights;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{team_observation, Action, ArenaState, GridMap, RobotId};

pub use network::{argmax, huber, Layer, QNetwork};
pub use replay::{PrioritizedReplayBuffer, Sample};
pub use train::{epsilon_at, train, write_metrics_csv, MetricRecord, OpponentPolicy, TrainConfig, TrainOutcome};
pub use weights::{from_bytes, load_weights, load_weights_with_outputs, save_weights, to_bytes, FORMAT_VERSION, MAGIC};

pub const OBS_DIM: usize = 8;

#[derive(Debug, Error)]
pub enum DqnError {
    #[error("replay buffer holds {have} transitions, need {need}")]
    Underfull { have: usize, need: usize },
    #[error("non-finite loss at episode {episode}")]
    NonFinite { episode: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("weight file: {0}")]
    Format(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("spawn failed: {0}")]
    Spawn(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: [f64; OBS_DIM],
    pub action: usize,
    pub reward: f64,
    pub next_obs: [f64; OBS_DIM],
    pub done: bool,
}

/// Controller topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    /// One 5-action network shared by both agents, dense shaped reward.
    Model1,
    /// One 25-action network emitting the joint action, dense reward.
    Model2,
    /// As `Model1`, with the sparse attack-event reward.
    Model3,
}

impl ModelVariant {
    pub fn output_dim(self) -> usize {
        match self {
            ModelVariant::Model2 => Action::COUNT * Action::COUNT,
            ModelVariant::Model1 | ModelVariant::Model3 => Action::COUNT,
        }
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "model1" => Ok(ModelVariant::Model1),
            "model2" => Ok(ModelVariant::Model2),
            "model3" => Ok(ModelVariant::Model3),
            other => Err(format!("unknown model variant {other:?}")),
        }
    }
}

/// Joint action index `k` to `(agent1, agent2)` actions: `(k / 5, k % 5)`.
pub fn decode_joint(k: usize) -> (Action, Action) {
    let a1 = Action::from_index(k / Action::COUNT).expect("joint index out of range");
    let a2 = Action::from_index(k % Action::COUNT).expect("joint index out of range");
    (a1, a2)
}

pub fn encode_joint(a1: Action, a2: Action) -> usize {
    a1.index() * Action::COUNT + a2.index()
}

/// Bootstrapped target `r + gamma * max_a Q_target(s', a)`, or `r` when done.
pub fn td_target(t: &Transition, target_net: &QNetwork, gamma: f64) -> f64 {
    if t.done {
        t.reward
    } else {
        let q = target_net.forward(&t.next_obs);
        t.reward + gamma * q.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    /// `|target - Q(s, a)|` per batch item, before the update.
    pub td_errors: Vec<f64>,
}

/// One plain SGD step on the importance-weighted Huber loss.
pub fn sgd_step(
    net: &mut QNetwork,
    batch: &[Transition],
    is_weights: &[f64],
    target_net: &QNetwork,
    gamma: f64,
    learning_rate: f64,
) -> Result<StepStats, DqnError> {
    if batch.is_empty() {
        return Err(DqnError::Underfull { have: 0, need: 1 });
    }
    let targets: Vec<f64> = batch.iter().map(|t| td_target(t, target_net, gamma)).collect();
    let (loss, td, grad) = net.loss_and_gradient(batch, is_weights, &targets);
    if !loss.is_finite() {
        return Err(DqnError::NonFinite { episode: 0 });
    }
    net.apply_gradient(&grad, learning_rate);
    Ok(StepStats { loss, td_errors: td.into_iter().map(f64::abs).collect() })
}

/// Epsilon-greedy: a uniform random action with probability `epsilon`,
/// otherwise the greedy action (lowest index on ties).
pub fn select_action<R: Rng + ?Sized>(net: &QNetwork, obs: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..net.output_dim())
    } else {
        argmax(&net.forward(obs))
    }
}

/// Greedy actions for `Agent1`/`Agent2` of `state`.
pub fn greedy_actions(net: &QNetwork, variant: ModelVariant, state: &ArenaState, map: &GridMap) -> [Action; 2] {
    match variant {
        ModelVariant::Model2 => {
            let obs = team_observation(state, RobotId::Agent1, map);
            let (a1, a2) = decode_joint(argmax(&net.forward(&obs)));
            [a1, a2]
        }
        ModelVariant::Model1 | ModelVariant::Model3 => [RobotId::Agent1, RobotId::Agent2].map(|id| {
            let obs = team_observation(state, id, map);
            Action::from_index(argmax(&net.forward(&obs))).unwrap()
        }),
    }
}
