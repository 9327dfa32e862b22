use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    decode_joint, select_action, sgd_step, DqnError, ModelVariant, PrioritizedReplayBuffer, QNetwork, Transition,
    OBS_DIM,
};
use crate::arena::{is_two_v_one, step, team_observation, Action, ArenaConfig, ArenaState, GridMap, RobotId, Team};
use crate::harness::spawn_random;
use crate::rewards::{assign_stag, dense_reward, sparse_reward, RewardConfig};

/// How the enemy robots move while the agents train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentPolicy {
    RandomWalk,
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub variant: ModelVariant,
    pub gamma: f64,
    pub learning_rate: f64,
    /// Episodes between target-network syncs.
    pub target_update_every: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of `total_episodes` over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub total_episodes: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub replay_capacity: usize,
    pub priority_alpha: f64,
    pub importance_beta: f64,
    /// Environment steps between gradient updates.
    pub train_every: usize,
    /// Transitions collected before the first update.
    pub learning_starts: usize,
    /// Episode cap during training (evaluation uses `ArenaConfig::max_steps`).
    pub max_episode_steps: u32,
    /// Episodes per metrics record.
    pub log_every: usize,
    pub opponent: OpponentPolicy,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Desk-scale defaults. See [`TrainConfig::full_scale`] for the long run.
    fn default() -> Self {
        Self {
            variant: ModelVariant::Model1,
            gamma: 0.99,
            learning_rate: 0.01,
            target_update_every: 1000,
            epsilon_start: 0.8,
            epsilon_end: 0.3,
            epsilon_decay_fraction: 1.0,
            total_episodes: 20_000,
            batch_size: 32,
            hidden: vec![64, 64, 64],
            replay_capacity: 100_000,
            priority_alpha: 0.6,
            importance_beta: 0.4,
            train_every: 4,
            learning_starts: 1_000,
            max_episode_steps: 100,
            log_every: 100,
            opponent: OpponentPolicy::RandomWalk,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// 2,000,000 episodes with a 1,000,000-transition replay buffer.
    pub fn full_scale() -> Self {
        Self { total_episodes: 2_000_000, replay_capacity: 1_000_000, ..Self::default() }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![OBS_DIM];
        d.extend(&self.hidden);
        d.push(self.variant.output_dim());
        d
    }

    pub fn validate(&self) -> Result<(), DqnError> {
        let bad = |m: &str| Err(DqnError::Config(m.into()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.epsilon_start >= self.epsilon_end && self.epsilon_end >= 0.0 && self.epsilon_start <= 1.0) {
            return bad("need 1 >= epsilon_start >= epsilon_end >= 0");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad("batch_size must be positive and fit in the replay buffer");
        }
        if self.target_update_every == 0 || self.train_every == 0 || self.log_every == 0 {
            return bad("intervals must be positive");
        }
        if self.max_episode_steps == 0 {
            return bad("max_episode_steps must be positive");
        }
        Ok(())
    }
}

/// Linear decay from `epsilon_start` to `epsilon_end` over the decay window,
/// then flat.
pub fn epsilon_at(cfg: &TrainConfig, episode: usize) -> f64 {
    let span = cfg.epsilon_decay_fraction * cfg.total_episodes as f64;
    if span <= 0.0 {
        return cfg.epsilon_end;
    }
    let t = (episode as f64 / span).min(1.0);
    cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * t
}

/// Means over one logging window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    /// Number of episodes completed at the end of the window.
    pub episode: usize,
    pub mean_reward: f64,
    /// Zero when the window had no gradient updates.
    pub mean_loss: f64,
    pub mean_td_error: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: QNetwork,
    pub metrics: Vec<MetricRecord>,
}

pub fn write_metrics_csv<W: Write>(records: &[MetricRecord], out: W) -> Result<(), DqnError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Default)]
struct Window {
    episodes: usize,
    reward: f64,
    updates: usize,
    loss: f64,
    td: f64,
    td_count: usize,
}

impl Window {
    fn record(&self, episode: usize) -> MetricRecord {
        let per = |v: f64, n: usize| if n == 0 { 0.0 } else { v / n as f64 };
        MetricRecord {
            episode,
            mean_reward: per(self.reward, self.episodes),
            mean_loss: per(self.loss, self.updates),
            mean_td_error: per(self.td, self.td_count),
        }
    }
}

fn opponent_actions(policy: OpponentPolicy, rng: &mut ChaCha8Rng) -> [Action; 2] {
    match policy {
        OpponentPolicy::Stationary => [Action::Stop; 2],
        OpponentPolicy::RandomWalk => {
            [Action::from_index(rng.gen_range(0..Action::COUNT)).unwrap(), Action::from_index(rng.gen_range(0..Action::COUNT)).unwrap()]
        }
    }
}

/// Trains one network for `cfg.variant`. The run is a pure function of its
/// arguments: one seeded RNG drives spawns, exploration, opponents and
/// replay sampling.
pub fn train(
    cfg: &TrainConfig,
    map: &GridMap,
    arena: &ArenaConfig,
    rewards: &RewardConfig,
) -> Result<TrainOutcome, DqnError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = QNetwork::new(&cfg.dims(), &mut rng);
    let mut target = net.clone();
    let mut buffer = PrioritizedReplayBuffer::new(cfg.replay_capacity, cfg.priority_alpha);
    let mut metrics = Vec::new();
    let mut window = Window::default();
    let mut env_steps = 0usize;
    let agents = [RobotId::Agent1, RobotId::Agent2];

    for episode in 0..cfg.total_episodes {
        let epsilon = epsilon_at(cfg, episode);
        let mut state: ArenaState = spawn_random(map, arena, &mut rng).map_err(|e| DqnError::Spawn(e.to_string()))?;
        let mut episode_reward = 0.0;

        for _ in 0..cfg.max_episode_steps {
            let obs = agents.map(|id| team_observation(&state, id, map));
            let (chosen, joint) = match cfg.variant {
                ModelVariant::Model2 => {
                    let k = select_action(&net, &obs[0], epsilon, &mut rng);
                    let (a1, a2) = decode_joint(k);
                    ([a1.index(), a2.index()], Some(k))
                }
                ModelVariant::Model1 | ModelVariant::Model3 => {
                    let a1 = select_action(&net, &obs[0], epsilon, &mut rng);
                    let a2 = select_action(&net, &obs[1], epsilon, &mut rng);
                    ([a1, a2], None)
                }
            };
            let [e1, e2] = opponent_actions(cfg.opponent, &mut rng);
            let actions = [Action::from_index(chosen[0]).unwrap(), Action::from_index(chosen[1]).unwrap(), e1, e2];
            let next = step(&state, &actions, map, arena);

            let done = is_two_v_one(&next, Team::Blue, arena, map) || is_two_v_one(&next, Team::Red, arena, map);
            let assignment = assign_stag(&next);
            let reward_of = |id| match cfg.variant {
                ModelVariant::Model3 => sparse_reward(&next, id, &assignment, rewards, map),
                ModelVariant::Model1 | ModelVariant::Model2 => dense_reward(&next, id, &assignment, rewards, map),
            };
            let per_agent = agents.map(reward_of);
            episode_reward += per_agent[0] + per_agent[1];
            let next_obs = agents.map(|id| team_observation(&next, id, map));

            match joint {
                Some(k) => buffer.push(Transition {
                    obs: obs[0],
                    action: k,
                    reward: per_agent[0] + per_agent[1],
                    next_obs: next_obs[0],
                    done,
                }),
                None => {
                    for i in 0..2 {
                        buffer.push(Transition {
                            obs: obs[i],
                            action: chosen[i],
                            reward: per_agent[i],
                            next_obs: next_obs[i],
                            done,
                        });
                    }
                }
            }

            env_steps += 1;
            if buffer.len() >= cfg.learning_starts.max(cfg.batch_size) && env_steps.is_multiple_of(cfg.train_every) {
                let sample = buffer.sample(cfg.batch_size, cfg.importance_beta, &mut rng)?;
                let stats = sgd_step(&mut net, &sample.transitions, &sample.weights, &target, cfg.gamma, cfg.learning_rate)
                    .map_err(|e| match e {
                        DqnError::NonFinite { .. } => DqnError::NonFinite { episode },
                        other => other,
                    })?;
                buffer.update_priorities(&sample.indices, &stats.td_errors);
                window.updates += 1;
                window.loss += stats.loss;
                window.td += stats.td_errors.iter().sum::<f64>();
                window.td_count += stats.td_errors.len();
            }

            state = next;
            if done {
                break;
            }
        }

        window.episodes += 1;
        window.reward += episode_reward;
        if (episode + 1) % cfg.target_update_every == 0 {
            target = net.clone();
        }
        if (episode + 1) % cfg.log_every == 0 || episode + 1 == cfg.total_episodes {
            metrics.push(window.record(episode + 1));
            window = Window::default();
        }
    }

    Ok(TrainOutcome { net, metrics })
}
