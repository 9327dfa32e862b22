//! Grid-world 2-vs-1 robot combat: the arena simulator, stag-hunt reward
//! shaping, a standoff A* planner, a from-scratch DQN with prioritized
//! replay, lidar-based enemy detection and a seeded tournament harness.

pub mod arena;
pub mod config;
pub mod dqn;
pub mod harness;
pub mod lidar;
pub mod planner;
pub mod rewards;
