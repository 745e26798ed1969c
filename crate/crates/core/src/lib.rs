//! Gongzhu engine and imperfect-information agents.
//!
//! - [`engine`]: rules, scoring and the one-line game record format.
//! - [`agents`]: the rule-based opponent ladder (random, if, greed).
//! - [`nn`]: 434-wide input encoding and the policy-value network.
//! - [`mcts`]: UCB tree search over full-information states.
//! - [`belief`]: hidden-hand sampling, scenario scoring and the search agent.
//! - [`trainer`]: double-dummy self-play and training.
//! - [`eval`]: paired-deal matches, combat matrices, intransitivity.
//! - [`registry`]: agents by name.

pub mod engine;

pub use engine::{Card, CardSet, GameError, GameState, PlayEvent, PlayerView, Score, Seat, Suit};
pub mod agents;
pub mod belief;
pub mod nn;
pub mod mcts;
pub mod eval;
pub mod trainer;
pub mod registry;
