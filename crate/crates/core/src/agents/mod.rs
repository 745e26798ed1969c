//! Rule-based agents: the opponent ladder and the WPG reference opponent.

mod greed;
mod mr_if;
mod random;

use rand_chacha::ChaCha8Rng;

use crate::engine::{Card, PlayerView};

pub use greed::{CardValueTable, MrGreed};
pub use mr_if::MrIf;
pub use random::MrRandom;

/// RNG handed to agents. Seeded per seat so paired replays are reproducible.
pub type GameRng = ChaCha8Rng;

/// A strategy: maps one seat's information set to a legal card.
pub trait Agent: Send + Sync {
    fn name(&self) -> &str;

    /// Must return a member of `view.legal_moves()`.
    fn choose(&self, view: &PlayerView, rng: &mut GameRng) -> Card;
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn choose(&self, view: &PlayerView, rng: &mut GameRng) -> Card {
        (**self).choose(view, rng)
    }
}

impl<A: Agent + ?Sized> Agent for std::sync::Arc<A> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn choose(&self, view: &PlayerView, rng: &mut GameRng) -> Card {
        (**self).choose(view, rng)
    }
}

/// Names accepted by [`baseline`].
pub const BASELINE_NAMES: [&str; 3] = ["random", "if", "greed"];

/// Look up a rule-based agent by name.
pub fn baseline(name: &str) -> Option<Box<dyn Agent>> {
    match name {
        "random" => Some(Box::new(MrRandom)),
        "if" => Some(Box::new(MrIf)),
        "greed" => Some(Box::new(MrGreed::default())),
        _ => None,
    }
}
