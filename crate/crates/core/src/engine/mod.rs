//! Gongzhu rules: dealing, follow-suit legality, trick resolution and scoring.
//!
//! Every other module goes through this one for what is legal and what a
//! finished game is worth. [`GameState`] is a plain value; [`GameState::play`]
//! returns a new state and never mutates the receiver.

mod card;
mod record;
mod score;
mod state;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use card::{parse_cards, Card, CardSet, CardSetIter, Hand, Suit};
pub use record::{parse_game, serialize_game, GameRecord};
pub use score::{player_points, score, Score};
pub use state::{legal_from, resolve_trick, GameState, History, PlayerView};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("game is finished")]
    Terminal,
    #[error("illegal move {card}: {rule}")]
    IllegalMove { card: Card, rule: String },
    #[error("invalid trick: {0}")]
    InvalidTrick(String),
    #[error("inconsistent state: {0}")]
    Inconsistent(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
}

impl GameError {
    pub(crate) fn shift(self, by: usize) -> GameError {
        match self {
            GameError::Parse { offset, message } => GameError::Parse {
                offset: offset + by,
                message,
            },
            other => other,
        }
    }
}

/// Seat 0..=3, clockwise. Seats 0 and 2 form team 0; 1 and 3 team 1.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seat(u8);

impl Seat {
    pub const ALL: [Seat; 4] = [Seat(0), Seat(1), Seat(2), Seat(3)];

    pub fn new(i: usize) -> Seat {
        assert!(i < 4, "seat {i} out of range");
        Seat(i as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn next(self) -> Seat {
        Seat((self.0 + 1) % 4)
    }

    /// Seat `k` places clockwise from this one.
    pub fn offset(self, k: usize) -> Seat {
        Seat(((self.0 as usize + k) % 4) as u8)
    }

    pub fn partner(self) -> Seat {
        self.offset(2)
    }

    pub fn team(self) -> usize {
        self.index() % 2
    }

    /// +1 for team 0, -1 for team 1. Multiplies a team-0-minus-team-1 value
    /// into this seat's perspective.
    pub fn team_sign(self) -> f64 {
        if self.team() == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Debug for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seat({})", self.0)
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlayEvent {
    pub player: Seat,
    pub card: Card,
}

impl PlayEvent {
    pub fn new(player: Seat, card: Card) -> PlayEvent {
        PlayEvent { player, card }
    }
}
