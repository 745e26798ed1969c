//! Newline-delimited JSON messages between the arena and its clients.
//!
//! Every line is one object with a `kind` field. A client says `hello`,
//! asks for a `seat` (or resumes one with the token it was given) and then
//! answers each `your_turn` with a `play`. The server echoes every play with
//! its verdict, reports each finished trick and the final result.

use serde::{Deserialize, Serialize};

use gongzhu_core::belief::Decision;
use gongzhu_core::engine::PlayerView;
use gongzhu_core::{Card, CardSet, PlayEvent};

pub const PROTOCOL_VERSION: u32 = 1;

/// Longest accepted line, in bytes.
pub const MAX_LINE: usize = 64 * 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMsg {
    Hello {
        name: String,
        #[serde(default)]
        version: Option<u32>,
        /// Ask for value hints with every `your_turn`.
        #[serde(default)]
        hints: bool,
    },
    /// Take a seat at a new table, or resume an interrupted one by token.
    Seat {
        #[serde(default)]
        seat: Option<u8>,
        #[serde(default)]
        token: Option<String>,
        /// Agent for the partner seat; the server's first agent if absent.
        #[serde(default)]
        partner: Option<String>,
        /// Agent for both opponent seats; the server's last agent if absent.
        #[serde(default)]
        opponents: Option<String>,
    },
    Play {
        card: Card,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerMsg {
    Hello {
        server: String,
        version: u32,
        agents: Vec<String>,
    },
    Seat {
        seat: u8,
        token: String,
        game: u64,
        players: [String; 4],
    },
    Deal {
        hand: CardSet,
        first_leader: u8,
    },
    YourTurn {
        legal: Vec<Card>,
        trick: Vec<PlayEvent>,
        deadline_ms: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hint: Option<Decision>,
    },
    /// Every play, with whether it was accepted.
    Play {
        seat: u8,
        card: Card,
        legal: bool,
    },
    TrickResult {
        winner: u8,
        cards: Vec<PlayEvent>,
        point_cards: CardSet,
    },
    GameResult {
        scores: [i32; 4],
        team: [i32; 2],
        record_id: u64,
        record: String,
    },
    Error {
        message: String,
        /// The connection is closed after a fatal error.
        fatal: bool,
    },
    /// Full public state plus the seat's own hand, sent on resume.
    StateSync {
        view: PlayerView,
        players: [String; 4],
        your_turn: bool,
        legal: Vec<Card>,
    },
}

impl ServerMsg {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("messages serialize");
        s.push('\n');
        s
    }

    pub fn error(message: impl Into<String>, fatal: bool) -> ServerMsg {
        ServerMsg::Error {
            message: message.into(),
            fatal,
        }
    }
}

impl ClientMsg {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("messages serialize");
        s.push('\n');
        s
    }

    pub fn parse(line: &str) -> Result<ClientMsg, serde_json::Error> {
        serde_json::from_str(line.trim_end_matches(['\r', '\n']))
    }
}
