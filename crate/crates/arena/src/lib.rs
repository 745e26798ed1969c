//! Game server: hosts tables mixing local agents with remote clients over
//! a newline-delimited JSON protocol, keeps an append-only record of every
//! finished game and serves statistics over HTTP.
//!
//! - [`protocol`]: wire messages
//! - [`table`]: one game's state machine
//! - [`store`]: match records on disk
//! - [`stats`]: leaderboard, head-to-head matrix, ε
//! - [`server`]: listeners, sessions and the HTTP API

pub mod protocol;
pub mod server;
pub mod stats;
pub mod store;
pub mod table;

pub use protocol::{ClientMsg, ServerMsg, MAX_LINE, PROTOCOL_VERSION};
pub use server::{serve, Arena, MatchRequest, ServeConfig, ServeError, ServerHandle};
pub use store::{MatchRecord, Store, StoreError};
