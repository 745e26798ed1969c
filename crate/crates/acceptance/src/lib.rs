//! Oracles and statistics shared by the acceptance suite.
//!
//! - [`oracle`]: a table-driven scorer that shares no code with the engine
//! - [`stats`]: paired comparisons and one-sided p-values
//! - [`iec_fixture`]: crafted two-slice histories scored both by the belief
//!   layer and by an explicitly normalized likelihood

pub mod iec_fixture;
pub mod oracle;
pub mod stats;
