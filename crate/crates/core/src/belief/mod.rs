//! Hidden-hand inference: compatible scenarios, key-card strata, scenario
//! plausibility scores and the belief-weighted search agent.

mod agent;
mod iec;
mod sampling;
mod strata;

pub use agent::{
    action_values, aggregate, decide, weighted_value, BeliefConfig, BeliefError, Decision, RawNetAgent,
    Sampling, ScenarioReport, ScrofaAgent,
};
pub use iec::{correction_factor, iec_score, ImportanceRule, ScenarioScore, SliceFactor};
pub use sampling::{sample_scenario, void_constraints, HiddenDeal, Infeasible, Scenario, VoidConstraints};
pub use strata::{active_key_cards, allocate, make_strata, Stratum, DEFAULT_KEY_CARDS, KEY_CARDS_USED};
