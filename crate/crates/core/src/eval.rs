//! Matches, WPG reports, combat matrices and the intransitivity statistic ε.
//!
//! A paired match plays every deal twice over the same cards: once with team
//! A in seats 0 and 2, once with the teams swapped. Each seat draws from an
//! RNG seeded by (deal, seat), so an agent playing itself produces mirrored
//! games and a WPG of exactly zero. One deal contributes one observation:
//! the mean over its games of (A points − B points) / 2.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{Agent, GameRng};
use crate::engine::{GameState, Seat};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// RNG for one seat in one deal. Identical in both games of a pair.
pub fn seat_rng(deal_seed: u64, seat: Seat) -> GameRng {
    let mut rng = GameRng::seed_from_u64(deal_seed);
    rng.set_stream(seat.index() as u64 + 1);
    rng
}

/// Deal seeds for a match, derived from the match seed.
pub fn deal_seeds(seed: u64, deals: usize) -> Vec<u64> {
    let mut rng = GameRng::seed_from_u64(seed);
    (0..deals).map(|_| rng.gen()).collect()
}

/// Play `state` to the end with one agent per seat.
pub fn play_out(mut state: GameState, seats: [&dyn Agent; 4], rngs: &mut [GameRng; 4]) -> GameState {
    while !state.is_terminal() {
        let seat = state.to_play();
        let view = state.view(seat);
        let card = seats[seat.index()].choose(&view, &mut rngs[seat.index()]);
        state
            .play_mut(card)
            .unwrap_or_else(|e| panic!("{} played {card}: {e}", seats[seat.index()].name()));
    }
    state
}

/// Play one deal with `a` in seats 0/2 (`swapped = false`) or 1/3.
/// Returns the finished game.
pub fn play_deal_once(a: &dyn Agent, b: &dyn Agent, deal_seed: u64, swapped: bool) -> GameState {
    let seats: [&dyn Agent; 4] = if swapped { [b, a, b, a] } else { [a, b, a, b] };
    let mut rngs = Seat::ALL.map(|s| seat_rng(deal_seed, s));
    play_out(GameState::deal(deal_seed), seats, &mut rngs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DealOutcome {
    pub seed: u64,
    /// A points minus B points, per game of this deal.
    pub diffs: Vec<i32>,
}

impl DealOutcome {
    pub fn observation(&self) -> f64 {
        self.diffs.iter().map(|&d| d as f64 / 2.0).sum::<f64>() / self.diffs.len() as f64
    }
}

pub fn play_deal(a: &dyn Agent, b: &dyn Agent, deal_seed: u64, paired: bool) -> DealOutcome {
    let mut diffs = Vec::with_capacity(2);
    let first = play_deal_once(a, b, deal_seed, false);
    diffs.push(first.team_differential().unwrap());
    if paired {
        let second = play_deal_once(a, b, deal_seed, true);
        diffs.push(-second.team_differential().unwrap());
    }
    DealOutcome {
        seed: deal_seed,
        diffs,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub deals: usize,
    pub seed: u64,
    pub paired: bool,
}

/// Versioned summary of one match, written by `eval --json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub agent_a: String,
    pub agent_b: String,
    pub seed: u64,
    pub deals: usize,
    pub games: usize,
    pub paired: bool,
    /// Mean per-deal observation (A over B).
    pub wpg: f64,
    pub stderr: f64,
    /// `wpg / stderr`; 0 when both are 0.
    pub z: f64,
    /// Fractions of games A won, drew and lost on team totals.
    pub win_rate: f64,
    pub draw_rate: f64,
    pub loss_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub report: EvalReport,
    pub outcomes: Vec<DealOutcome>,
}

impl MatchResult {
    pub fn observations(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.observation()).collect()
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let (_, se) = mean_stderr(xs);
    se * (xs.len() as f64).sqrt()
}

fn z_score(mean: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        mean / stderr
    } else if mean == 0.0 {
        0.0
    } else {
        mean.signum() * f64::INFINITY
    }
}

pub fn summarize(a: &str, b: &str, config: &MatchConfig, outcomes: Vec<DealOutcome>) -> MatchResult {
    let obs: Vec<f64> = outcomes.iter().map(|o| o.observation()).collect();
    let (wpg, stderr) = mean_stderr(&obs);
    let diffs: Vec<i32> = outcomes.iter().flat_map(|o| o.diffs.iter().copied()).collect();
    let games = diffs.len();
    let frac = |f: &dyn Fn(i32) -> bool| {
        if games == 0 {
            0.0
        } else {
            diffs.iter().filter(|&&d| f(d)).count() as f64 / games as f64
        }
    };
    let report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        agent_a: a.to_string(),
        agent_b: b.to_string(),
        seed: config.seed,
        deals: outcomes.len(),
        games,
        paired: config.paired,
        wpg,
        stderr,
        z: z_score(wpg, stderr),
        win_rate: frac(&|d| d > 0),
        draw_rate: frac(&|d| d == 0),
        loss_rate: frac(&|d| d < 0),
    };
    MatchResult { report, outcomes }
}

/// Team A against team B over `config.deals` deals. Deals run in parallel;
/// results are in deal order and independent of thread count.
pub fn run_match(a: &dyn Agent, b: &dyn Agent, config: &MatchConfig) -> MatchResult {
    let seeds = deal_seeds(config.seed, config.deals);
    let outcomes: Vec<DealOutcome> = seeds
        .par_iter()
        .map(|&s| play_deal(a, b, s, config.paired))
        .collect();
    summarize(a.name(), b.name(), config, outcomes)
}

/// Pairwise scores ξ for a list of agents. `xi[i][j]` is the WPG of agent
/// `i` against agent `j`; the matrix is antisymmetric with a zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombatMatrix {
    pub schema_version: u32,
    pub names: Vec<String>,
    pub xi: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    /// Per-deal observations for each unordered pair `i < j`, in the order
    /// (0,1), (0,2), …, (1,2), … Used for bootstrapping.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observations: Vec<Vec<f64>>,
}

impl CombatMatrix {
    pub fn from_pairs(names: Vec<String>, observations: Vec<Vec<f64>>) -> CombatMatrix {
        let n = names.len();
        assert_eq!(observations.len(), n * n.saturating_sub(1) / 2);
        let mut xi = vec![vec![0.0; n]; n];
        let mut stderr = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let (m, s) = mean_stderr(&observations[k]);
                xi[i][j] = m;
                xi[j][i] = -m;
                stderr[i][j] = s;
                stderr[j][i] = s;
                k += 1;
            }
        }
        CombatMatrix {
            schema_version: REPORT_SCHEMA_VERSION,
            names,
            xi,
            stderr,
            observations,
        }
    }

    pub fn epsilon(&self) -> f64 {
        epsilon(&self.xi)
    }

    /// Bootstrap standard error of ε, resampling deals within each pair.
    pub fn epsilon_stderr(&self, resamples: usize, seed: u64) -> f64 {
        let mut rng = GameRng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(resamples);
        for _ in 0..resamples {
            let obs: Vec<Vec<f64>> = self
                .observations
                .iter()
                .map(|o| (0..o.len()).map(|_| o[rng.gen_range(0..o.len())]).collect())
                .collect();
            values.push(CombatMatrix::from_pairs(self.names.clone(), obs).epsilon());
        }
        std_dev(&values)
    }
}

/// Play every unordered pair of `agents` against each other.
pub fn combat_matrix(agents: &[&dyn Agent], config: &MatchConfig) -> CombatMatrix {
    let mut observations = Vec::new();
    for i in 0..agents.len() {
        for j in i + 1..agents.len() {
            observations.push(run_match(agents[i], agents[j], config).observations());
        }
    }
    let names = agents.iter().map(|a| a.name().to_string()).collect();
    CombatMatrix::from_pairs(names, observations)
}

/// Intransitivity of a pairwise score matrix:
///
/// ε = Σ_{i<j<k} d² / Σ_{i<j<k} |d|·(|ξ_ij| + |ξ_jk| + |ξ_ik|), with
/// d = ξ_ij + ξ_jk − ξ_ik.
///
/// 0 for scores that come from a rating, 1 for rock-paper-scissors. 0/0 is
/// taken as 0.
pub fn epsilon(xi: &[Vec<f64>]) -> f64 {
    let n = xi.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let d = xi[i][j] + xi[j][k] - xi[i][k];
                num += d * d;
                den += d.abs() * (xi[i][j].abs() + xi[j][k].abs() + xi[i][k].abs());
            }
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
