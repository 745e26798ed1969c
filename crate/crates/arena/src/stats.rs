//! Leaderboard, head-to-head matrix and ε, derived from stored records.
//!
//! A record counts towards a pairing when seats 0 and 2 hold one agent and
//! seats 1 and 3 another. Each such game contributes one observation,
//! (team points − opponent points) / 2, from each side's point of view.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use gongzhu_core::eval::{epsilon, mean_stderr};

use crate::store::MatchRecord;

/// Observations of `a` against `b`, keyed by `(a, b)`. Both orders present.
pub fn observations(records: &[MatchRecord]) -> BTreeMap<(String, String), Vec<f64>> {
    let mut out: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in records {
        let p = &r.players;
        if p[0] != p[2] || p[1] != p[3] || p[0] == p[1] {
            continue;
        }
        let x = r.team_differential as f64 / 2.0;
        out.entry((p[0].clone(), p[1].clone())).or_default().push(x);
        out.entry((p[1].clone(), p[0].clone())).or_default().push(-x);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standing {
    pub name: String,
    pub games: usize,
    pub wpg: f64,
    pub stderr: f64,
}

/// WPG of every agent that has played the reference agent, best first.
pub fn leaderboard(records: &[MatchRecord], reference: &str) -> Vec<Standing> {
    let mut rows: Vec<Standing> = observations(records)
        .into_iter()
        .filter(|((_, b), _)| b == reference)
        .map(|((a, _), xs)| {
            let (wpg, stderr) = mean_stderr(&xs);
            Standing {
                name: a,
                games: xs.len(),
                wpg,
                stderr,
            }
        })
        .collect();
    rows.sort_by(|x, y| y.wpg.total_cmp(&x.wpg).then(x.name.cmp(&y.name)));
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub names: Vec<String>,
    /// Mean observation of row against column; `None` if never played.
    pub xi: Vec<Vec<Option<f64>>>,
    pub games: Vec<Vec<usize>>,
}

impl Matrix {
    /// ε over the agents, if every pair has played and there are at least
    /// three agents.
    pub fn epsilon(&self) -> Option<f64> {
        let n = self.names.len();
        if n < 3 {
            return None;
        }
        let mut xi = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    xi[i][j] = self.xi[i][j]?;
                }
            }
        }
        Some(epsilon(&xi))
    }
}

pub fn matrix(records: &[MatchRecord]) -> Matrix {
    let obs = observations(records);
    let names: Vec<String> = obs
        .keys()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = names.len();
    let mut xi = vec![vec![None; n]; n];
    let mut games = vec![vec![0; n]; n];
    for (i, a) in names.iter().enumerate() {
        xi[i][i] = Some(0.0);
        for (j, b) in names.iter().enumerate() {
            if let Some(xs) = obs.get(&(a.clone(), b.clone())) {
                xi[i][j] = Some(mean_stderr(xs).0);
                games[i][j] = xs.len();
            }
        }
    }
    Matrix { names, xi, games }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub name: String,
    pub games: usize,
    pub opponents: Vec<Standing>,
}

/// Per-opponent results of one agent; `None` if it has no recorded games.
pub fn agent_summary(records: &[MatchRecord], name: &str) -> Option<AgentSummary> {
    let games = records.iter().filter(|r| r.players.iter().any(|p| p == name)).count();
    if games == 0 {
        return None;
    }
    let opponents = observations(records)
        .into_iter()
        .filter(|((a, _), _)| a == name)
        .map(|((_, b), xs)| {
            let (wpg, stderr) = mean_stderr(&xs);
            Standing {
                name: b,
                games: xs.len(),
                wpg,
                stderr,
            }
        })
        .collect();
    Some(AgentSummary {
        name: name.to_string(),
        games,
        opponents,
    })
}
