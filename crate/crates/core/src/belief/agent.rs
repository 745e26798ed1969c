//! Decision making under hidden hands: draw scenarios, search each one,
//! and average the per-action values with plausibility weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::iec::{iec_score, ImportanceRule, ScenarioScore};
use super::sampling::{void_constraints, HiddenDeal, Scenario};
use super::strata::{allocate, make_strata, Stratum, DEFAULT_KEY_CARDS};
use crate::agents::{Agent, GameRng};
use crate::engine::{Card, GameState, PlayerView};
use crate::mcts::{search, SearchConfig};
use crate::nn::{encode_view, masked_policy, Evaluator};

#[derive(Debug, Error, PartialEq)]
pub enum BeliefError {
    #[error("invalid belief config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Independent uniform draws over all compatible scenarios.
    Uniform,
    /// Draws spread evenly over the key-card strata.
    Stratified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefConfig {
    /// Inverse temperature on policy-logit regret.
    pub beta: f64,
    /// Scenarios per decision.
    pub budget: usize,
    pub key_cards: Vec<Card>,
    pub rule: ImportanceRule,
    pub sampling: Sampling,
    /// Weight scenarios by their IEC score; uniform weights otherwise.
    pub iec: bool,
    pub search: SearchConfig,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        BeliefConfig {
            beta: 1.0,
            budget: 9,
            key_cards: DEFAULT_KEY_CARDS.to_vec(),
            rule: ImportanceRule::default(),
            sampling: Sampling::Stratified,
            iec: true,
            search: SearchConfig::default(),
        }
    }
}

impl BeliefConfig {
    /// Plain uniform sampling with unweighted averaging.
    pub fn uniform() -> BeliefConfig {
        BeliefConfig {
            sampling: Sampling::Uniform,
            iec: false,
            ..BeliefConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), BeliefError> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(BeliefError::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.budget == 0 {
            return Err(BeliefError::Config("sample budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// One searched scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    /// Index into [`Decision::strata`], if stratified.
    pub stratum: Option<usize>,
    pub scenario: Scenario,
    /// Sampling weight before plausibility.
    pub prior: f64,
    pub score: ScenarioScore,
    /// Normalized final weight.
    pub weight: f64,
    /// Value of each legal action, from the observer's side.
    pub q: Vec<(Card, f64)>,
}

/// Everything behind one decision, for inspection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub strata: Vec<Stratum>,
    pub scenarios: Vec<ScenarioReport>,
    /// Weighted value of each legal action.
    pub q: Vec<(Card, f64)>,
    pub choice: Card,
}

impl Decision {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("decision serializes")
    }
}

/// Weighted mean of per-scenario action values with weights
/// `prior · score`, normalized. Falls back to the priors if every score
/// underflows.
pub fn aggregate(priors: &[f64], scores: &[f64], q: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(priors.len(), scores.len());
    assert_eq!(priors.len(), q.len());
    let mut w: Vec<f64> = priors.iter().zip(scores).map(|(p, s)| p * s).collect();
    let mut total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        w = priors.to_vec();
        total = w.iter().sum();
    }
    w.iter_mut().for_each(|x| *x /= total);
    let actions = q.first().map_or(0, |v| v.len());
    let mut out = vec![0.0; actions];
    for (wl, ql) in w.iter().zip(q) {
        for (o, v) in out.iter_mut().zip(ql) {
            *o += wl * v;
        }
    }
    (out, w)
}

/// Value of each legal action in a full-information state, from the
/// observer's side: one search per action from the state after it.
pub fn action_values(state: &GameState, evaluator: &dyn Evaluator, config: &SearchConfig) -> Vec<(Card, f64)> {
    let observer = state.to_play();
    let sign = observer.team_sign();
    state
        .legal_moves()
        .expect("live state")
        .iter()
        .map(|a| {
            let next = state.play(a).unwrap();
            let v = if next.is_terminal() {
                sign * next.team_differential().unwrap() as f64
            } else {
                let r = search(&next, evaluator, config);
                r.root_value * r.mover.team_sign() * sign
            };
            (a, v)
        })
        .collect()
}

struct Draw {
    stratum: Option<usize>,
    scenario: Scenario,
    prior: f64,
}

fn draw_scenarios(view: &PlayerView, config: &BeliefConfig, rng: &mut GameRng) -> (Vec<Stratum>, Vec<Draw>) {
    let vc = void_constraints(&view.history, view.seat);
    match config.sampling {
        Sampling::Uniform => {
            let n = config.budget;
            let draws = HiddenDeal::new(view, &vc)
                .sample_n(n, rng)
                .expect("real histories are always satisfiable")
                .into_iter()
                .map(|scenario| Draw {
                    stratum: None,
                    scenario,
                    prior: 1.0 / n as f64,
                })
                .collect();
            (Vec::new(), draws)
        }
        Sampling::Stratified => {
            let strata = make_strata(view, &vc, &config.key_cards);
            let counts = allocate(config.budget, strata.len());
            let used = counts.iter().filter(|&&k| k > 0).count() as f64;
            let mut draws = Vec::new();
            for (j, ((_, deal), &k)) in strata.iter().zip(&counts).enumerate() {
                if k == 0 {
                    continue;
                }
                for scenario in deal.sample_n(k, rng).expect("stratum checked feasible") {
                    draws.push(Draw {
                        stratum: Some(j),
                        scenario,
                        prior: 1.0 / (used * k as f64),
                    });
                }
            }
            (strata.into_iter().map(|(s, _)| s).collect(), draws)
        }
    }
}

/// Sample, score and search scenarios, then pick the action with the best
/// weighted value (lowest card on ties).
pub fn decide(view: &PlayerView, evaluator: &dyn Evaluator, config: &BeliefConfig, rng: &mut GameRng) -> Decision {
    let legal = view.legal_moves();
    assert!(!legal.is_empty(), "no legal move for {}", view.seat);
    let (strata, draws) = draw_scenarios(view, config, rng);
    let searched: Vec<(ScenarioScore, Vec<(Card, f64)>)> = draws
        .par_iter()
        .map(|d| {
            let score = if config.iec {
                iec_score(view, &d.scenario, evaluator, config.beta, &config.rule)
            } else {
                ScenarioScore {
                    score: 1.0,
                    factors: Vec::new(),
                }
            };
            let q = if legal.len() == 1 {
                vec![(legal.lowest().unwrap(), 0.0)]
            } else {
                action_values(&d.scenario.to_state(view), evaluator, &config.search)
            };
            (score, q)
        })
        .collect();
    let priors: Vec<f64> = draws.iter().map(|d| d.prior).collect();
    let scores: Vec<f64> = searched.iter().map(|s| s.0.score).collect();
    let qs: Vec<Vec<f64>> = searched.iter().map(|s| s.1.iter().map(|x| x.1).collect()).collect();
    let (mean, weights) = aggregate(&priors, &scores, &qs);
    let cards: Vec<Card> = searched[0].1.iter().map(|x| x.0).collect();
    let mut best = 0;
    for (i, v) in mean.iter().enumerate() {
        if *v > mean[best] {
            best = i;
        }
    }
    let q: Vec<(Card, f64)> = cards.iter().copied().zip(mean.iter().copied()).collect();
    let scenarios = draws
        .into_iter()
        .zip(searched)
        .zip(weights)
        .map(|((d, (score, q)), weight)| ScenarioReport {
            stratum: d.stratum,
            scenario: d.scenario,
            prior: d.prior,
            score,
            weight,
            q,
        })
        .collect();
    Decision {
        strata,
        scenarios,
        q,
        choice: cards[best],
    }
}

/// Weighted value of each legal action.
pub fn weighted_value(
    view: &PlayerView,
    evaluator: &dyn Evaluator,
    config: &BeliefConfig,
    rng: &mut GameRng,
) -> Vec<(Card, f64)> {
    decide(view, evaluator, config, rng).q
}

/// Belief-weighted search player.
pub struct ScrofaAgent<E> {
    name: String,
    pub evaluator: E,
    pub config: BeliefConfig,
}

impl<E: Evaluator> ScrofaAgent<E> {
    pub fn new(name: impl Into<String>, evaluator: E, config: BeliefConfig) -> Result<Self, BeliefError> {
        config.validate()?;
        Ok(ScrofaAgent {
            name: name.into(),
            evaluator,
            config,
        })
    }

    pub fn decide(&self, view: &PlayerView, rng: &mut GameRng) -> Decision {
        decide(view, &self.evaluator, &self.config, rng)
    }
}

impl<E: Evaluator> Agent for ScrofaAgent<E> {
    fn name(&self) -> &str {
        &self.name
    }

    fn choose(&self, view: &PlayerView, rng: &mut GameRng) -> Card {
        let legal = view.legal_moves();
        if legal.len() == 1 {
            return legal.lowest().unwrap();
        }
        self.decide(view, rng).choice
    }
}

/// Plays the policy head's favourite legal card, no search.
pub struct RawNetAgent<E> {
    pub evaluator: E,
}

impl<E: Evaluator> Agent for RawNetAgent<E> {
    fn name(&self) -> &str {
        "net"
    }

    fn choose(&self, view: &PlayerView, _: &mut GameRng) -> Card {
        let legal = view.legal_moves();
        let out = self.evaluator.evaluate(&encode_view(view));
        let p = masked_policy(&out.logits, legal).expect("legal moves exist");
        let mut best = legal.lowest().unwrap();
        for c in legal {
            if p[c.index()] > p[best.index()] {
                best = c;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::mcts::Budget;
    use crate::nn::{NetConfig, Network, ZeroEvaluator};

    #[test]
    fn weighted_mean_example() {
        let third = 1.0 / 3.0;
        let (q, w) = aggregate(
            &[third; 3],
            &[1.0, 1.0, 2.0],
            &[vec![0.0, 5.0], vec![0.0, 5.0], vec![30.0, 5.0]],
        );
        assert!((q[0] - 15.0).abs() < 1e-12);
        assert!((q[1] - 5.0).abs() < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_scenario_passes_through() {
        let (q, w) = aggregate(&[1.0], &[0.02], &[vec![-7.0, 3.0]]);
        assert_eq!(q, vec![-7.0, 3.0]);
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn equal_scores_give_prior_average() {
        let (q, _) = aggregate(&[0.5, 0.25, 0.25], &[0.3, 0.3, 0.3], &[vec![4.0], vec![8.0], vec![0.0]]);
        assert!((q[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn underflow_falls_back_to_priors() {
        let (q, w) = aggregate(&[0.5, 0.5], &[0.0, 0.0], &[vec![2.0], vec![4.0]]);
        assert_eq!(q, vec![3.0]);
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn config_validation() {
        assert!(BeliefConfig::default().validate().is_ok());
        let bad = BeliefConfig {
            beta: 0.0,
            ..BeliefConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = BeliefConfig {
            budget: 0,
            ..BeliefConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    fn quick() -> BeliefConfig {
        BeliefConfig {
            search: SearchConfig {
                c: 30.0,
                budget: Budget::Fixed(8),
            },
            ..BeliefConfig::default()
        }
    }

    #[test]
    fn decision_is_legal_and_weights_normalized() {
        let net = Network::<f32>::new(NetConfig { depth: 2, width: 16, skip_period: 2, lambda: 0.01 }, 3).unwrap();
        let agent = ScrofaAgent::new("scrofa", &net, quick()).unwrap();
        let mut rng = GameRng::seed_from_u64(4);
        let mut s = GameState::deal(12);
        for _ in 0..13 {
            let view = s.view(s.to_play());
            let d = agent.decide(&view, &mut rng);
            assert!(view.legal_moves().contains(d.choice));
            let total: f64 = d.scenarios.iter().map(|r| r.weight).sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert_eq!(d.q.len(), view.legal_moves().len());
            assert!(d.scenarios.len() <= 9 && !d.scenarios.is_empty());
            let line = d.to_json_line();
            let back: Decision = serde_json::from_str(&line).unwrap();
            assert_eq!(back.choice, d.choice);
            s.play_mut(d.choice).unwrap();
        }
    }

    #[test]
    fn uniform_sampling_uses_budget() {
        let s = GameState::deal(2);
        let view = s.view(s.to_play());
        let cfg = BeliefConfig {
            budget: 5,
            ..BeliefConfig::uniform()
        };
        let d = decide(&view, &ZeroEvaluator, &BeliefConfig { search: quick().search, ..cfg }, &mut GameRng::seed_from_u64(1));
        assert_eq!(d.scenarios.len(), 5);
        assert!(d.strata.is_empty());
        assert!(d.scenarios.iter().all(|r| (r.weight - 0.2).abs() < 1e-12));
    }

    #[test]
    fn stratified_draws_one_per_stratum() {
        let s = (0..)
            .map(GameState::deal)
            .find(|s| {
                let h = s.hand(s.to_play());
                !h.contains(Card::SQ) && !h.contains(Card::C10)
            })
            .unwrap();
        let view = s.view(s.to_play());
        let d = decide(&view, &ZeroEvaluator, &quick(), &mut GameRng::seed_from_u64(1));
        assert_eq!(d.strata.len(), 9);
        assert_eq!(d.scenarios.len(), 9);
        for (j, r) in d.scenarios.iter().enumerate() {
            assert_eq!(r.stratum, Some(j));
            for &(card, seat) in &d.strata[j].assignment {
                assert_eq!(r.scenario.holder(card), Some(seat));
            }
        }
    }

    #[test]
    fn same_seed_same_decision() {
        let s = GameState::deal(21);
        let view = s.view(s.to_play());
        let a = decide(&view, &ZeroEvaluator, &quick(), &mut GameRng::seed_from_u64(8));
        let b = decide(&view, &ZeroEvaluator, &quick(), &mut GameRng::seed_from_u64(8));
        assert_eq!(a, b);
    }

    #[test]
    fn action_values_exact_on_last_trick() {
        let mut s = GameState::deal(30);
        while s.cards_remaining() > 4 {
            let m = s.legal_moves().unwrap().lowest().unwrap();
            s.play_mut(m).unwrap();
        }
        let q = action_values(&s, &ZeroEvaluator, &SearchConfig::default());
        let card = s.legal_moves().unwrap().lowest().unwrap();
        let mut end = s.clone();
        while !end.is_terminal() {
            let m = end.legal_moves().unwrap().lowest().unwrap();
            end.play_mut(m).unwrap();
        }
        let sign = s.to_play().team_sign();
        assert_eq!(q[0], (card, sign * end.team_differential().unwrap() as f64));
    }

    #[test]
    fn raw_net_plays_legal() {
        let net = Network::<f32>::new(NetConfig::small(), 1).unwrap();
        let agent = RawNetAgent { evaluator: &net };
        let mut s = GameState::deal(5);
        let mut rng = GameRng::seed_from_u64(0);
        while !s.is_terminal() {
            let view = s.view(s.to_play());
            let c = agent.choose(&view, &mut rng);
            assert!(view.legal_moves().contains(c));
            s.play_mut(c).unwrap();
        }
    }
}
