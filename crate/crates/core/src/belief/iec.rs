//! Scenario plausibility from the plays already made.
//!
//! Each observed play by a hidden seat is checked against what that seat
//! would have preferred holding the hypothesized hand. A play the policy
//! rates `r` below its favourite gets factor `exp(-β·r)`; the scenario score
//! is the product over the important plays, without normalization.

use serde::{Deserialize, Serialize};

use super::sampling::Scenario;
use crate::engine::{legal_from, Card, CardSet, History, PlayerView, Seat, Suit};
use crate::nn::{encode_hypothesis, Evaluator};

/// `exp(-β (q_max - q_a))` with `q` the policy logits of `seat` holding
/// `hand` after `prefix`, maximized over the legal moves of that hand.
pub fn correction_factor(
    action: Card,
    prefix: &History,
    seat: Seat,
    hand: CardSet,
    evaluator: &dyn Evaluator,
    beta: f64,
) -> f64 {
    let legal = legal_from(hand, prefix.current_trick());
    debug_assert!(legal.contains(action), "{action} not legal for the hypothesized hand");
    if legal.len() <= 1 {
        return 1.0;
    }
    let out = evaluator.evaluate(&encode_hypothesis(seat, hand, prefix));
    let q_max = legal
        .iter()
        .map(|c| out.logits[c.index()])
        .fold(f64::NEG_INFINITY, f64::max);
    (-beta * (q_max - out.logits[action.index()])).exp()
}

/// Which past plays count towards a scenario's score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportanceRule {
    /// Plays of this rank or lower are ignored.
    pub rank_threshold: u8,
    /// Ignore suit-following plays in tricks led in another suit than the
    /// one being decided.
    pub skip_other_suit_follows: bool,
}

impl Default for ImportanceRule {
    fn default() -> Self {
        ImportanceRule {
            rank_threshold: 7,
            skip_other_suit_follows: true,
        }
    }
}

impl ImportanceRule {
    /// `context` is the suit led in the observer's current trick, `None`
    /// when the observer is leading.
    pub fn is_important(&self, history: &History, t: usize, context: Option<Suit>) -> bool {
        let e = history.events()[t];
        if e.card.rank() <= self.rank_threshold {
            return false;
        }
        if let (true, Some(x)) = (self.skip_other_suit_follows, context) {
            let lead = history.events()[t / 4 * 4];
            let led = lead.card.suit();
            let follows = !t.is_multiple_of(4) && e.card.suit() == led;
            if follows && led != x {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceFactor {
    /// Index of the play in the history.
    pub t: usize,
    pub seat: Seat,
    pub card: Card,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScore {
    pub score: f64,
    pub factors: Vec<SliceFactor>,
}

/// Product of correction factors over the important plays by seats other
/// than the observer, newest first.
pub fn iec_score(
    view: &PlayerView,
    scenario: &Scenario,
    evaluator: &dyn Evaluator,
    beta: f64,
    rule: &ImportanceRule,
) -> ScenarioScore {
    let history = &view.history;
    let events = history.events();
    let context = view.led_suit();
    let mut held = scenario.hands;
    let mut score = 1.0;
    let mut factors = Vec::new();
    for t in (0..events.len()).rev() {
        let e = events[t];
        held[e.player.index()].insert(e.card);
        if e.player == view.seat || !rule.is_important(history, t, context) {
            continue;
        }
        let gamma = correction_factor(
            e.card,
            &history.prefix(t),
            e.player,
            held[e.player.index()],
            evaluator,
            beta,
        );
        score *= gamma;
        factors.push(SliceFactor {
            t,
            seat: e.player,
            card: e.card,
            gamma,
        });
    }
    ScenarioScore { score, factors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{GameState, PlayEvent};
    use crate::nn::{InputVector, PolicyValue, ZeroEvaluator, POLICY_DIM};

    /// Logits fixed per card, whatever the input.
    struct Table([f64; POLICY_DIM]);

    impl Evaluator for Table {
        fn evaluate(&self, _: &InputVector) -> PolicyValue {
            PolicyValue {
                logits: self.0,
                value: 0.0,
            }
        }
    }

    fn ranked_table() -> Table {
        let mut q = [0.0; POLICY_DIM];
        for c in Card::all() {
            q[c.index()] = c.rank() as f64;
        }
        Table(q)
    }

    #[test]
    fn top_choice_has_factor_one() {
        let hand: CardSet = [Card::new(Suit::Club, 5), Card::new(Suit::Club, 9)].into_iter().collect();
        let h = History::new();
        let g = correction_factor(Card::new(Suit::Club, 9), &h, Seat::new(0), hand, &ranked_table(), 0.5);
        assert_eq!(g, 1.0);
    }

    #[test]
    fn regret_closed_form() {
        let mut q = [0.0; POLICY_DIM];
        let (a, b) = (Card::new(Suit::Diamond, 4), Card::new(Suit::Diamond, 12));
        q[b.index()] = 100.0;
        let hand: CardSet = [a, b].into_iter().collect();
        let g = correction_factor(a, &History::new(), Seat::new(0), hand, &Table(q), 0.015);
        assert!((g - (-1.5f64).exp()).abs() < 1e-12);
        assert!((g - 0.2231).abs() < 1e-4);
        let flat = correction_factor(a, &History::new(), Seat::new(0), hand, &Table(q), 1e-12);
        assert!((flat - 1.0).abs() < 1e-9);
    }

    #[test]
    fn illegal_cards_do_not_set_the_max() {
        // following diamonds: the high club cannot be played, so it is no regret
        let mut q = [0.0; POLICY_DIM];
        let c_high = Card::new(Suit::Club, 14);
        q[c_high.index()] = 50.0;
        let d = Card::new(Suit::Diamond, 3);
        let d2 = Card::new(Suit::Diamond, 6);
        q[d2.index()] = 1.0;
        let mut h = History::new();
        h.push(PlayEvent::new(Seat::new(0), Card::new(Suit::Diamond, 9)));
        let hand: CardSet = [c_high, d, d2].into_iter().collect();
        let g = correction_factor(d, &h, Seat::new(1), hand, &Table(q), 1.0);
        assert!((g - (-1.0f64).exp()).abs() < 1e-12);
    }

    fn played_state(seed: u64, plays: usize) -> GameState {
        let mut s = GameState::deal(seed);
        for _ in 0..plays {
            let m = s.legal_moves().unwrap().highest().unwrap();
            s.play_mut(m).unwrap();
        }
        s
    }

    #[test]
    fn no_important_slices_scores_one() {
        let s = GameState::deal(3);
        let view = s.view(s.to_play());
        let sc = Scenario {
            observer: view.seat,
            hands: *s.hands(),
        };
        let r = iec_score(&view, &sc, &ranked_table(), 1.0, &ImportanceRule::default());
        assert_eq!(r.score, 1.0);
        assert!(r.factors.is_empty());
    }

    #[test]
    fn score_is_product_of_factors() {
        let s = played_state(5, 22);
        let view = s.view(s.to_play());
        let sc = Scenario {
            observer: view.seat,
            hands: *s.hands(),
        };
        let r = iec_score(&view, &sc, &ranked_table(), 0.3, &ImportanceRule::default());
        let prod: f64 = r.factors.iter().map(|f| f.gamma).product();
        assert!((r.score - prod).abs() < 1e-12);
        assert!(r.score > 0.0 && r.score <= 1.0);
        for f in &r.factors {
            assert_ne!(f.seat, view.seat);
            assert!(f.card.rank() > 7);
        }
        let ts: Vec<usize> = r.factors.iter().map(|f| f.t).collect();
        let mut sorted = ts.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(ts, sorted);
    }

    #[test]
    fn uniform_logits_score_one() {
        let s = played_state(8, 30);
        let view = s.view(s.to_play());
        let sc = Scenario {
            observer: view.seat,
            hands: *s.hands(),
        };
        let r = iec_score(&view, &sc, &ZeroEvaluator, 1.0, &ImportanceRule::default());
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn follows_in_other_suits_skipped_when_following() {
        let s = played_state(9, 25);
        let view = s.view(s.to_play());
        let context = view.led_suit().unwrap();
        let rule = ImportanceRule::default();
        for t in 0..view.history.len() {
            let e = view.history.events()[t];
            let led = view.history.events()[t / 4 * 4].card.suit();
            let important = rule.is_important(&view.history, t, Some(context));
            let expected = e.card.rank() > 7 && !(t % 4 != 0 && e.card.suit() == led && led != context);
            assert_eq!(important, expected, "t = {t}");
            // with the observer leading only the rank matters
            assert_eq!(rule.is_important(&view.history, t, None), e.card.rank() > 7);
        }
    }
}
