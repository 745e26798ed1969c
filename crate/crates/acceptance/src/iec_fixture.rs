//! Scenario scores against an explicitly normalized likelihood.
//!
//! A two-play history (a lead and an off-suit discard) is scored for every
//! placement of three tracked cards among the hidden seats. The
//! unnormalized product of correction factors must order scenarios the
//! same way as the product of `γ / (Y + J/3)`, where `Y` sums the factors of
//! the actor's tracked and played legal cards and `J` sums those of all
//! legal irrelevant cards.
//!
//! The agreement only holds where the irrelevant mass dominates the
//! denominators and tracked logits are well separated; the fixture is built
//! in that regime. With several close tracked cards in one hand the two
//! orderings can differ, since the product only sees the best alternative.

use gongzhu_core::belief::{iec_score, ImportanceRule, Scenario};
use gongzhu_core::engine::{legal_from, History};
use gongzhu_core::nn::{Evaluator, InputVector, PolicyValue, POLICY_DIM};
use gongzhu_core::{Card, CardSet, GameState, Seat, Suit};

pub struct Table([f64; POLICY_DIM]);

impl Evaluator for Table {
    fn evaluate(&self, _: &InputVector) -> PolicyValue {
        PolicyValue {
            logits: self.0,
            value: 0.0,
        }
    }
}

pub const BETA: f64 = 1.0;

fn spade(rank: u8) -> Card {
    Card::new(Suit::Spade, rank)
}

fn diamond(rank: u8) -> Card {
    Card::new(Suit::Diamond, rank)
}

pub struct Fixture {
    table: Table,
    tracked: [Card; 3],
    pool: Vec<Card>,
    observer_hand: CardSet,
}

pub fn fixture() -> Fixture {
    let tracked = [Card::SQ, spade(10), diamond(14)];
    let mut observer_hand: CardSet = (3..=9).map(spade).collect();
    observer_hand.insert(spade(13));
    observer_hand.insert(spade(14));
    for r in 2..=5 {
        observer_hand.insert(Card::new(Suit::Heart, r));
    }
    let fixed: CardSet = [spade(11), diamond(13), spade(2)].into_iter().collect();
    let pool: Vec<Card> = Card::all()
        .filter(|c| !observer_hand.contains(*c) && !fixed.contains(*c) && !tracked.contains(c))
        .collect();
    assert_eq!(pool.len(), 33);
    let mut q = [0.0; POLICY_DIM];
    for (i, c) in pool.iter().enumerate() {
        q[c.index()] = 1.0 + 0.03 * i as f64;
    }
    q[Card::SQ.index()] = 5.0;
    q[diamond(14).index()] = 3.8;
    q[spade(10).index()] = 2.6;
    q[spade(11).index()] = 2.0;
    q[diamond(13).index()] = 2.2;
    Fixture {
        table: Table(q),
        tracked,
        pool,
        observer_hand,
    }
}

/// Initial hands for one placement of the tracked cards. Seat 1 leads SJ,
/// seat 2 discards DK, seat 3 follows with S2 and the observer (seat 0)
/// takes the trick with SA. `None` if the placement makes the discard
/// illegal.
pub fn initial_hands(f: &Fixture, placement: [usize; 3]) -> Option<[CardSet; 4]> {
    let mut hands = [CardSet::EMPTY; 4];
    hands[0] = f.observer_hand;
    hands[1].insert(spade(11));
    hands[2].insert(diamond(13));
    hands[3].insert(spade(2));
    for (card, &k) in f.tracked.iter().zip(&placement) {
        hands[k + 1].insert(*card);
    }
    if hands[2].has_suit(Suit::Spade) {
        return None;
    }
    let mut pool = f.pool.iter();
    for seat in 1..4 {
        while hands[seat].len() < 13 {
            hands[seat].insert(*pool.next().unwrap());
        }
    }
    Some(hands)
}

pub fn play_opening(hands: [CardSet; 4]) -> GameState {
    let mut s = GameState::from_hands(hands, Seat::new(1)).unwrap();
    for c in [spade(11), diamond(13), spade(2), spade(14)] {
        s.play_mut(c).unwrap();
    }
    s
}

/// Explicit normalized product over the important plays.
pub fn normalized(f: &Fixture, initial: &[CardSet; 4], history: &History) -> f64 {
    let q = &f.table.0;
    let tracked: CardSet = f.tracked.into_iter().collect();
    let irrelevant: CardSet = f.pool.iter().copied().collect();
    let mut out = 1.0;
    for t in 0..2 {
        let e = history.events()[t];
        let prefix = &history.events()[..t];
        let mut hand = initial[e.player.index()];
        for p in prefix {
            hand.remove(p.card);
        }
        let legal = legal_from(hand, prefix);
        let q_max = legal.iter().map(|c| q[c.index()]).fold(f64::NEG_INFINITY, f64::max);
        let gamma = |c: Card| (-BETA * (q_max - q[c.index()])).exp();
        let y: f64 = legal
            .iter()
            .filter(|c| tracked.contains(*c) || *c == e.card)
            .map(gamma)
            .sum();
        // every irrelevant card the actor could have held and played here
        let j: f64 = legal_from(irrelevant, prefix).iter().map(gamma).sum();
        out *= gamma(e.card) / (y + j / 3.0);
    }
    out
}

/// One placement of the tracked cards among seats 1..=3.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub placement: [usize; 3],
    pub iec: f64,
    pub normalized: f64,
    pub slices: usize,
}

/// Both scores for every feasible placement.
pub fn rows() -> Vec<Row> {
    let f = fixture();
    let mut rows = Vec::new();
    for code in 0..27 {
        let placement = [code % 3, code / 3 % 3, code / 9];
        let Some(initial) = initial_hands(&f, placement) else {
            continue;
        };
        let state = play_opening(initial);
        let view = state.view(Seat::new(0));
        let scenario = Scenario {
            observer: Seat::new(0),
            hands: *state.hands(),
        };
        let score = iec_score(&view, &scenario, &f.table, BETA, &ImportanceRule::default());
        rows.push(Row {
            placement,
            iec: score.score,
            normalized: normalized(&f, &initial, &view.history),
            slices: score.factors.len(),
        });
    }
    rows
}

/// Every strictly ordered pair under the IEC product must be ordered the
/// same way by the normalized product. Returns the number of feasible
/// placements and distinct score levels.
pub fn check(rows: &[Row]) -> Result<(usize, usize), String> {
    if rows.iter().any(|r| r.slices != 2) {
        return Err("expected exactly two scored slices".into());
    }
    let levels: std::collections::BTreeSet<u64> = rows.iter().map(|r| r.iec.to_bits()).collect();
    for a in rows {
        for b in rows {
            if a.iec > b.iec * (1.0 + 1e-9) && a.normalized <= b.normalized {
                return Err(format!(
                    "{:?} scores {} > {:?} {} but normalized {} <= {}",
                    a.placement, a.iec, b.placement, b.iec, a.normalized, b.normalized
                ));
            }
        }
    }
    Ok((rows.len(), levels.len()))
}
