//! Void constraints and exact uniform sampling of hidden hands.
//!
//! Follow-suit is the only rule that leaks information about hidden cards, and
//! it does so per suit: a seat that discarded off-suit on a lead of suit X
//! holds no X from then on. Because constraints are per (seat, suit), the
//! number of compatible assignments factorizes over suits and can be counted
//! with a small DP over remaining capacities. Sampling suit splits in
//! proportion to those counts gives exactly uniform scenarios without
//! rejection.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Card, CardSet, GameState, History, PlayerView, Seat, Suit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no hidden-hand assignment satisfies the constraints")]
pub struct Infeasible;

/// Per seat, the suits that seat is known to be out of.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoidConstraints {
    void: [[bool; 4]; 4],
}

impl VoidConstraints {
    pub fn is_void(&self, seat: Seat, suit: Suit) -> bool {
        self.void[seat.index()][suit.index()]
    }

    pub fn set_void(&mut self, seat: Seat, suit: Suit) {
        self.void[seat.index()][suit.index()] = true;
    }

    pub fn voids_of(&self, seat: Seat) -> Vec<Suit> {
        Suit::ALL
            .into_iter()
            .filter(|s| self.is_void(seat, *s))
            .collect()
    }

    pub fn allows(&self, seat: Seat, card: Card) -> bool {
        !self.is_void(seat, card.suit())
    }
}

/// Suits each opponent of `observer` has shown out of. The observer's own row
/// is left empty since its hand is known.
pub fn void_constraints(history: &History, observer: Seat) -> VoidConstraints {
    let mut vc = VoidConstraints::default();
    for trick in history.events().chunks(4) {
        let led = trick[0].card.suit();
        for e in &trick[1..] {
            if e.player != observer && e.card.suit() != led {
                vc.set_void(e.player, led);
            }
        }
    }
    vc
}

/// One hypothesis for every seat's current holdings. The observer's hand is
/// the real one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub observer: Seat,
    pub hands: [CardSet; 4],
}

impl Scenario {
    pub fn hand(&self, seat: Seat) -> CardSet {
        self.hands[seat.index()]
    }

    /// Seat holding `card` in this scenario, if it is still in someone's hand.
    pub fn holder(&self, card: Card) -> Option<Seat> {
        Seat::ALL.into_iter().find(|s| self.hand(*s).contains(card))
    }

    /// Initial hands implied by this scenario and the public history.
    pub fn initial_hands(&self, history: &History) -> [CardSet; 4] {
        let mut h = self.hands;
        for e in history.events() {
            h[e.player.index()].insert(e.card);
        }
        h
    }

    /// Full-information state for search.
    pub fn to_state(&self, view: &PlayerView) -> GameState {
        GameState::from_current_hands(self.hands, &view.history, view.first_leader)
            .expect("scenario is compatible with history")
    }

    /// True if capacities and voids hold against `view`.
    pub fn is_compatible(&self, view: &PlayerView, vc: &VoidConstraints) -> bool {
        let sizes = view.hand_sizes();
        let mut all = CardSet::EMPTY;
        for seat in Seat::ALL {
            let h = self.hand(seat);
            if h.len() != sizes[seat.index()] || !all.is_disjoint(h) {
                return false;
            }
            all = all.union(h);
            if seat != view.seat && h.iter().any(|c| !vc.allows(seat, c)) {
                return false;
            }
        }
        self.hand(view.seat) == view.hand && all == view.unseen().union(view.hand)
    }
}

/// Counting/sampling problem for the cards hidden from one observer.
#[derive(Clone, Debug)]
pub struct HiddenDeal {
    observer: Seat,
    base: [CardSet; 4],
    free: CardSet,
    capacity: [usize; 3],
    allowed: [[bool; 3]; 4],
}

const MAX_CAP: usize = 14;

impl HiddenDeal {
    pub fn new(view: &PlayerView, vc: &VoidConstraints) -> HiddenDeal {
        let sizes = view.hand_sizes();
        let mut base = [CardSet::EMPTY; 4];
        base[view.seat.index()] = view.hand;
        let mut capacity = [0; 3];
        let mut allowed = [[true; 3]; 4];
        for k in 0..3 {
            let seat = view.seat.offset(k + 1);
            capacity[k] = sizes[seat.index()];
            for suit in Suit::ALL {
                allowed[suit.index()][k] = !vc.is_void(seat, suit);
            }
        }
        HiddenDeal {
            observer: view.seat,
            base,
            free: view.unseen(),
            capacity,
            allowed,
        }
    }

    fn slot(&self, seat: Seat) -> usize {
        assert_ne!(seat, self.observer, "observer's hand is fixed");
        (seat.index() + 4 - self.observer.index()) % 4 - 1
    }

    /// Pin `card` to `seat`. Fails if the seat is void in that suit or full.
    pub fn pin(&mut self, card: Card, seat: Seat) -> Result<(), Infeasible> {
        let k = self.slot(seat);
        if !self.free.contains(card) || !self.allowed[card.suit().index()][k] || self.capacity[k] == 0
        {
            return Err(Infeasible);
        }
        self.free.remove(card);
        self.capacity[k] -= 1;
        self.base[seat.index()].insert(card);
        Ok(())
    }

    pub fn free_cards(&self) -> CardSet {
        self.free
    }

    /// Table of completion counts: `table[s][c0][c1]` = number of ways to
    /// place suits `s..4` given remaining capacities `c0`, `c1` (the third
    /// capacity is implied).
    fn completion_table(&self) -> Vec<[[f64; MAX_CAP]; MAX_CAP]> {
        let mut table = vec![[[0.0; MAX_CAP]; MAX_CAP]; 5];
        table[4][0][0] = 1.0;
        let mut remaining = 0;
        for s in (0..4).rev() {
            let k = self.free.of_suit(Suit::from_index(s)).len();
            remaining += k;
            for c0 in 0..=self.capacity[0] {
                for c1 in 0..=self.capacity[1] {
                    if c0 + c1 > remaining {
                        continue;
                    }
                    let c2 = remaining - c0 - c1;
                    if c2 >= MAX_CAP {
                        continue;
                    }
                    let mut total = 0.0;
                    for_each_split(k, [c0, c1, c2], self.allowed[s], |x, ways| {
                        total += ways * table[s + 1][c0 - x[0]][c1 - x[1]];
                    });
                    table[s][c0][c1] = total;
                }
            }
        }
        table
    }

    /// Number of compatible assignments.
    pub fn count(&self) -> f64 {
        let [c0, c1, c2] = self.capacity;
        if c0 + c1 + c2 != self.free.len() {
            return 0.0;
        }
        self.completion_table()[0][c0][c1]
    }

    pub fn is_feasible(&self) -> bool {
        self.count() > 0.0
    }

    /// Draw one assignment uniformly among all compatible ones.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Scenario, Infeasible> {
        let mut out = self.sample_n(1, rng)?;
        Ok(out.pop().expect("one sample"))
    }

    /// `n` independent uniform draws, sharing one counting table.
    pub fn sample_n<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Scenario>, Infeasible> {
        let [c0, c1, c2] = self.capacity;
        if c0 + c1 + c2 != self.free.len() {
            return Err(Infeasible);
        }
        let table = self.completion_table();
        if table[0][c0][c1] <= 0.0 {
            return Err(Infeasible);
        }
        Ok((0..n).map(|_| self.draw(&table, rng)).collect())
    }

    fn draw<R: Rng + ?Sized>(&self, table: &[[[f64; MAX_CAP]; MAX_CAP]], rng: &mut R) -> Scenario {
        let mut hands = self.base;
        let mut cap = self.capacity;
        let mut options: Vec<([usize; 3], f64)> = Vec::new();
        for s in 0..4 {
            let suit = Suit::from_index(s);
            let cards = self.free.of_suit(suit);
            let k = cards.len();
            options.clear();
            for_each_split(k, cap, self.allowed[s], |x, ways| {
                let w = ways * table[s + 1][cap[0] - x[0]][cap[1] - x[1]];
                if w > 0.0 {
                    options.push((x, w));
                }
            });
            let total: f64 = options.iter().map(|o| o.1).sum();
            let mut pick = rng.gen::<f64>() * total;
            let mut chosen = options[options.len() - 1].0;
            for (x, w) in &options {
                if pick < *w {
                    chosen = *x;
                    break;
                }
                pick -= w;
            }
            let mut order = cards.to_vec();
            order.shuffle(rng);
            let mut it = order.into_iter();
            for (k, &n) in chosen.iter().enumerate() {
                let seat = self.observer.offset(k + 1);
                for c in it.by_ref().take(n) {
                    hands[seat.index()].insert(c);
                }
                cap[k] -= n;
            }
        }
        Scenario {
            observer: self.observer,
            hands,
        }
    }
}

fn multinomial(k: usize, x: [usize; 3]) -> f64 {
    // k! / (x0! x1! x2!) computed as a product of binomials
    binomial(k, x[0]) * binomial(k - x[0], x[1])
}

fn binomial(n: usize, r: usize) -> f64 {
    let r = r.min(n - r);
    let mut acc = 1.0;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

fn for_each_split(
    k: usize,
    cap: [usize; 3],
    allowed: [bool; 3],
    mut f: impl FnMut([usize; 3], f64),
) {
    let lim = |i: usize| if allowed[i] { cap[i].min(k) } else { 0 };
    for x0 in 0..=lim(0) {
        for x1 in 0..=lim(1).min(k - x0) {
            let x2 = k - x0 - x1;
            if x2 > lim(2) {
                continue;
            }
            let x = [x0, x1, x2];
            f(x, multinomial(k, x));
        }
    }
}

/// Uniform draw among scenarios compatible with the observer's history.
pub fn sample_scenario<R: Rng + ?Sized>(
    view: &PlayerView,
    constraints: &VoidConstraints,
    rng: &mut R,
) -> Result<Scenario, Infeasible> {
    HiddenDeal::new(view, constraints).sample(rng)
}
