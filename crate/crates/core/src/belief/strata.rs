//! Stratification of the hidden-hand space by the location of key cards.

use serde::{Deserialize, Serialize};

use super::sampling::{HiddenDeal, VoidConstraints};
use crate::engine::{Card, PlayerView, Seat};

/// Cards whose location moves values the most, in priority order.
pub const DEFAULT_KEY_CARDS: [Card; 5] = [Card::SQ, Card::C10, Card::HA, Card::DJ, Card::HK];

/// How many unseen key cards define the strata.
pub const KEY_CARDS_USED: usize = 2;

/// All scenarios that put each listed key card with the listed opponent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub assignment: Vec<(Card, Seat)>,
}

impl Stratum {
    /// Sampling problem restricted to this stratum.
    pub fn deal(&self, view: &PlayerView, vc: &VoidConstraints) -> Option<HiddenDeal> {
        let mut deal = HiddenDeal::new(view, vc);
        for &(card, seat) in &self.assignment {
            deal.pin(card, seat).ok()?;
        }
        deal.is_feasible().then_some(deal)
    }
}

/// The first [`KEY_CARDS_USED`] entries of `key_cards` that `view` has not
/// seen yet.
pub fn active_key_cards(view: &PlayerView, key_cards: &[Card]) -> Vec<Card> {
    let unseen = view.unseen();
    key_cards
        .iter()
        .copied()
        .filter(|c| unseen.contains(*c))
        .take(KEY_CARDS_USED)
        .collect()
}

/// One stratum per feasible placement of the active key cards among the
/// three opponents. With no active key card the whole space is one stratum.
pub fn make_strata(view: &PlayerView, vc: &VoidConstraints, key_cards: &[Card]) -> Vec<(Stratum, HiddenDeal)> {
    let keys = active_key_cards(view, key_cards);
    let opponents: Vec<Seat> = (1..4).map(|k| view.seat.offset(k)).collect();
    let mut out = Vec::new();
    let total = 3usize.pow(keys.len() as u32);
    for code in 0..total {
        let mut rest = code;
        let assignment: Vec<(Card, Seat)> = keys
            .iter()
            .map(|&c| {
                let seat = opponents[rest % 3];
                rest /= 3;
                (c, seat)
            })
            .collect();
        let stratum = Stratum { assignment };
        if let Some(deal) = stratum.deal(view, vc) {
            out.push((stratum, deal));
        }
    }
    out
}

/// Split `budget` draws over `strata` as evenly as possible, earlier strata
/// taking the remainder.
pub fn allocate(budget: usize, strata: usize) -> Vec<usize> {
    (0..strata)
        .map(|j| budget / strata + usize::from(j < budget % strata))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::void_constraints;
    use crate::engine::{CardSet, GameState};

    fn strata_of(view: &PlayerView) -> Vec<Stratum> {
        let vc = void_constraints(&view.history, view.seat);
        make_strata(view, &vc, &DEFAULT_KEY_CARDS)
            .into_iter()
            .map(|(s, _)| s)
            .collect()
    }

    fn seat_without(cards: &[Card]) -> (GameState, Seat) {
        (0..)
            .map(GameState::deal)
            .find_map(|s| {
                Seat::ALL
                    .into_iter()
                    .find(|seat| cards.iter().all(|c| !s.hand(*seat).contains(*c)))
                    .map(|seat| (s.clone(), seat))
            })
            .unwrap()
    }

    #[test]
    fn two_free_key_cards_give_nine() {
        let (s, seat) = seat_without(&[Card::SQ, Card::C10]);
        let strata = strata_of(&s.view(seat));
        assert_eq!(strata.len(), 9);
        for st in &strata {
            assert_eq!(
                st.assignment.iter().map(|a| a.0).collect::<Vec<_>>(),
                vec![Card::SQ, Card::C10]
            );
            assert!(st.assignment.iter().all(|a| a.1 != seat));
        }
    }

    #[test]
    fn played_key_card_is_skipped() {
        let mut s = GameState::deal(11);
        // play until SQ is out, with C10 still hidden from the next mover
        loop {
            let legal = s.legal_moves().unwrap();
            let m = if legal.contains(Card::SQ) { Card::SQ } else { legal.lowest().unwrap() };
            s.play_mut(m).unwrap();
            if s.history().played_cards().contains(Card::SQ) {
                break;
            }
        }
        let seat = s.to_play();
        let view = s.view(seat);
        let keys = active_key_cards(&view, &DEFAULT_KEY_CARDS);
        assert!(!keys.contains(&Card::SQ));
        assert_eq!(keys.len(), 2);
        let mut only_c10 = view.clone();
        // hold every later key card so that only C10 stays free
        for c in [Card::HA, Card::DJ, Card::HK] {
            if view.unseen().contains(c) {
                only_c10.hand.insert(c);
            }
        }
        if only_c10.unseen().contains(Card::C10) {
            assert_eq!(active_key_cards(&only_c10, &DEFAULT_KEY_CARDS), vec![Card::C10]);
        }
    }

    #[test]
    fn single_free_key_card_gives_three() {
        let mut hands = [CardSet::EMPTY; 4];
        for c in Card::all() {
            hands[c.index() % 4].insert(c);
        }
        let s = GameState::from_hands(hands, Seat::new(0)).unwrap();
        let view = s.view(Seat::new(0));
        let keys: Vec<Card> = DEFAULT_KEY_CARDS
            .iter()
            .copied()
            .filter(|c| view.unseen().contains(*c))
            .collect();
        let strata = strata_of(&view);
        assert_eq!(strata.len(), 3usize.pow(keys.len().min(2) as u32));
        let one = make_strata(&view, &VoidConstraints::default(), &keys[..1]);
        assert_eq!(one.len(), 3);
    }

    #[test]
    fn all_key_cards_held_gives_whole_space() {
        let mut hands = [CardSet::EMPTY; 4];
        for c in DEFAULT_KEY_CARDS {
            hands[0].insert(c);
        }
        let mut rest = CardSet::FULL.difference(hands[0]).iter();
        for _ in 0..8 {
            hands[0].insert(rest.next().unwrap());
        }
        for seat in 1..4 {
            for _ in 0..13 {
                hands[seat].insert(rest.next().unwrap());
            }
        }
        let s = GameState::from_hands(hands, Seat::new(0)).unwrap();
        let strata = strata_of(&s.view(Seat::new(0)));
        assert_eq!(strata.len(), 1);
        assert!(strata[0].assignment.is_empty());
    }

    #[test]
    fn void_seat_strata_dropped() {
        let (s, seat) = seat_without(&[Card::SQ, Card::C10]);
        let view = s.view(seat);
        let mut vc = VoidConstraints::default();
        vc.set_void(seat.next(), crate::engine::Suit::Spade);
        let strata = make_strata(&view, &vc, &DEFAULT_KEY_CARDS);
        assert_eq!(strata.len(), 6);
        assert!(strata.iter().all(|(st, _)| st.assignment[0].1 != seat.next()));
    }

    #[test]
    fn allocation_spreads_budget() {
        assert_eq!(allocate(9, 9), vec![1; 9]);
        assert_eq!(allocate(9, 3), vec![3, 3, 3]);
        assert_eq!(allocate(10, 3), vec![4, 3, 3]);
        assert_eq!(allocate(4, 9).iter().sum::<usize>(), 4);
    }
}
