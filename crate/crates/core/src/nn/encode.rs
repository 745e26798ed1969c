//! Network input layout.
//!
//! | range     | content                                                    |
//! |-----------|------------------------------------------------------------|
//! | 0..208    | four 52-wide hand blocks: self, next, partner, previous    |
//! | 208..370  | three 54-wide blocks, one per card already in the trick    |
//! | 370..434  | four 16-wide blocks of captured point cards, same seat order |
//!
//! A trick card with index `k` sets slots `k`, `k+1` and `k+2` of its block so
//! that neighbouring ranks share input units. In averaged mode every card the
//! actor cannot see contributes 1/3 to each of the three other hand blocks.

use serde::{Deserialize, Serialize};

use crate::engine::{Card, CardSet, GameState, History, PlayEvent, PlayerView, Seat};

pub const INPUT_DIM: usize = 434;
pub const HANDS_OFFSET: usize = 0;
pub const TRICK_OFFSET: usize = 208;
pub const POINTS_OFFSET: usize = 370;
const TRICK_WIDTH: usize = 54;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodeMode {
    /// All four hands visible.
    Exact,
    /// Other hands replaced by a uniform 1/3 over the unseen cards.
    Averaged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputVector {
    values: Vec<f32>,
}

impl InputVector {
    pub fn zeros() -> InputVector {
        InputVector {
            values: vec![0.0; INPUT_DIM],
        }
    }

    /// Wrap raw values. Panics unless there are exactly [`INPUT_DIM`].
    pub fn from_values(values: Vec<f32>) -> InputVector {
        assert_eq!(values.len(), INPUT_DIM, "input must have {INPUT_DIM} entries");
        InputVector { values }
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn set(&mut self, i: usize, v: f32) {
        self.values[i] = v;
    }

    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, f32)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
    }

    /// Cards set to one in the hand block of relative seat `r`.
    pub fn decode_hand(&self, r: usize) -> CardSet {
        let block = &self.values[HANDS_OFFSET + 52 * r..HANDS_OFFSET + 52 * (r + 1)];
        block
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == 1.0)
            .map(|(i, _)| Card::from_index(i))
            .collect()
    }
}

/// Position of a point card in a 16-wide captured block.
pub fn point_slot(card: Card) -> Option<usize> {
    card.is_point_card()
        .then(|| CardSet::point_cards().iter().position(|c| c == card).unwrap())
}

/// Encoding from raw parts. `others` is `Some(hands)` for exact mode, `None`
/// to spread `unseen` over the three other seats.
fn encode_parts(
    actor: Seat,
    own: CardSet,
    others: Option<&[CardSet; 4]>,
    unseen: CardSet,
    trick: &[PlayEvent],
    piles: &[CardSet; 4],
) -> InputVector {
    let mut x = InputVector::zeros();
    for c in own {
        x.values[HANDS_OFFSET + c.index()] = 1.0;
    }
    match others {
        Some(hands) => {
            for r in 1..4 {
                for c in hands[actor.offset(r).index()] {
                    x.values[HANDS_OFFSET + 52 * r + c.index()] = 1.0;
                }
            }
        }
        None => {
            for c in unseen {
                for r in 1..4 {
                    x.values[HANDS_OFFSET + 52 * r + c.index()] = 1.0 / 3.0;
                }
            }
        }
    }
    for (p, e) in trick.iter().enumerate() {
        let base = TRICK_OFFSET + TRICK_WIDTH * p + e.card.index();
        x.values[base..base + 3].fill(1.0);
    }
    for r in 0..4 {
        for c in piles[actor.offset(r).index()] {
            let slot = point_slot(c).expect("piles hold point cards only");
            x.values[POINTS_OFFSET + 16 * r + slot] = 1.0;
        }
    }
    x
}

/// Encode `seat`'s decision in a full state.
pub fn encode_state(state: &GameState, seat: Seat, mode: EncodeMode) -> InputVector {
    match mode {
        EncodeMode::Exact => encode_parts(
            seat,
            state.hand(seat),
            Some(state.hands()),
            CardSet::EMPTY,
            state.current_trick(),
            state.piles(),
        ),
        EncodeMode::Averaged => encode_view(&state.view(seat)),
    }
}

/// Averaged encoding of what one seat can see.
pub fn encode_view(view: &PlayerView) -> InputVector {
    encode_parts(
        view.seat,
        view.hand,
        None,
        view.unseen(),
        view.current_trick(),
        &view.piles,
    )
}

/// Averaged encoding of `seat` holding `hand` after the plays in `history`.
/// Used to score what a hypothesized hand would have done at an earlier time.
pub fn encode_hypothesis(seat: Seat, hand: CardSet, history: &History) -> InputVector {
    let unseen = CardSet::FULL
        .difference(history.played_cards())
        .difference(hand);
    encode_parts(
        seat,
        hand,
        None,
        unseen,
        history.current_trick(),
        &history.piles(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_adds_up() {
        assert_eq!(52 * 4 + 54 * 3 + 16 * 4, INPUT_DIM);
        assert_eq!(TRICK_OFFSET, 208);
        assert_eq!(POINTS_OFFSET, TRICK_OFFSET + 3 * TRICK_WIDTH);
        assert_eq!(CardSet::point_cards().len(), 16);
    }

    #[test]
    fn fresh_deal_has_52_ones() {
        let s = GameState::deal(1);
        let x = encode_state(&s, s.to_play(), EncodeMode::Exact);
        assert_eq!(x.as_slice().len(), INPUT_DIM);
        assert_eq!(x.nonzeros().count(), 52);
        assert!(x.nonzeros().all(|(i, v)| v == 1.0 && i < 208));
    }

    #[test]
    fn hands_decode_back() {
        let s = GameState::deal(2);
        let seat = Seat::new(1);
        let x = encode_state(&s, seat, EncodeMode::Exact);
        for r in 0..4 {
            assert_eq!(x.decode_hand(r), s.hand(seat.offset(r)));
        }
    }

    #[test]
    fn first_card_diffuses_into_slots_0_1_2() {
        let s = GameState::deal(3);
        let leader = s.to_play();
        let mut s2 = s.clone();
        let lead = s.hand(leader).lowest().unwrap();
        s2.play_mut(lead).unwrap();
        let x = encode_state(&s2, s2.to_play(), EncodeMode::Exact);
        let block = &x.as_slice()[TRICK_OFFSET..TRICK_OFFSET + TRICK_WIDTH];
        let k = lead.index();
        let on: Vec<usize> = (0..TRICK_WIDTH).filter(|&i| block[i] == 1.0).collect();
        assert_eq!(on, vec![k, k + 1, k + 2]);
    }

    #[test]
    fn card_zero_in_trick_sets_block_start() {
        let mut hands = [CardSet::EMPTY; 4];
        for c in Card::all() {
            hands[c.index() % 4].insert(c);
        }
        let mut s = GameState::from_hands(hands, Seat::new(0)).unwrap();
        s.play_mut(Card::from_index(0)).unwrap();
        let x = encode_state(&s, Seat::new(1), EncodeMode::Exact);
        assert_eq!(&x.as_slice()[TRICK_OFFSET..TRICK_OFFSET + 4], &[1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn averaged_hidden_columns_sum_to_one() {
        let s = GameState::deal(4);
        let seat = s.to_play();
        let x = encode_state(&s, seat, EncodeMode::Averaged);
        let v = x.as_slice();
        for c in Card::all() {
            let col: f32 = (1..4).map(|r| v[52 * r + c.index()]).sum();
            if s.hand(seat).contains(c) {
                assert_eq!(col, 0.0);
                assert_eq!(v[c.index()], 1.0);
            } else {
                assert!((col - 1.0).abs() < 1e-6);
                for r in 1..4 {
                    assert_eq!(v[52 * r + c.index()], 1.0 / 3.0);
                }
            }
        }
    }

    #[test]
    fn captured_points_by_relative_seat() {
        let mut s = GameState::deal(5);
        while s.piles().iter().all(|p| p.is_empty()) {
            let m = s.legal_moves().unwrap().lowest().unwrap();
            s.play_mut(m).unwrap();
        }
        let seat = Seat::new(2);
        let x = encode_state(&s, seat, EncodeMode::Exact);
        for r in 0..4 {
            for c in s.piles()[seat.offset(r).index()] {
                let i = POINTS_OFFSET + 16 * r + point_slot(c).unwrap();
                assert_eq!(x.as_slice()[i], 1.0);
            }
        }
        let total: usize = s.piles().iter().map(|p| p.len()).sum();
        let block = &x.as_slice()[POINTS_OFFSET..];
        assert_eq!(block.iter().filter(|v| **v == 1.0).count(), total);
    }

    #[test]
    fn hypothesis_matches_view_for_true_hand() {
        let mut s = GameState::deal(6);
        for _ in 0..17 {
            let m = s.legal_moves().unwrap().highest().unwrap();
            s.play_mut(m).unwrap();
        }
        let seat = s.to_play();
        let a = encode_view(&s.view(seat));
        let b = encode_hypothesis(seat, s.hand(seat), s.history());
        assert_eq!(a, b);
    }
}
