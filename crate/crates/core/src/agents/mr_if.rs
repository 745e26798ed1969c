//! A short cascade of card-play rules of thumb.
//!
//! Leading: lead the lowest card of the longest safe suit. Hearts are never
//! safe; spades are unsafe while holding SQ.
//!
//! Void in the led suit, in order: dump SQ; dump the highest heart; dump SA
//! or SK while SQ is still out; otherwise dump the highest card that is not
//! DJ (giving DJ to a winning partner first).
//!
//! Following suit:
//! - a spade trick already topped by SA or SK takes our SQ;
//! - a trick holding SQ is ducked with the highest card below the current
//!   winner, or taken with the highest card when forced;
//! - any other poisoned trick (negative hearts in it) is underplayed the same
//!   way, which covers the third seat ducking under a poisoned trick;
//! - last seat on a clean trick takes it with the highest card (never SQ),
//!   or plays the highest card if it cannot win;
//! - otherwise duck under the winner with the highest such card, else play
//!   the lowest card.

use super::{Agent, GameRng};
use crate::engine::{Card, CardSet, PlayEvent, PlayerView, Suit};

#[derive(Clone, Copy, Debug, Default)]
pub struct MrIf;

fn current_winner(trick: &[PlayEvent]) -> PlayEvent {
    let led = trick[0].card.suit();
    *trick
        .iter()
        .filter(|e| e.card.suit() == led)
        .max_by_key(|e| e.card.rank())
        .unwrap()
}

fn poisoned(trick: &[PlayEvent]) -> bool {
    trick
        .iter()
        .any(|e| e.card == Card::SQ || e.card.heart_points() < 0)
}

/// Highest card strictly below `rank`.
fn highest_below(cards: CardSet, rank: u8) -> Option<Card> {
    cards.iter().rev().find(|c| c.rank() < rank)
}

impl MrIf {
    fn lead(&self, view: &PlayerView) -> Card {
        let hand = view.hand;
        let safe = |suit: Suit| match suit {
            Suit::Heart => false,
            Suit::Spade => !hand.contains(Card::SQ),
            _ => true,
        };
        let best_suit = Suit::ALL
            .into_iter()
            .filter(|&s| safe(s) && hand.has_suit(s))
            .max_by_key(|&s| (hand.of_suit(s).len(), std::cmp::Reverse(s.index())));
        match best_suit {
            Some(s) => hand.of_suit(s).lowest().unwrap(),
            None => lowest_rank(hand),
        }
    }

    fn discard(&self, view: &PlayerView) -> Card {
        let hand = view.hand;
        let trick = view.current_trick();
        let played = view.history.played_cards();
        let partner_winning = current_winner(trick).player == view.seat.partner();
        if hand.contains(Card::SQ) {
            return Card::SQ;
        }
        if partner_winning && hand.contains(Card::DJ) {
            return Card::DJ;
        }
        if let Some(h) = hand.of_suit(Suit::Heart).highest() {
            return h;
        }
        if !played.contains(Card::SQ) {
            let high_spades = hand
                .of_suit(Suit::Spade)
                .iter()
                .rev()
                .find(|c| c.rank() > 12);
            if let Some(c) = high_spades {
                return c;
            }
        }
        let pool = hand.without(Card::DJ);
        if pool.is_empty() {
            return Card::DJ;
        }
        highest_rank(pool)
    }

    fn follow(&self, view: &PlayerView, follow: CardSet) -> Card {
        let trick = view.current_trick();
        let win = current_winner(trick);
        let duck_or_top = || {
            highest_below(follow, win.card.rank()).unwrap_or_else(|| follow.highest().unwrap())
        };

        if trick[0].card.suit() == Suit::Spade
            && follow.contains(Card::SQ)
            && win.card.rank() > 12
        {
            return Card::SQ;
        }
        if poisoned(trick) {
            return duck_or_top();
        }
        if trick.len() == 3 {
            let safe = follow.without(Card::SQ);
            let top = safe.highest().unwrap_or(Card::SQ);
            if top.rank() > win.card.rank() {
                return top;
            }
            return highest_below(follow.without(Card::SQ), win.card.rank())
                .unwrap_or_else(|| follow.lowest().unwrap());
        }
        highest_below(follow.without(Card::SQ), win.card.rank())
            .unwrap_or_else(|| follow.lowest().unwrap())
    }
}

fn lowest_rank(cards: CardSet) -> Card {
    cards
        .iter()
        .min_by_key(|c| (c.rank(), c.index()))
        .unwrap()
}

fn highest_rank(cards: CardSet) -> Card {
    cards
        .iter()
        .max_by_key(|c| (c.rank(), std::cmp::Reverse(c.index())))
        .unwrap()
}

impl Agent for MrIf {
    fn name(&self) -> &str {
        "if"
    }

    fn choose(&self, view: &PlayerView, _rng: &mut GameRng) -> Card {
        let legal = view.legal_moves();
        if legal.len() == 1 {
            return legal.lowest().unwrap();
        }
        match view.led_suit() {
            None => self.lead(view),
            Some(led) => {
                let follow = view.hand.of_suit(led);
                if follow.is_empty() {
                    self.discard(view)
                } else {
                    self.follow(view, follow)
                }
            }
        }
    }
}
