use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::score::{score, Score};
use super::{Card, CardSet, GameError, PlayEvent, Seat, Suit};

/// Ordered plays of one game. Events `4k..4k+4` form trick `k`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct History {
    events: Vec<PlayEvent>,
}

impl History {
    pub fn new() -> History {
        History {
            events: Vec::with_capacity(52),
        }
    }

    pub fn events(&self) -> &[PlayEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Completed tricks in order.
    pub fn tricks(&self) -> impl Iterator<Item = &[PlayEvent]> {
        self.events.chunks_exact(4)
    }

    /// Plays of the trick in progress (0..=3 events).
    pub fn current_trick(&self) -> &[PlayEvent] {
        &self.events[self.events.len() / 4 * 4..]
    }

    /// The first `u` events.
    pub fn prefix(&self, u: usize) -> History {
        History {
            events: self.events[..u].to_vec(),
        }
    }

    pub fn played_cards(&self) -> CardSet {
        self.events.iter().map(|e| e.card).collect()
    }

    pub fn played_by(&self, seat: Seat) -> CardSet {
        self.events
            .iter()
            .filter(|e| e.player == seat)
            .map(|e| e.card)
            .collect()
    }

    /// Point cards captured by each seat in the completed tricks.
    pub fn piles(&self) -> [CardSet; 4] {
        let mut piles = [CardSet::EMPTY; 4];
        for trick in self.tricks() {
            let w = trick_winner(trick).index();
            for e in trick.iter().filter(|e| e.card.is_point_card()) {
                piles[w].insert(e.card);
            }
        }
        piles
    }

    pub(crate) fn push(&mut self, event: PlayEvent) {
        self.events.push(event);
    }
}

/// Cards the holder of `hand` may play into `trick`.
pub fn legal_from(hand: CardSet, trick: &[PlayEvent]) -> CardSet {
    match trick.first() {
        None => hand,
        Some(lead) => {
            let follow = hand.of_suit(lead.card.suit());
            if follow.is_empty() {
                hand
            } else {
                follow
            }
        }
    }
}

/// Winner of a complete trick: the highest card of the led suit. Off-suit
/// cards never win.
pub fn resolve_trick(trick: &[PlayEvent]) -> Result<Seat, GameError> {
    if trick.len() != 4 {
        return Err(GameError::InvalidTrick(format!(
            "expected 4 plays, got {}",
            trick.len()
        )));
    }
    let cards: CardSet = trick.iter().map(|e| e.card).collect();
    if cards.len() != 4 {
        return Err(GameError::InvalidTrick("repeated card".into()));
    }
    for (k, e) in trick.iter().enumerate() {
        if e.player != trick[0].player.offset(k) {
            return Err(GameError::InvalidTrick(format!(
                "play {k} by seat {} out of turn",
                e.player
            )));
        }
    }
    Ok(trick_winner(trick))
}

pub(crate) fn trick_winner(trick: &[PlayEvent]) -> Seat {
    let led = trick[0].card.suit();
    trick
        .iter()
        .filter(|e| e.card.suit() == led)
        .max_by_key(|e| e.card.rank())
        .map(|e| e.player)
        .expect("led card is in the trick")
}

/// Full four-hand game state. `hands` holds the cards not yet played.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GameState {
    hands: [CardSet; 4],
    history: History,
    first_leader: Seat,
    trick_leader: Seat,
    piles: [CardSet; 4],
}

impl GameState {
    /// Shuffle and deal with a reproducible RNG; the first leader comes from the
    /// same stream.
    pub fn deal(seed: u64) -> GameState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut deck: Vec<Card> = Card::all().collect();
        deck.shuffle(&mut rng);
        let mut hands = [CardSet::EMPTY; 4];
        for (i, c) in deck.into_iter().enumerate() {
            hands[i / 13].insert(c);
        }
        let leader = Seat::new(rng.gen_range(0..4));
        GameState::with_hands(hands, leader)
    }

    /// Start a game from explicit hands. They must partition the deck 13/13/13/13.
    pub fn from_hands(hands: [CardSet; 4], leader: Seat) -> Result<GameState, GameError> {
        let mut seen = CardSet::EMPTY;
        for (i, h) in hands.iter().enumerate() {
            if h.len() != 13 {
                return Err(GameError::Inconsistent(format!(
                    "hand {i} has {} cards",
                    h.len()
                )));
            }
            if !seen.is_disjoint(*h) {
                return Err(GameError::Inconsistent(format!(
                    "hand {i} repeats a card dealt elsewhere"
                )));
            }
            seen = seen.union(*h);
        }
        Ok(GameState::with_hands(hands, leader))
    }

    fn with_hands(hands: [CardSet; 4], leader: Seat) -> GameState {
        GameState {
            hands,
            history: History::new(),
            first_leader: leader,
            trick_leader: leader,
            piles: [CardSet::EMPTY; 4],
        }
    }

    /// Rebuild a state from the initial deal and the plays so far, checking
    /// every play for legality.
    pub fn replay(
        initial: [CardSet; 4],
        leader: Seat,
        plays: &[Card],
    ) -> Result<GameState, GameError> {
        let mut state = GameState::from_hands(initial, leader)?;
        for &c in plays {
            state.play_mut(c)?;
        }
        Ok(state)
    }

    /// A determinized state: the observer's history applied to a hypothesized
    /// set of current hands. Hands must be consistent with who played what.
    pub fn from_current_hands(
        current: [CardSet; 4],
        history: &History,
        first_leader: Seat,
    ) -> Result<GameState, GameError> {
        let mut initial = current;
        for e in history.events() {
            initial[e.player.index()].insert(e.card);
        }
        let plays: Vec<Card> = history.events().iter().map(|e| e.card).collect();
        let state = GameState::replay(initial, first_leader, &plays)?;
        debug_assert_eq!(state.history, *history);
        Ok(state)
    }

    pub fn hands(&self) -> &[CardSet; 4] {
        &self.hands
    }

    pub fn hand(&self, seat: Seat) -> CardSet {
        self.hands[seat.index()]
    }

    /// Hands as dealt: current hands plus everything each seat has played.
    pub fn initial_hands(&self) -> [CardSet; 4] {
        let mut h = self.hands;
        for e in self.history.events() {
            h[e.player.index()].insert(e.card);
        }
        h
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn first_leader(&self) -> Seat {
        self.first_leader
    }

    pub fn trick_leader(&self) -> Seat {
        self.trick_leader
    }

    pub fn current_trick(&self) -> &[PlayEvent] {
        self.history.current_trick()
    }

    pub fn to_play(&self) -> Seat {
        self.trick_leader.offset(self.current_trick().len())
    }

    /// Point cards captured so far, per seat.
    pub fn piles(&self) -> &[CardSet; 4] {
        &self.piles
    }

    pub fn is_terminal(&self) -> bool {
        self.history.len() == 52
    }

    /// Cards left in play (not yet played by anyone).
    pub fn cards_remaining(&self) -> usize {
        52 - self.history.len()
    }

    pub fn legal_moves(&self) -> Result<CardSet, GameError> {
        if self.is_terminal() {
            return Err(GameError::Terminal);
        }
        Ok(legal_from(self.hand(self.to_play()), self.current_trick()))
    }

    /// New state with `card` played by the seat to move.
    pub fn play(&self, card: Card) -> Result<GameState, GameError> {
        let mut next = self.clone();
        next.play_mut(card)?;
        Ok(next)
    }

    /// In-place variant of [`play`](Self::play). Returns the trick winner when
    /// this card completes a trick.
    pub fn play_mut(&mut self, card: Card) -> Result<Option<Seat>, GameError> {
        if self.is_terminal() {
            return Err(GameError::Terminal);
        }
        let seat = self.to_play();
        let hand = self.hand(seat);
        if !hand.contains(card) {
            return Err(GameError::IllegalMove {
                card,
                rule: format!("seat {seat} does not hold {card}"),
            });
        }
        if let Some(lead) = self.current_trick().first() {
            let led = lead.card.suit();
            if card.suit() != led && hand.has_suit(led) {
                return Err(GameError::IllegalMove {
                    card,
                    rule: format!("must follow suit {}", led.symbol()),
                });
            }
        }
        self.hands[seat.index()].remove(card);
        self.history.push(PlayEvent::new(seat, card));
        let trick = self.current_trick();
        if trick.is_empty() {
            let done = &self.history.events()[self.history.len() - 4..];
            let winner = trick_winner(done);
            let points: CardSet = done
                .iter()
                .map(|e| e.card)
                .filter(|c| c.is_point_card())
                .collect();
            self.piles[winner.index()] = self.piles[winner.index()].union(points);
            self.trick_leader = winner;
            return Ok(Some(winner));
        }
        Ok(None)
    }

    /// Final score. Errors unless all 52 cards have been played.
    pub fn score(&self) -> Result<Score, GameError> {
        if !self.is_terminal() {
            return Err(GameError::Inconsistent("game not finished".into()));
        }
        score(&self.piles)
    }

    /// Team 0 minus team 1 game points, for a finished game.
    pub fn team_differential(&self) -> Result<i32, GameError> {
        self.score().map(|s| s.differential())
    }

    /// What `seat` can see: its own hand and all public information.
    pub fn view(&self, seat: Seat) -> PlayerView {
        PlayerView {
            seat,
            hand: self.hand(seat),
            history: self.history.clone(),
            first_leader: self.first_leader,
            trick_leader: self.trick_leader,
            piles: self.piles,
        }
    }
}

/// One seat's information set: own hand plus the public record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerView {
    pub seat: Seat,
    pub hand: CardSet,
    pub history: History,
    pub first_leader: Seat,
    pub trick_leader: Seat,
    pub piles: [CardSet; 4],
}

impl PlayerView {
    pub fn current_trick(&self) -> &[PlayEvent] {
        self.history.current_trick()
    }

    pub fn to_play(&self) -> Seat {
        self.trick_leader.offset(self.current_trick().len())
    }

    pub fn is_my_turn(&self) -> bool {
        self.to_play() == self.seat && self.history.len() < 52
    }

    pub fn legal_moves(&self) -> CardSet {
        legal_from(self.hand, self.current_trick())
    }

    pub fn led_suit(&self) -> Option<Suit> {
        self.current_trick().first().map(|e| e.card.suit())
    }

    /// Number of cards each seat still holds.
    pub fn hand_sizes(&self) -> [usize; 4] {
        let mut n = [13usize; 4];
        for e in self.history.events() {
            n[e.player.index()] -= 1;
        }
        n
    }

    /// Cards whose location this seat does not know.
    pub fn unseen(&self) -> CardSet {
        CardSet::FULL
            .difference(self.hand)
            .difference(self.history.played_cards())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Card {
        s.parse().unwrap()
    }

    fn set(tokens: &[&str]) -> CardSet {
        tokens.iter().map(|t| c(t)).collect()
    }

    fn trick(leader: usize, cards: &[&str]) -> Vec<PlayEvent> {
        cards
            .iter()
            .enumerate()
            .map(|(k, t)| PlayEvent::new(Seat::new(leader).offset(k), c(t)))
            .collect()
    }

    #[test]
    fn deal_partitions_deck() {
        for seed in 0..50 {
            let s = GameState::deal(seed);
            let all = s.hands().iter().fold(CardSet::EMPTY, |a, h| a.union(*h));
            assert_eq!(all, CardSet::FULL);
            assert!(s.hands().iter().all(|h| h.len() == 13));
            assert!(s.history().is_empty());
        }
    }

    #[test]
    fn deal_is_reproducible() {
        assert_eq!(GameState::deal(7), GameState::deal(7));
        assert_ne!(GameState::deal(7), GameState::deal(8));
    }

    #[test]
    fn leader_may_play_anything() {
        let s = GameState::deal(3);
        assert_eq!(s.legal_moves().unwrap().len(), 13);
    }

    #[test]
    fn follow_suit_rule() {
        let t = trick(0, &["SK"]);
        assert_eq!(legal_from(set(&["S5", "H2", "D9"]), &t), set(&["S5"]));
        assert_eq!(
            legal_from(set(&["H2", "D9", "C3"]), &t),
            set(&["H2", "D9", "C3"])
        );
    }

    #[test]
    fn highest_of_led_suit_wins() {
        assert_eq!(
            resolve_trick(&trick(1, &["S5", "SK", "HA", "SA"])).unwrap(),
            Seat::new(0)
        );
        assert_eq!(
            resolve_trick(&trick(0, &["H9", "H2", "SQ", "DJ"])).unwrap(),
            Seat::new(0)
        );
        assert_eq!(
            resolve_trick(&trick(2, &["D2", "D3", "D4", "D5"])).unwrap(),
            Seat::new(1)
        );
    }

    #[test]
    fn malformed_tricks_rejected() {
        assert!(resolve_trick(&trick(0, &["S5", "SK", "HA"])).is_err());
        assert!(resolve_trick(&trick(0, &["S5", "SK", "S5", "SA"])).is_err());
        let mut t = trick(0, &["S5", "SK", "HA", "SA"]);
        t.swap(1, 2);
        assert!(matches!(resolve_trick(&t), Err(GameError::InvalidTrick(_))));
    }

    #[test]
    fn play_advances_and_resolves() {
        let s = GameState::deal(11);
        let mut cur = s.clone();
        for _ in 0..4 {
            let card = cur.legal_moves().unwrap().lowest().unwrap();
            let next = cur.play(card).unwrap();
            assert_eq!(next.history().len(), cur.history().len() + 1);
            cur = next;
        }
        assert!(cur.current_trick().is_empty());
        let first = &cur.history().events()[..4];
        let winner = resolve_trick(first).unwrap();
        assert_eq!(cur.to_play(), winner);
        let pts: CardSet = first
            .iter()
            .map(|e| e.card)
            .filter(|c| c.is_point_card())
            .collect();
        assert_eq!(cur.piles()[winner.index()], pts);
        // receiver untouched
        assert!(s.history().is_empty());
    }

    #[test]
    fn off_suit_play_while_holding_led_suit_is_illegal() {
        let mut s = GameState::deal(5);
        let leader = s.to_play();
        // find a lead whose suit the next seat holds alongside another suit
        let next = leader.next();
        let lead = s
            .hand(leader)
            .iter()
            .find(|c| {
                let h = s.hand(next);
                h.has_suit(c.suit()) && h.of_suit(c.suit()).len() < h.len()
            })
            .expect("some suit is shared");
        s.play_mut(lead).unwrap();
        let off = s
            .hand(next)
            .iter()
            .find(|c| c.suit() != lead.suit())
            .unwrap();
        match s.play(off) {
            Err(GameError::IllegalMove { rule, .. }) => assert!(rule.contains("follow suit")),
            other => panic!("expected illegal move, got {other:?}"),
        }
        assert!(matches!(
            s.play(s.hand(leader).lowest().unwrap()),
            Err(GameError::IllegalMove { .. })
        ));
    }

    #[test]
    fn terminal_state_has_no_moves() {
        let mut s = GameState::deal(9);
        while !s.is_terminal() {
            let c = s.legal_moves().unwrap().highest().unwrap();
            s.play_mut(c).unwrap();
        }
        assert_eq!(s.legal_moves(), Err(GameError::Terminal));
        assert!(s.score().is_ok());
    }

    #[test]
    fn view_reconstruction() {
        let mut s = GameState::deal(21);
        for _ in 0..6 {
            let c = s.legal_moves().unwrap().lowest().unwrap();
            s.play_mut(c).unwrap();
        }
        let v = s.view(Seat::new(2));
        assert_eq!(v.to_play(), s.to_play());
        assert_eq!(v.unseen().len(), 52 - 6 - v.hand.len());
        let sizes = v.hand_sizes();
        for seat in Seat::ALL {
            assert_eq!(sizes[seat.index()], s.hand(seat).len());
        }
        let rebuilt = GameState::from_current_hands(*s.hands(), s.history(), s.first_leader())
            .unwrap();
        assert_eq!(rebuilt, s);
    }
}
