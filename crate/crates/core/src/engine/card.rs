use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GameError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Suit {
    Spade = 0,
    Heart = 1,
    Diamond = 2,
    Club = 3,
}

impl Suit {
    pub const ALL: [Suit; 4] = [Suit::Spade, Suit::Heart, Suit::Diamond, Suit::Club];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Suit {
        Suit::ALL[i]
    }

    pub fn symbol(self) -> char {
        match self {
            Suit::Spade => 'S',
            Suit::Heart => 'H',
            Suit::Diamond => 'D',
            Suit::Club => 'C',
        }
    }

    pub fn from_symbol(c: char) -> Option<Suit> {
        match c {
            'S' => Some(Suit::Spade),
            'H' => Some(Suit::Heart),
            'D' => Some(Suit::Diamond),
            'C' => Some(Suit::Club),
            _ => None,
        }
    }
}

const RANK_SYMBOLS: &[u8; 13] = b"23456789TJQKA";

/// One of the 52 cards. Canonical index is `suit * 13 + rank - 2`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Card(u8);

impl Card {
    pub const SQ: Card = Card(10);
    pub const DJ: Card = Card(2 * 13 + 9);
    pub const C10: Card = Card(3 * 13 + 8);
    pub const HA: Card = Card(13 + 12);
    pub const HK: Card = Card(13 + 11);

    /// Panics if `rank` is outside 2..=14.
    pub fn new(suit: Suit, rank: u8) -> Card {
        assert!((2..=14).contains(&rank), "rank {rank} out of range");
        Card(suit as u8 * 13 + rank - 2)
    }

    pub fn from_index(index: usize) -> Card {
        assert!(index < 52, "card index {index} out of range");
        Card(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn suit(self) -> Suit {
        Suit::from_index(self.0 as usize / 13)
    }

    /// 2..=14, with J=11, Q=12, K=13, A=14.
    pub fn rank(self) -> u8 {
        self.0 % 13 + 2
    }

    pub fn all() -> impl Iterator<Item = Card> {
        (0..52u8).map(Card)
    }

    pub fn is_heart(self) -> bool {
        self.suit() == Suit::Heart
    }

    /// Hearts, SQ, DJ and C10.
    pub fn is_point_card(self) -> bool {
        self.is_heart() || self == Card::SQ || self == Card::DJ || self == Card::C10
    }

    /// Face value of a heart (0 for non-hearts).
    pub fn heart_points(self) -> i32 {
        if !self.is_heart() {
            return 0;
        }
        match self.rank() {
            14 => -50,
            13 => -40,
            12 => -30,
            11 => -20,
            5..=10 => -10,
            _ => 0,
        }
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            self.suit().symbol(),
            RANK_SYMBOLS[(self.rank() - 2) as usize] as char
        )
    }
}

impl fmt::Debug for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Card {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Card, GameError> {
        let bytes = s.as_bytes();
        let bad = || GameError::Parse {
            offset: 0,
            message: format!("bad card token {s:?}"),
        };
        if bytes.len() != 2 {
            return Err(bad());
        }
        let suit = Suit::from_symbol(bytes[0] as char).ok_or_else(bad)?;
        let rank = RANK_SYMBOLS
            .iter()
            .position(|&r| r == bytes[1])
            .ok_or_else(bad)?;
        Ok(Card::new(suit, rank as u8 + 2))
    }
}

impl Serialize for Card {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Card {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Card, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A set of cards stored as a 52-bit mask. Iteration is in canonical index order.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CardSet(u64);

pub type Hand = CardSet;

const SUIT_MASK: u64 = (1 << 13) - 1;

impl CardSet {
    pub const EMPTY: CardSet = CardSet(0);
    pub const FULL: CardSet = CardSet((1 << 52) - 1);

    pub fn from_bits(bits: u64) -> CardSet {
        CardSet(bits & Self::FULL.0)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn suit(suit: Suit) -> CardSet {
        CardSet(SUIT_MASK << (suit.index() * 13))
    }

    pub fn point_cards() -> CardSet {
        CardSet::suit(Suit::Heart)
            .with(Card::SQ)
            .with(Card::DJ)
            .with(Card::C10)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, card: Card) -> bool {
        self.0 & (1 << card.index()) != 0
    }

    pub fn insert(&mut self, card: Card) -> bool {
        let had = self.contains(card);
        self.0 |= 1 << card.index();
        !had
    }

    pub fn remove(&mut self, card: Card) -> bool {
        let had = self.contains(card);
        self.0 &= !(1 << card.index());
        had
    }

    pub fn with(mut self, card: Card) -> CardSet {
        self.insert(card);
        self
    }

    pub fn without(mut self, card: Card) -> CardSet {
        self.remove(card);
        self
    }

    pub fn union(self, other: CardSet) -> CardSet {
        CardSet(self.0 | other.0)
    }

    pub fn intersection(self, other: CardSet) -> CardSet {
        CardSet(self.0 & other.0)
    }

    pub fn difference(self, other: CardSet) -> CardSet {
        CardSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: CardSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn of_suit(self, suit: Suit) -> CardSet {
        self.intersection(CardSet::suit(suit))
    }

    pub fn has_suit(self, suit: Suit) -> bool {
        !self.of_suit(suit).is_empty()
    }

    pub fn lowest(self) -> Option<Card> {
        (self.0 != 0).then(|| Card(self.0.trailing_zeros() as u8))
    }

    pub fn highest(self) -> Option<Card> {
        (self.0 != 0).then(|| Card(63 - self.0.leading_zeros() as u8))
    }

    pub fn iter(self) -> CardSetIter {
        CardSetIter(self.0)
    }

    /// The k-th card in canonical order.
    pub fn nth(self, k: usize) -> Option<Card> {
        self.iter().nth(k)
    }

    pub fn to_vec(self) -> Vec<Card> {
        self.iter().collect()
    }
}

impl FromIterator<Card> for CardSet {
    fn from_iter<I: IntoIterator<Item = Card>>(iter: I) -> CardSet {
        let mut set = CardSet::EMPTY;
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl IntoIterator for CardSet {
    type Item = Card;
    type IntoIter = CardSetIter;

    fn into_iter(self) -> CardSetIter {
        self.iter()
    }
}

pub struct CardSetIter(u64);

impl Iterator for CardSetIter {
    type Item = Card;

    fn next(&mut self) -> Option<Card> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(Card(i as u8))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for CardSetIter {}

impl DoubleEndedIterator for CardSetIter {
    fn next_back(&mut self) -> Option<Card> {
        if self.0 == 0 {
            return None;
        }
        let i = 63 - self.0.leading_zeros();
        self.0 &= !(1 << i);
        Some(Card(i as u8))
    }
}

impl fmt::Debug for CardSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for CardSet {
    /// Concatenated two-character tokens, e.g. `S2SQHT`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.iter() {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Serialize for CardSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for CardSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<CardSet, D::Error> {
        let cards = Vec::<Card>::deserialize(d)?;
        Ok(cards.into_iter().collect())
    }
}

/// Parse a run of concatenated card tokens (`S2SQHT`). Duplicates are rejected.
pub fn parse_cards(s: &str) -> Result<CardSet, GameError> {
    if !s.len().is_multiple_of(2) || !s.is_ascii() {
        return Err(GameError::Parse {
            offset: 0,
            message: format!("odd-length card run {s:?}"),
        });
    }
    let mut set = CardSet::EMPTY;
    for i in (0..s.len()).step_by(2) {
        let card: Card = s[i..i + 2].parse().map_err(|e: GameError| e.shift(i))?;
        if !set.insert(card) {
            return Err(GameError::Parse {
                offset: i,
                message: format!("duplicate card {card}"),
            });
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_index_layout() {
        assert_eq!(Card::new(Suit::Spade, 2).index(), 0);
        assert_eq!(Card::new(Suit::Club, 14).index(), 51);
        assert_eq!(Card::SQ, Card::new(Suit::Spade, 12));
        assert_eq!(Card::DJ, Card::new(Suit::Diamond, 11));
        assert_eq!(Card::C10, Card::new(Suit::Club, 10));
        assert_eq!(Card::HA, Card::new(Suit::Heart, 14));
    }

    #[test]
    fn tokens_round_trip() {
        for c in Card::all() {
            let s = c.to_string();
            assert_eq!(s.len(), 2);
            assert_eq!(s.parse::<Card>().unwrap(), c);
        }
        assert_eq!("HT".parse::<Card>().unwrap(), Card::new(Suit::Heart, 10));
        assert!("H1".parse::<Card>().is_err());
        assert!("XA".parse::<Card>().is_err());
    }

    #[test]
    fn sixteen_point_cards_worth_minus_200_in_hearts() {
        assert_eq!(CardSet::point_cards().len(), 16);
        let total: i32 = CardSet::suit(Suit::Heart).iter().map(|c| c.heart_points()).sum();
        assert_eq!(total, -200);
    }

    #[test]
    fn set_iteration_is_ordered() {
        let s: CardSet = ["HA", "S2", "DJ"].iter().map(|t| t.parse().unwrap()).collect();
        assert_eq!(s.to_string(), "S2HADJ");
        assert_eq!(s.lowest(), Some(Card::new(Suit::Spade, 2)));
        assert_eq!(s.highest(), Some(Card::DJ));
        assert_eq!(s.iter().next_back(), Some(Card::DJ));
    }

    #[test]
    fn parse_card_run_rejects_duplicates() {
        let err = parse_cards("S2HAS2").unwrap_err();
        assert!(matches!(err, GameError::Parse { offset: 4, .. }));
    }
}
