use serde::{Deserialize, Serialize};

use super::{Card, CardSet, GameError, Suit};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub per_player: [i32; 4],
    pub per_team: [i32; 2],
}

impl Score {
    pub fn from_players(per_player: [i32; 4]) -> Score {
        Score {
            per_player,
            per_team: [
                per_player[0] + per_player[2],
                per_player[1] + per_player[3],
            ],
        }
    }

    /// Team 0 minus team 1.
    pub fn differential(&self) -> i32 {
        self.per_team[0] - self.per_team[1]
    }
}

/// Game points of one player's captured cards. Non-point cards are ignored.
///
/// Hearts count their face values, or +200 in total when all thirteen are
/// held. SQ is -100 and DJ +100. C10 alone is +50; otherwise it doubles the
/// subtotal (after the all-hearts flip).
pub fn player_points(pile: CardSet) -> i32 {
    let hearts = pile.of_suit(Suit::Heart);
    let mut total = if hearts.len() == 13 {
        200
    } else {
        hearts.iter().map(Card::heart_points).sum()
    };
    if pile.contains(Card::SQ) {
        total -= 100;
    }
    if pile.contains(Card::DJ) {
        total += 100;
    }
    if pile.contains(Card::C10) {
        let others = pile
            .intersection(CardSet::point_cards())
            .without(Card::C10);
        if others.is_empty() {
            total = 50;
        } else {
            total *= 2;
        }
    }
    total
}

/// Score captured piles. A card in two piles is an error.
pub fn score(piles: &[CardSet; 4]) -> Result<Score, GameError> {
    let mut seen = CardSet::EMPTY;
    for (i, p) in piles.iter().enumerate() {
        let dup = seen.intersection(*p);
        if !dup.is_empty() {
            return Err(GameError::Inconsistent(format!(
                "pile {i} repeats {dup:?}"
            )));
        }
        seen = seen.union(*p);
    }
    Ok(Score::from_players([
        player_points(piles[0]),
        player_points(piles[1]),
        player_points(piles[2]),
        player_points(piles[3]),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pile(tokens: &[&str]) -> CardSet {
        tokens.iter().map(|t| t.parse::<Card>().unwrap()).collect()
    }

    #[test]
    fn point_table() {
        assert_eq!(player_points(pile(&["SQ"])), -100);
        assert_eq!(player_points(pile(&["DJ"])), 100);
        assert_eq!(player_points(pile(&["CT"])), 50);
        assert_eq!(player_points(pile(&["CT", "HA"])), -100);
        assert_eq!(player_points(pile(&["HK", "HQ", "HJ", "H5", "H2"])), -100);
        assert_eq!(player_points(CardSet::EMPTY), 0);
        // non-point cards contribute nothing
        assert_eq!(player_points(pile(&["SA", "DA", "C2"])), 0);
    }

    #[test]
    fn all_hearts_flip() {
        let hearts = CardSet::suit(Suit::Heart);
        assert_eq!(player_points(hearts), 200);
        assert_eq!(player_points(hearts.with(Card::SQ).with(Card::DJ)), 200);
        assert_eq!(player_points(hearts.with(Card::C10)), 400);
        assert_eq!(player_points(hearts.without(Card::HA)), -150);
    }

    #[test]
    fn c10_with_zero_point_heart_doubles_zero() {
        assert_eq!(player_points(pile(&["CT", "H2"])), 0);
        assert_eq!(player_points(pile(&["CT", "DJ"])), 200);
        assert_eq!(player_points(pile(&["CT", "SQ", "DJ"])), 0);
    }

    #[test]
    fn team_totals() {
        let piles = [pile(&["SQ"]), pile(&["DJ"]), pile(&["HA"]), pile(&["CT"])];
        let s = score(&piles).unwrap();
        assert_eq!(s.per_player, [-100, 100, -50, 50]);
        assert_eq!(s.per_team, [-150, 150]);
        assert_eq!(s.differential(), -300);
    }

    #[test]
    fn duplicate_point_card_is_inconsistent() {
        let piles = [pile(&["SQ"]), pile(&["SQ"]), CardSet::EMPTY, CardSet::EMPTY];
        assert!(matches!(score(&piles), Err(GameError::Inconsistent(_))));
    }
}
