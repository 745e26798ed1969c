//! Brute-force scoring from card tokens.
//!
//! Tricks are resolved by scanning token strings and piles are scored
//! from a literal value table, so a bug in the engine's card indexing,
//! trick resolution or point rules cannot cancel out here.

const RANKS: &str = "23456789TJQKA";

const HEARTS: [(&str, i32); 13] = [
    ("HA", -50),
    ("HK", -40),
    ("HQ", -30),
    ("HJ", -20),
    ("HT", -10),
    ("H9", -10),
    ("H8", -10),
    ("H7", -10),
    ("H6", -10),
    ("H5", -10),
    ("H4", 0),
    ("H3", 0),
    ("H2", 0),
];

fn suit(token: &str) -> char {
    token.chars().next().unwrap()
}

fn rank(token: &str) -> usize {
    RANKS.find(token.chars().nth(1).unwrap()).expect("rank character")
}

/// Seat that wins four `(seat, token)` plays: highest card of the led suit.
pub fn trick_winner(trick: &[(usize, String)]) -> usize {
    let led = suit(&trick[0].1);
    trick
        .iter()
        .filter(|(_, t)| suit(t) == led)
        .max_by_key(|(_, t)| rank(t))
        .unwrap()
        .0
}

pub fn heart_value(token: &str) -> i32 {
    HEARTS.iter().find(|(t, _)| *t == token).map_or(0, |(_, v)| *v)
}

/// Points of one pile of tokens.
pub fn pile_points(pile: &[String]) -> i32 {
    let has = |t: &str| pile.iter().any(|p| p == t);
    let hearts: Vec<&String> = pile.iter().filter(|t| suit(t) == 'H').collect();
    let mut total: i32 = if hearts.len() == 13 {
        200
    } else {
        hearts.iter().map(|t| heart_value(t)).sum()
    };
    if has("SQ") {
        total -= 100;
    }
    if has("DJ") {
        total += 100;
    }
    if has("CT") {
        let others = hearts.len() + has("SQ") as usize + has("DJ") as usize;
        total = if others == 0 { 50 } else { 2 * total };
    }
    total
}

/// Piles of a complete game given as 52 `(seat, token)` plays.
pub fn piles(plays: &[(usize, String)]) -> [Vec<String>; 4] {
    assert_eq!(plays.len(), 52);
    let mut piles: [Vec<String>; 4] = Default::default();
    for trick in plays.chunks(4) {
        let w = trick_winner(trick);
        piles[w].extend(trick.iter().map(|(_, t)| t.clone()));
    }
    piles
}

/// Per-seat points of a complete game.
pub fn score(plays: &[(usize, String)]) -> [i32; 4] {
    let p = piles(plays);
    [0, 1, 2, 3].map(|s| pile_points(&p[s]))
}

/// Sum of heart face values over all piles, and whether one seat took
/// every heart.
pub fn heart_total(plays: &[(usize, String)]) -> (i32, bool) {
    let p = piles(plays);
    let total = p.iter().flatten().map(|t| heart_value(t)).sum();
    let all = p.iter().any(|pile| pile.iter().filter(|t| suit(t) == 'H').count() == 13);
    (total, all)
}
