//! One-line game records:
//!
//! ```text
//! DEAL <leader> <hand0> <hand1> <hand2> <hand3> ; PLAYS <card>* ; SCORE <p0> <p1> <p2> <p3>
//! ```
//!
//! Hands are concatenated card tokens in canonical order (`S2S9SQHT...`).
//! `DEAL #<seed>` is accepted on input and re-dealt with [`GameState::deal`].
//! Unfinished games carry `SCORE -`. Serializing always writes explicit hands,
//! so `serialize_game(parse_game(line)) == line` for every line this module
//! writes.

use std::fmt::Write as _;

use super::{parse_cards, Card, CardSet, GameError, GameState, Score, Seat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameRecord {
    pub initial: [CardSet; 4],
    pub leader: Seat,
    pub plays: Vec<Card>,
    pub score: Option<Score>,
}

impl GameRecord {
    pub fn from_state(state: &GameState) -> GameRecord {
        GameRecord {
            initial: state.initial_hands(),
            leader: state.first_leader(),
            plays: state.history().events().iter().map(|e| e.card).collect(),
            score: state.score().ok(),
        }
    }

    /// Replay the record, validating every play and the stored score.
    pub fn to_state(&self) -> Result<GameState, GameError> {
        let state = GameState::replay(self.initial, self.leader, &self.plays)?;
        match (&self.score, state.score()) {
            (Some(stored), Ok(actual)) if *stored != actual => Err(GameError::Inconsistent(
                format!(
                    "stored score {:?} but replay gives {:?}",
                    stored.per_player, actual.per_player
                ),
            )),
            (Some(_), Err(_)) => Err(GameError::Inconsistent(
                "score given for an unfinished game".into(),
            )),
            (None, Ok(_)) => Err(GameError::Inconsistent(
                "finished game without a score".into(),
            )),
            _ => Ok(state),
        }
    }

    pub fn to_line(&self) -> String {
        let mut out = format!("DEAL {}", self.leader);
        for h in &self.initial {
            write!(out, " {h}").unwrap();
        }
        out.push_str(" ; PLAYS");
        for c in &self.plays {
            write!(out, " {c}").unwrap();
        }
        out.push_str(" ; SCORE");
        match &self.score {
            Some(s) => {
                for p in s.per_player {
                    write!(out, " {p}").unwrap();
                }
            }
            None => out.push_str(" -"),
        }
        out
    }

    pub fn parse(line: &str) -> Result<GameRecord, GameError> {
        let mut toks = Tokens::new(line);
        toks.expect("DEAL")?;
        let (off, first) = toks.next_required("leader or seed")?;
        let (initial, leader) = if let Some(seed) = first.strip_prefix('#') {
            let seed: u64 = seed.parse().map_err(|_| err(off, "bad seed"))?;
            let s = GameState::deal(seed);
            (*s.hands(), s.first_leader())
        } else {
            let leader = match first {
                "0" | "1" | "2" | "3" => Seat::new(first.parse().unwrap()),
                _ => return Err(err(off, "leader must be 0..3")),
            };
            let mut hands = [CardSet::EMPTY; 4];
            for h in hands.iter_mut() {
                let (off, tok) = toks.next_required("hand")?;
                *h = parse_cards(tok).map_err(|e| e.shift(off))?;
                if h.len() != 13 {
                    return Err(err(off, "hand must hold 13 cards"));
                }
            }
            GameState::from_hands(hands, leader).map_err(|e| err(off, &e.to_string()))?;
            (hands, leader)
        };
        toks.expect(";")?;
        toks.expect("PLAYS")?;
        let mut plays = Vec::new();
        let mut seen = CardSet::EMPTY;
        loop {
            let (off, tok) = toks.next_required("card or ';'")?;
            if tok == ";" {
                break;
            }
            let card: Card = tok.parse().map_err(|e: GameError| e.shift(off))?;
            if !seen.insert(card) {
                return Err(err(off, &format!("card {card} played twice")));
            }
            plays.push(card);
        }
        if plays.len() > 52 {
            return Err(err(line.len(), "more than 52 plays"));
        }
        toks.expect("SCORE")?;
        let (off, tok) = toks.next_required("score")?;
        let score = if tok == "-" {
            None
        } else {
            let mut p = [0i32; 4];
            let parse_int = |off: usize, t: &str| -> Result<i32, GameError> {
                t.parse().map_err(|_| err(off, "bad score"))
            };
            p[0] = parse_int(off, tok)?;
            for slot in p.iter_mut().skip(1) {
                let (off, t) = toks.next_required("score")?;
                *slot = parse_int(off, t)?;
            }
            Some(Score::from_players(p))
        };
        if let Some((off, _)) = toks.next() {
            return Err(err(off, "trailing input"));
        }
        let rec = GameRecord {
            initial,
            leader,
            plays,
            score,
        };
        rec.to_state().map_err(|e| match e {
            GameError::Parse { .. } => e,
            other => err(0, &other.to_string()),
        })?;
        Ok(rec)
    }
}

fn err(offset: usize, message: &str) -> GameError {
    GameError::Parse {
        offset,
        message: message.to_string(),
    }
}

struct Tokens<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(src: &'a str) -> Self {
        Tokens { src, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let rest = &self.src[self.pos..];
        let start = self.pos + (rest.len() - rest.trim_start().len());
        let tail = &self.src[start..];
        if tail.is_empty() {
            self.pos = self.src.len();
            return None;
        }
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        self.pos = start + len;
        Some((start, &tail[..len]))
    }

    fn next_required(&mut self, what: &str) -> Result<(usize, &'a str), GameError> {
        self.next()
            .ok_or_else(|| err(self.src.len(), &format!("unexpected end, expected {what}")))
    }

    fn expect(&mut self, word: &str) -> Result<(), GameError> {
        let (off, tok) = self.next_required(word)?;
        if tok != word {
            return Err(err(off, &format!("expected {word:?}, found {tok:?}")));
        }
        Ok(())
    }
}

pub fn serialize_game(state: &GameState) -> String {
    GameRecord::from_state(state).to_line()
}

pub fn parse_game(line: &str) -> Result<GameState, GameError> {
    GameRecord::parse(line)?.to_state()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finished(seed: u64) -> GameState {
        let mut s = GameState::deal(seed);
        while !s.is_terminal() {
            let m = s.legal_moves().unwrap();
            s.play_mut(m.nth(seed as usize % m.len()).unwrap()).unwrap();
        }
        s
    }

    #[test]
    fn fresh_deal_round_trips() {
        let s = GameState::deal(42);
        let line = serialize_game(&s);
        assert!(line.ends_with("; PLAYS ; SCORE -"));
        assert_eq!(parse_game(&line).unwrap(), s);
        assert_eq!(serialize_game(&parse_game(&line).unwrap()), line);
    }

    #[test]
    fn finished_game_round_trips() {
        let s = finished(3);
        let line = serialize_game(&s);
        let back = parse_game(&line).unwrap();
        assert_eq!(back, s);
        assert_eq!(serialize_game(&back), line);
    }

    #[test]
    fn seed_form_matches_deal() {
        let s = parse_game("DEAL #42 ; PLAYS ; SCORE -").unwrap();
        assert_eq!(s, GameState::deal(42));
    }

    #[test]
    fn truncated_record_fails() {
        let line = serialize_game(&finished(4));
        let cut = &line[..line.len() / 2];
        assert!(matches!(parse_game(cut), Err(GameError::Parse { .. })));
    }

    #[test]
    fn duplicate_card_in_hands_fails() {
        let line = serialize_game(&GameState::deal(1));
        let mut toks: Vec<String> = line.split(' ').map(String::from).collect();
        // copy the first card of hand 1 over the first card of hand 0
        let dup = toks[3][..2].to_string();
        toks[2].replace_range(..2, &dup);
        let bad = toks.join(" ");
        assert!(matches!(parse_game(&bad), Err(GameError::Parse { .. })));
    }

    #[test]
    fn duplicate_play_reports_offset() {
        let s = finished(5);
        let line = serialize_game(&s);
        let plays_at = line.find("PLAYS ").unwrap() + 6;
        let first = &line[plays_at..plays_at + 2];
        let bad = format!("{}{}{}", &line[..plays_at + 3], first, &line[plays_at + 5..]);
        match parse_game(&bad) {
            Err(GameError::Parse { offset, .. }) => assert_eq!(offset, plays_at + 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_score_rejected() {
        let s = finished(6);
        let line = serialize_game(&s);
        let idx = line.find("SCORE ").unwrap();
        let bad = format!("{}SCORE 1 2 3 4", &line[..idx]);
        assert!(parse_game(&bad).is_err());
    }
}
