use rand::Rng;

use super::{Agent, GameRng};
use crate::engine::{Card, PlayerView};

/// Uniform over legal moves.
#[derive(Clone, Copy, Debug, Default)]
pub struct MrRandom;

impl Agent for MrRandom {
    fn name(&self) -> &str {
        "random"
    }

    fn choose(&self, view: &PlayerView, rng: &mut GameRng) -> Card {
        let legal = view.legal_moves();
        legal
            .nth(rng.gen_range(0..legal.len()))
            .expect("at least one legal move")
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::engine::{GameState, Seat};

    #[test]
    fn frequencies_are_uniform() {
        // find a follower with exactly four legal cards
        let (state, seat) = (0..1000)
            .find_map(|seed| {
                let s = GameState::deal(seed);
                let lead = s.legal_moves().unwrap().lowest().unwrap();
                let s = s.play(lead).unwrap();
                (s.legal_moves().unwrap().len() == 4).then(|| {
                    let seat = s.to_play();
                    (s, seat)
                })
            })
            .unwrap();
        let view = state.view(seat);
        let legal = view.legal_moves();
        let mut rng = GameRng::seed_from_u64(3);
        let n = 10_000;
        let mut counts = [0usize; 52];
        for _ in 0..n {
            counts[MrRandom.choose(&view, &mut rng).index()] += 1;
        }
        for c in legal {
            let p = counts[c.index()] as f64 / n as f64;
            assert!((p - 0.25).abs() < 0.02, "{c}: {p}");
        }
        assert_eq!(counts.iter().sum::<usize>(), n);
        let _ = Seat::new(0);
    }
}
