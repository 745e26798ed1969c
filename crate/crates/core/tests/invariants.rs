use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gongzhu_core::belief::{allocate, sample_scenario, void_constraints, Scenario};
use gongzhu_core::engine::{parse_game, serialize_game, GameRecord};
use gongzhu_core::eval::epsilon;
use gongzhu_core::{Card, CardSet, GameState, Seat};

/// Deal from `seed` and play `plies` uniformly random legal cards.
fn playout(seed: u64, plies: usize) -> GameState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut s = GameState::deal(seed);
    for _ in 0..plies.min(52) {
        let m = s.legal_moves().unwrap();
        s.play_mut(m.nth(rng.gen_range(0..m.len())).unwrap()).unwrap();
    }
    s
}

proptest! {
    #[test]
    fn card_tokens_round_trip(i in 0usize..52) {
        let c = Card::from_index(i);
        prop_assert_eq!(c.index(), i);
        prop_assert_eq!(c.to_string().parse::<Card>().unwrap(), c);
    }

    #[test]
    fn cardset_matches_its_bits(bits in any::<u64>()) {
        let set = CardSet::from_bits(bits & ((1 << 52) - 1));
        prop_assert_eq!(set.len(), set.bits().count_ones() as usize);
        prop_assert_eq!(set.iter().count(), set.len());
        let rebuilt: CardSet = set.iter().collect();
        prop_assert_eq!(rebuilt, set);
        for c in set.iter() {
            prop_assert!(set.contains(c));
            prop_assert!(!set.without(c).contains(c));
        }
    }

    #[test]
    fn cards_are_conserved(seed in any::<u64>(), plies in 0usize..=52) {
        let s = playout(seed, plies);
        let hands = s.hands();
        let mut held = CardSet::EMPTY;
        for h in hands {
            prop_assert!(held.is_disjoint(*h));
            held = held.union(*h);
        }
        let played = s.history().played_cards();
        prop_assert!(held.is_disjoint(played));
        prop_assert_eq!(held.union(played).len(), 52);
        prop_assert_eq!(s.cards_remaining(), 52 - s.history().len());
        let sizes: Vec<usize> = hands.iter().map(|h| h.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let captured: usize = s.piles().iter().map(|p| p.len()).sum::<usize>();
        prop_assert!(captured <= s.history().tricks().filter(|t| t.len() == 4).count() * 4);
    }

    #[test]
    fn legal_moves_are_in_hand_and_nonempty(seed in any::<u64>(), plies in 0usize..52) {
        let s = playout(seed, plies);
        let legal = s.legal_moves().unwrap();
        prop_assert!(!legal.is_empty());
        prop_assert_eq!(legal.difference(s.hand(s.to_play())), CardSet::EMPTY);
        prop_assert_eq!(s.view(s.to_play()).legal_moves(), legal);
    }

    #[test]
    fn finished_games_score_consistently(seed in any::<u64>()) {
        let s = playout(seed, 52);
        let sc = s.score().unwrap();
        prop_assert_eq!(sc.per_team[0], sc.per_player[0] + sc.per_player[2]);
        prop_assert_eq!(sc.per_team[1], sc.per_player[1] + sc.per_player[3]);
        prop_assert_eq!(s.team_differential().unwrap(), sc.per_team[0] - sc.per_team[1]);
        let line = serialize_game(&s);
        prop_assert_eq!(parse_game(&line).unwrap(), s);
    }

    #[test]
    fn partial_records_round_trip(seed in any::<u64>(), plies in 0usize..=52) {
        let s = playout(seed, plies);
        let line = GameRecord::from_state(&s).to_line();
        let back = GameRecord::parse(&line).unwrap().to_state().unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn views_admit_the_true_deal_and_samples(seed in any::<u64>(), plies in 0usize..52, who in 0usize..4) {
        let s = playout(seed, plies);
        let view = s.view(Seat::new(who));
        let vc = void_constraints(&view.history, view.seat);
        let truth = Scenario { observer: view.seat, hands: *s.hands() };
        prop_assert!(truth.is_compatible(&view, &vc));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sampled = sample_scenario(&view, &vc, &mut rng).unwrap();
        prop_assert!(sampled.is_compatible(&view, &vc));
    }

    #[test]
    fn allocation_is_even_and_complete(budget in 0usize..500, strata in 1usize..40) {
        let a = allocate(budget, strata);
        prop_assert_eq!(a.len(), strata);
        prop_assert_eq!(a.iter().sum::<usize>(), budget);
        prop_assert!(a.iter().max().unwrap() - a.iter().min().unwrap() <= 1);
    }

    #[test]
    fn epsilon_is_a_fraction(entries in proptest::collection::vec(-100i32..100, 28)) {
        let n = 8;
        let mut xi = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                xi[i][j] = entries[k] as f64;
                xi[j][i] = -(entries[k] as f64);
                k += 1;
            }
        }
        let e = epsilon(&xi);
        prop_assert!((0.0..=1.0).contains(&e));
    }
}
