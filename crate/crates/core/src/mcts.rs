//! UCB tree search over full-information states.
//!
//! Node statistics are kept as team 0 minus team 1 points; each mover reads
//! them with its own team's sign. Leaves are scored by the evaluator's value
//! head, finished games by the exact score. There are no policy priors:
//! unvisited children are tried once each in card order, then
//! `v_j + c·sqrt(ln N / n_j)` decides, ties going to the lower card. Forced
//! replies are played through without creating nodes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Card, GameState, Seat};
use crate::nn::{encode_state, EncodeMode, Evaluator, POLICY_DIM};

/// How many simulations a search gets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    /// `2 × legal moves`, used in self-play.
    Training,
    /// `10 + 2 × legal moves`, used when playing for real.
    Evaluation,
    Fixed(usize),
}

impl Budget {
    pub fn simulations(self, legal: usize) -> usize {
        match self {
            Budget::Training => 2 * legal,
            Budget::Evaluation => 10 + 2 * legal,
            Budget::Fixed(n) => n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Exploration constant, in game points.
    pub c: f64,
    pub budget: Budget,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            c: 30.0,
            budget: Budget::Evaluation,
        }
    }
}

impl SearchConfig {
    pub fn training() -> SearchConfig {
        SearchConfig {
            budget: Budget::Training,
            ..SearchConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildStats {
    pub card: Card,
    pub visits: u32,
    /// Mean backed-up value from the root mover's side.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub mover: Seat,
    /// Normalized root visit counts over the 52 cards.
    pub distribution: [f64; POLICY_DIM],
    /// Mean of all backed-up values, from the root mover's side.
    pub root_value: f64,
    /// Value of the explored tree when every mover takes its best explored
    /// child, from the root mover's side. Equals the game value once the
    /// tree covers the whole endgame.
    pub tree_value: f64,
    pub children: Vec<ChildStats>,
    pub simulations: usize,
}

impl SearchResult {
    pub fn most_visited(&self) -> Card {
        let mut best = &self.children[0];
        for c in &self.children[1..] {
            if c.visits > best.visits {
                best = c;
            }
        }
        best.card
    }
}

/// UCB score of one child for the player choosing among them.
pub fn ucb_score(mean: f64, visits: u32, parent_visits: u32, c: f64) -> f64 {
    mean + c * ((parent_visits as f64).ln() / visits as f64).sqrt()
}

/// Index of the child to descend into. `children` holds (mean value from the
/// chooser's side, visit count). Unvisited children come first; ties go to
/// the lowest index.
pub fn select_child(children: &[(f64, u32)], parent_visits: u32, c: f64) -> Option<usize> {
    if let Some(i) = children.iter().position(|&(_, n)| n == 0) {
        return Some(i);
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, &(v, n)) in children.iter().enumerate() {
        let s = ucb_score(v, n, parent_visits, c);
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, i));
        }
    }
    best.map(|(_, i)| i)
}

struct Node {
    card: Card,
    children: Vec<usize>,
    expanded: bool,
    /// Sign of the side to move here, set on expansion.
    sign: f64,
    visits: u32,
    /// Sum of team-0 values backed up through this node.
    total: f64,
}

impl Node {
    fn new(card: Card) -> Node {
        Node {
            card,
            children: Vec::new(),
            expanded: false,
            sign: 0.0,
            visits: 0,
            total: 0.0,
        }
    }

    fn mean(&self) -> f64 {
        self.total / self.visits as f64
    }
}

/// Team-0 value of a state: exact when finished, otherwise the evaluator's
/// prediction for the side to move, converted.
pub fn leaf_value(state: &GameState, evaluator: &dyn Evaluator) -> f64 {
    if state.is_terminal() {
        return state.team_differential().expect("finished game") as f64;
    }
    let mover = state.to_play();
    let x = encode_state(state, mover, EncodeMode::Exact);
    evaluator.evaluate(&x).value * mover.team_sign()
}

fn expand(tree: &mut Vec<Node>, at: usize, state: &GameState) {
    let legal = state.legal_moves().expect("expanding a live state");
    let first = tree.len();
    tree.extend(legal.iter().map(Node::new));
    tree[at].children = (first..tree.len()).collect();
    tree[at].expanded = true;
    tree[at].sign = state.to_play().team_sign();
}

/// Team-0 value of the explored tree under best play by each mover, with
/// unexpanded nodes standing at their mean.
fn tree_value(tree: &[Node], at: usize) -> f64 {
    let node = &tree[at];
    let visited: Vec<usize> = node
        .children
        .iter()
        .copied()
        .filter(|&k| tree[k].visits > 0)
        .collect();
    if !node.expanded || visited.is_empty() {
        return node.mean();
    }
    let s = node.sign;
    s * visited
        .into_iter()
        .map(|k| s * tree_value(tree, k))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Play out moves that have no alternative. Nodes then only sit where
/// somebody has a choice (or at the end of the game).
fn play_forced(state: &mut GameState) {
    while !state.is_terminal() {
        let legal = state.legal_moves().unwrap();
        if legal.len() != 1 {
            break;
        }
        state.play_mut(legal.lowest().unwrap()).unwrap();
    }
}

/// Run the configured number of simulations from `root`.
pub fn search(root: &GameState, evaluator: &dyn Evaluator, config: &SearchConfig) -> SearchResult {
    let legal = root.legal_moves().expect("search needs a live state");
    let sims = config.budget.simulations(legal.len()).max(1);
    let mover = root.to_play();
    let mut tree = vec![Node::new(Card::from_index(0))];
    expand(&mut tree, 0, root);
    let mut path = Vec::with_capacity(53);
    let mut scratch: Vec<(f64, u32)> = Vec::with_capacity(13);

    for _ in 0..sims {
        let mut state = root.clone();
        let mut at = 0;
        path.clear();
        path.push(0);
        let value = loop {
            if state.is_terminal() {
                break state.team_differential().unwrap() as f64;
            }
            if !tree[at].expanded {
                expand(&mut tree, at, &state);
            }
            let sign = state.to_play().team_sign();
            scratch.clear();
            scratch.extend(tree[at].children.iter().map(|&k| {
                let n = &tree[k];
                let mean = if n.visits == 0 { 0.0 } else { sign * n.mean() };
                (mean, n.visits)
            }));
            let pick = select_child(&scratch, tree[at].visits, config.c).unwrap();
            let child = tree[at].children[pick];
            state.play_mut(tree[child].card).unwrap();
            play_forced(&mut state);
            path.push(child);
            at = child;
            if tree[child].visits == 0 {
                break leaf_value(&state, evaluator);
            }
        };
        for &k in &path {
            tree[k].visits += 1;
            tree[k].total += value;
        }
    }

    let sign = mover.team_sign();
    let mut distribution = [0.0; POLICY_DIM];
    let children: Vec<ChildStats> = tree[0]
        .children
        .iter()
        .map(|&k| {
            let n = &tree[k];
            distribution[n.card.index()] = n.visits as f64 / sims as f64;
            ChildStats {
                card: n.card,
                visits: n.visits,
                value: if n.visits == 0 { 0.0 } else { sign * n.mean() },
            }
        })
        .collect();
    SearchResult {
        mover,
        distribution,
        root_value: sign * tree[0].mean(),
        tree_value: sign * tree_value(&tree, 0),
        children,
        simulations: sims,
    }
}

/// Pick a card from a search: the most visited at temperature 0, otherwise
/// sampled with probability proportional to `visits^(1/τ)`.
pub fn choose_from_visits<R: Rng + ?Sized>(result: &SearchResult, temperature: f64, rng: &mut R) -> Card {
    if temperature <= 0.0 {
        return result.most_visited();
    }
    let weights: Vec<f64> = result
        .children
        .iter()
        .map(|c| (c.visits as f64).powf(1.0 / temperature))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (c, w) in result.children.iter().zip(&weights) {
        if x < *w {
            return c.card;
        }
        x -= w;
    }
    result.children.last().unwrap().card
}

pub fn mcts_play<R: Rng + ?Sized>(
    state: &GameState,
    evaluator: &dyn Evaluator,
    config: &SearchConfig,
    temperature: f64,
    rng: &mut R,
) -> Card {
    let legal = state.legal_moves().expect("live state");
    if legal.len() == 1 {
        return legal.lowest().unwrap();
    }
    choose_from_visits(&search(state, evaluator, config), temperature, rng)
}

/// Exact team-0 value under alternating team best play. Exponential; meant
/// for endgames.
pub fn minimax(state: &GameState) -> f64 {
    if state.is_terminal() {
        return state.team_differential().unwrap() as f64;
    }
    let sign = state.to_play().team_sign();
    state
        .legal_moves()
        .unwrap()
        .iter()
        .map(|c| sign * minimax(&state.play(c).unwrap()))
        .fold(f64::NEG_INFINITY, f64::max)
        * sign
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::ZeroEvaluator;

    fn endgame(seed: u64, left: usize) -> GameState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = GameState::deal(seed);
        while s.cards_remaining() > left {
            let m = s.legal_moves().unwrap();
            s.play_mut(m.nth(rng.gen_range(0..m.len())).unwrap()).unwrap();
        }
        s
    }

    #[test]
    fn ucb_example() {
        let a = ucb_score(5.0, 2, 10, 30.0);
        let b = ucb_score(0.0, 1, 10, 30.0);
        assert!((a - 37.19).abs() < 0.01, "{a}");
        assert!((b - 45.52).abs() < 0.01, "{b}");
        assert_eq!(select_child(&[(5.0, 2), (0.0, 1)], 10, 30.0), Some(1));
    }

    #[test]
    fn zero_exploration_is_greedy() {
        assert_eq!(select_child(&[(5.0, 2), (0.0, 1), (7.0, 5)], 8, 0.0), Some(2));
    }

    #[test]
    fn equal_values_prefer_fewer_visits() {
        assert_eq!(select_child(&[(3.0, 4), (3.0, 2), (3.0, 3)], 9, 30.0), Some(1));
    }

    #[test]
    fn unvisited_first_and_lowest_tie() {
        assert_eq!(select_child(&[(9.0, 3), (0.0, 0), (0.0, 0)], 3, 30.0), Some(1));
        assert_eq!(select_child(&[(1.0, 2), (1.0, 2)], 4, 30.0), Some(0));
        assert_eq!(select_child(&[], 0, 30.0), None);
    }

    #[test]
    fn budgets() {
        assert_eq!(Budget::Training.simulations(7), 14);
        assert_eq!(Budget::Evaluation.simulations(7), 24);
    }

    #[test]
    fn single_legal_is_point_mass() {
        let s = endgame(1, 4);
        let r = search(&s, &ZeroEvaluator, &SearchConfig::default());
        let legal = s.legal_moves().unwrap();
        assert_eq!(legal.len(), 1);
        assert_eq!(r.distribution[legal.lowest().unwrap().index()], 1.0);
    }

    #[test]
    fn last_trick_value_is_exact() {
        for seed in 0..20 {
            let s = endgame(seed, 4);
            let r = search(&s, &ZeroEvaluator, &SearchConfig::default());
            let mut end = s.clone();
            while !end.is_terminal() {
                end.play_mut(end.legal_moves().unwrap().lowest().unwrap()).unwrap();
            }
            let exact = end.team_differential().unwrap() as f64 * s.to_play().team_sign();
            assert_eq!(r.root_value, exact);
        }
    }

    #[test]
    fn visits_sum_to_budget_on_legal_moves() {
        let s = endgame(3, 30);
        let r = search(&s, &ZeroEvaluator, &SearchConfig::default());
        let legal = s.legal_moves().unwrap();
        let total: u32 = r.children.iter().map(|c| c.visits).sum();
        assert_eq!(total as usize, r.simulations);
        assert_eq!(r.simulations, 10 + 2 * legal.len());
        for c in crate::engine::Card::all() {
            if !legal.contains(c) {
                assert_eq!(r.distribution[c.index()], 0.0);
            }
        }
        assert!((r.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn temperature_zero_takes_most_visited() {
        let s = endgame(4, 20);
        let r = search(&s, &ZeroEvaluator, &SearchConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(choose_from_visits(&r, 0.0, &mut rng), r.most_visited());
    }

    #[test]
    fn temperature_one_follows_visit_ratios() {
        let s = endgame(6, 40);
        let r = search(&s, &ZeroEvaluator, &SearchConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let mut counts = [0usize; 52];
        for _ in 0..n {
            counts[choose_from_visits(&r, 1.0, &mut rng).index()] += 1;
        }
        for c in &r.children {
            let p = counts[c.card.index()] as f64 / n as f64;
            assert!((p - r.distribution[c.card.index()]).abs() < 0.03);
        }
    }
}
