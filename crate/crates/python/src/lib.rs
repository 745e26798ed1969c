//! Python module `gongzhu`: games, agents, matches and the ε metric.
//!
//! Cards cross the boundary as two-character tokens (`"SQ"`, `"HT"`,
//! `"D2"`); structured results come back as plain dicts and lists.

use std::sync::{Arc, Mutex};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;

use gongzhu_core::agents::{Agent as CoreAgent, GameRng};
use gongzhu_core::engine::{parse_game, player_points, serialize_game, GameRecord};
use gongzhu_core::eval::{self, MatchConfig};
use gongzhu_core::nn::{Network, POLICY_DIM};
use gongzhu_core::registry::{make_agent, needs_model, AGENT_NAMES};
use gongzhu_core::{Card, CardSet, GameState, Seat};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn card(token: &str) -> PyResult<Card> {
    token.parse().map_err(value_err)
}

fn tokens(set: CardSet) -> Vec<String> {
    set.iter().map(|c| c.to_string()).collect()
}

fn seat(i: usize) -> PyResult<Seat> {
    if i < 4 {
        Ok(Seat::new(i))
    } else {
        Err(PyValueError::new_err(format!("seat {i} out of range 0..4")))
    }
}

/// Parse JSON into Python objects through the standard library.
fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn load_network(path: Option<&str>) -> PyResult<Option<Arc<Network<f32>>>> {
    path.map(|p| Network::load_file(p).map(Arc::new).map_err(|e| PyRuntimeError::new_err(e.to_string())))
        .transpose()
}

/// A deal in progress.
#[pyclass(name = "Game", module = "gongzhu", skip_from_py_object)]
#[derive(Clone)]
pub struct PyGame {
    state: GameState,
}

#[pymethods]
impl PyGame {
    /// Shuffle and deal from `seed`.
    #[new]
    fn new(seed: u64) -> Self {
        PyGame {
            state: GameState::deal(seed),
        }
    }

    /// Game from explicit hands (lists of card tokens) and a first leader.
    #[staticmethod]
    fn from_hands(hands: [Vec<String>; 4], leader: usize) -> PyResult<Self> {
        let mut sets = [CardSet::EMPTY; 4];
        for (set, hand) in sets.iter_mut().zip(&hands) {
            for t in hand {
                set.insert(card(t)?);
            }
        }
        let state = GameState::from_hands(sets, seat(leader)?).map_err(value_err)?;
        Ok(PyGame { state })
    }

    /// Parse a one-line game record (finished or not).
    #[staticmethod]
    fn from_record(line: &str) -> PyResult<Self> {
        let rec = GameRecord::parse(line).map_err(value_err)?;
        let state = rec.to_state().map_err(value_err)?;
        Ok(PyGame { state })
    }

    fn record(&self) -> String {
        if self.state.is_terminal() {
            serialize_game(&self.state)
        } else {
            GameRecord::from_state(&self.state).to_line()
        }
    }

    fn to_play(&self) -> usize {
        self.state.to_play().index()
    }

    fn is_terminal(&self) -> bool {
        self.state.is_terminal()
    }

    fn legal_moves(&self) -> PyResult<Vec<String>> {
        self.state.legal_moves().map(tokens).map_err(value_err)
    }

    fn hand(&self, seat_index: usize) -> PyResult<Vec<String>> {
        Ok(tokens(self.state.hand(seat(seat_index)?)))
    }

    /// Every play so far as `(seat, card)`.
    fn history(&self) -> Vec<(usize, String)> {
        self.state
            .history()
            .events()
            .iter()
            .map(|e| (e.player.index(), e.card.to_string()))
            .collect()
    }

    /// Play a card for the seat to move; returns the trick winner when the
    /// card completes a trick.
    fn play(&mut self, token: &str) -> PyResult<Option<usize>> {
        let c = card(token)?;
        self.state.play_mut(c).map(|w| w.map(Seat::index)).map_err(value_err)
    }

    /// Per-seat points; raises until the game is over.
    fn scores(&self) -> PyResult<[i32; 4]> {
        self.state.score().map(|s| s.per_player).map_err(value_err)
    }

    /// Team 0 (seats 0 and 2) minus team 1.
    fn team_differential(&self) -> PyResult<i32> {
        self.state.team_differential().map_err(value_err)
    }

    /// One seat's information set as a dict.
    fn view<'py>(&self, py: Python<'py>, seat_index: usize) -> PyResult<Bound<'py, PyAny>> {
        let v = self.state.view(seat(seat_index)?);
        json_to_py(py, &serde_json::to_string(&v).expect("views serialize"))
    }

    fn copy(&self) -> Self {
        self.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Game(plays={}, to_play={}, terminal={})",
            self.state.history().len(),
            self.state.to_play().index(),
            self.state.is_terminal()
        )
    }
}

/// An agent by registry name, with its own random stream.
#[pyclass(name = "Agent", module = "gongzhu")]
pub struct PyAgent {
    inner: Arc<dyn CoreAgent>,
    rng: Mutex<GameRng>,
}

#[pymethods]
impl PyAgent {
    /// `model` is a saved network, required by `scrofa`, `scrofa-us` and
    /// `net`.
    #[new]
    #[pyo3(signature = (name, model = None, seed = 0))]
    fn new(name: &str, model: Option<&str>, seed: u64) -> PyResult<Self> {
        let net = load_network(model)?;
        let inner = make_agent(name, net.as_ref()).map_err(value_err)?;
        Ok(PyAgent {
            inner,
            rng: Mutex::new(GameRng::seed_from_u64(seed)),
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    /// The card this agent plays for the seat to move.
    fn choose(&self, py: Python<'_>, game: &PyGame) -> PyResult<String> {
        if game.state.is_terminal() {
            return Err(PyValueError::new_err("the game is over"));
        }
        let view = game.state.view(game.state.to_play());
        let agent = self.inner.clone();
        let mut rng = self.rng.lock().unwrap().clone();
        let (c, rng) = py.detach(move || {
            let c = agent.choose(&view, &mut rng);
            (c, rng)
        });
        *self.rng.lock().unwrap() = rng;
        Ok(c.to_string())
    }
}

/// Match of `a` (seats 0 and 2) against `b` over `deals` deals; returns the
/// versioned report as a dict.
#[pyfunction]
#[pyo3(signature = (a, b, deals, seed = 0, paired = true, model = None))]
fn play_match<'py>(
    py: Python<'py>,
    a: &str,
    b: &str,
    deals: usize,
    seed: u64,
    paired: bool,
    model: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let net = if needs_model(a) || needs_model(b) { load_network(model)? } else { None };
    let agent_a = make_agent(a, net.as_ref()).map_err(value_err)?;
    let agent_b = make_agent(b, net.as_ref()).map_err(value_err)?;
    let config = MatchConfig { deals, seed, paired };
    let report = py.detach(|| eval::run_match(&*agent_a, &*agent_b, &config).report);
    json_to_py(py, &serde_json::to_string(&report).expect("reports serialize"))
}

/// Intransitivity of an antisymmetric score matrix.
#[pyfunction]
fn epsilon(xi: Vec<Vec<f64>>) -> PyResult<f64> {
    let n = xi.len();
    if xi.iter().any(|row| row.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(eval::epsilon(&xi))
}

/// Points of one captured pile.
#[pyfunction]
fn pile_points(cards: Vec<String>) -> PyResult<i32> {
    let mut pile = CardSet::EMPTY;
    for t in &cards {
        pile.insert(card(t)?);
    }
    Ok(player_points(pile))
}

/// Re-score a finished game record; returns the per-seat points.
#[pyfunction]
fn rescore(line: &str) -> PyResult<[i32; 4]> {
    let state = parse_game(line).map_err(value_err)?;
    state.score().map(|s| s.per_player).map_err(value_err)
}

/// Policy logits (one per card index) and value of `model` for a seat's view.
#[pyfunction]
fn evaluate(model: &str, game: &PyGame, seat_index: usize) -> PyResult<(Vec<f64>, f64)> {
    use gongzhu_core::nn::{encode_view, Evaluator};
    let net = load_network(Some(model))?.unwrap();
    let view = game.state.view(seat(seat_index)?);
    let out = net.evaluate(&encode_view(&view));
    Ok((out.logits[..POLICY_DIM].to_vec(), out.value))
}

#[pyfunction]
fn agent_names() -> Vec<&'static str> {
    AGENT_NAMES.to_vec()
}

#[pymodule]
fn gongzhu(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_class::<PyAgent>()?;
    m.add_function(wrap_pyfunction!(play_match, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(pile_points, m)?)?;
    m.add_function(wrap_pyfunction!(rescore, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(agent_names, m)?)?;
    m.add("REPORT_SCHEMA_VERSION", eval::REPORT_SCHEMA_VERSION)?;
    Ok(())
}
