//! One game: a single task owns the state and is the only writer.
//!
//! Local agents think on the blocking pool. A remote seat is prompted with
//! `your_turn` and has `turn_timeout` to answer; on expiry, or while its
//! client is disconnected, Mr. Random plays for it.

use std::sync::Arc;
use std::time::Duration;

use tokio::sync::mpsc::{UnboundedReceiver, UnboundedSender};
use tokio::time::{timeout_at, Instant};

use gongzhu_core::agents::{Agent, GameRng, MrRandom};
use gongzhu_core::belief::{decide, BeliefConfig, Decision};
use gongzhu_core::engine::resolve_trick;
use gongzhu_core::eval::seat_rng;
use gongzhu_core::nn::Network;
use gongzhu_core::{Card, CardSet, GameState, PlayEvent, Seat};

use crate::protocol::ServerMsg;
use crate::store::{now_ms, MatchRecord, Store};

#[derive(Debug)]
pub enum TableEvent {
    Attach {
        seat: Seat,
        conn: u64,
        out: UnboundedSender<ServerMsg>,
        hints: bool,
    },
    Detach {
        seat: Seat,
        conn: u64,
    },
    Play {
        seat: Seat,
        conn: u64,
        card: Card,
    },
}

pub enum Controller {
    Local(Arc<dyn Agent>),
    Remote,
}

struct Remote {
    conn: u64,
    out: Option<UnboundedSender<ServerMsg>>,
    hints: bool,
}

pub struct Table {
    pub id: u64,
    pub players: [String; 4],
    state: GameState,
    deal_seed: u64,
    controllers: [Controller; 4],
    remotes: [Remote; 4],
    rngs: [GameRng; 4],
    events: UnboundedReceiver<TableEvent>,
    turn_timeout: Duration,
    hint_net: Option<Arc<Network<f32>>>,
    store: Arc<Store>,
    started_ms: u64,
}

impl Table {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: u64,
        players: [String; 4],
        controllers: [Controller; 4],
        deal_seed: u64,
        events: UnboundedReceiver<TableEvent>,
        turn_timeout: Duration,
        hint_net: Option<Arc<Network<f32>>>,
        store: Arc<Store>,
    ) -> Table {
        Table {
            id,
            players,
            state: GameState::deal(deal_seed),
            deal_seed,
            controllers,
            remotes: std::array::from_fn(|_| Remote {
                conn: 0,
                out: None,
                hints: false,
            }),
            rngs: Seat::ALL.map(|s| seat_rng(deal_seed, s)),
            events,
            turn_timeout,
            hint_net,
            store,
            started_ms: now_ms(),
        }
    }

    fn send(&mut self, seat: Seat, msg: ServerMsg) {
        let r = &mut self.remotes[seat.index()];
        if let Some(out) = &r.out {
            if out.send(msg).is_err() {
                r.out = None;
            }
        }
    }

    fn broadcast(&mut self, msg: &ServerMsg) {
        for seat in Seat::ALL {
            self.send(seat, msg.clone());
        }
    }

    fn deal_msg(&self, seat: Seat) -> ServerMsg {
        ServerMsg::Deal {
            hand: self.state.initial_hands()[seat.index()],
            first_leader: self.state.first_leader().index() as u8,
        }
    }

    fn sync_msg(&self, seat: Seat) -> ServerMsg {
        let view = self.state.view(seat);
        let your_turn = !self.state.is_terminal() && self.state.to_play() == seat;
        let legal = if your_turn { view.legal_moves().to_vec() } else { Vec::new() };
        ServerMsg::StateSync {
            view,
            players: self.players.clone(),
            your_turn,
            legal,
        }
    }

    fn handle(&mut self, ev: TableEvent, turn: Option<Seat>) -> Option<Card> {
        match ev {
            TableEvent::Attach { seat, conn, out, hints } => {
                let first = self.state.history().is_empty();
                self.remotes[seat.index()] = Remote {
                    conn,
                    out: Some(out),
                    hints,
                };
                let msg = if first { self.deal_msg(seat) } else { self.sync_msg(seat) };
                self.send(seat, msg);
                None
            }
            TableEvent::Detach { seat, conn } => {
                if self.remotes[seat.index()].conn == conn {
                    self.remotes[seat.index()].out = None;
                }
                None
            }
            TableEvent::Play { seat, conn, card } => {
                if self.remotes[seat.index()].conn != conn {
                    // a resumed session took the seat; the old connection is gone
                    return None;
                }
                if Some(seat) != turn {
                    self.send(seat, ServerMsg::Play { seat: seat.index() as u8, card, legal: false });
                    self.send(seat, ServerMsg::error("not your turn", false));
                    return None;
                }
                let legal = self.state.legal_moves().map(|l| l.contains(card)).unwrap_or(false);
                if legal {
                    Some(card)
                } else {
                    self.send(seat, ServerMsg::Play { seat: seat.index() as u8, card, legal: false });
                    self.send(seat, ServerMsg::error(format!("{card} is not a legal play"), false));
                    None
                }
            }
        }
    }

    /// Handle events that are already queued, outside anyone's remote turn.
    fn drain(&mut self) {
        while let Ok(ev) = self.events.try_recv() {
            self.handle(ev, None);
        }
    }

    async fn agent_move(&mut self, seat: Seat, agent: Arc<dyn Agent>) -> Card {
        let view = self.state.view(seat);
        let mut rng = self.rngs[seat.index()].clone();
        let (card, rng) = tokio::task::spawn_blocking(move || {
            let c = agent.choose(&view, &mut rng);
            (c, rng)
        })
        .await
        .expect("agent panicked");
        self.rngs[seat.index()] = rng;
        card
    }

    async fn random_move(&mut self, seat: Seat) -> Card {
        self.agent_move(seat, Arc::new(MrRandom)).await
    }

    async fn hint(&self, seat: Seat) -> Option<Decision> {
        let net = self.hint_net.clone()?;
        if !self.remotes[seat.index()].hints {
            return None;
        }
        let view = self.state.view(seat);
        let mut rng = seat_rng(self.deal_seed ^ self.state.history().len() as u64, seat);
        tokio::task::spawn_blocking(move || decide(&view, &*net, &BeliefConfig::default(), &mut rng))
            .await
            .ok()
    }

    async fn remote_move(&mut self, seat: Seat) -> Card {
        'prompt: loop {
            if self.remotes[seat.index()].out.is_none() {
                return self.random_move(seat).await;
            }
            let hint = self.hint(seat).await;
            let legal = self.state.legal_moves().unwrap().to_vec();
            let trick = self.state.current_trick().to_vec();
            let deadline = Instant::now() + self.turn_timeout;
            self.send(
                seat,
                ServerMsg::YourTurn {
                    legal,
                    trick,
                    deadline_ms: self.turn_timeout.as_millis() as u64,
                    hint,
                },
            );
            loop {
                match timeout_at(deadline, self.events.recv()).await {
                    Err(_) => {
                        self.send(seat, ServerMsg::error("turn timed out; a random card was played", false));
                        return self.random_move(seat).await;
                    }
                    Ok(None) => return self.random_move(seat).await,
                    Ok(Some(ev)) => {
                        let reprompt = match &ev {
                            TableEvent::Attach { seat: s, .. } | TableEvent::Detach { seat: s, .. } => *s == seat,
                            TableEvent::Play { seat: s, conn, card } => {
                                *s == seat
                                    && *conn == self.remotes[seat.index()].conn
                                    && !self.state.legal_moves().unwrap().contains(*card)
                            }
                        };
                        if let Some(card) = self.handle(ev, Some(seat)) {
                            return card;
                        }
                        if reprompt {
                            continue 'prompt;
                        }
                    }
                }
            }
        }
    }

    /// Play the game to the end, persist it and report the result.
    pub async fn run(mut self) -> MatchRecord {
        self.drain();
        while !self.state.is_terminal() {
            self.drain();
            let seat = self.state.to_play();
            let card = match &self.controllers[seat.index()] {
                Controller::Local(agent) => {
                    let agent = agent.clone();
                    self.agent_move(seat, agent).await
                }
                Controller::Remote => self.remote_move(seat).await,
            };
            self.state.play_mut(card).expect("moves are checked before they are applied");
            self.broadcast(&ServerMsg::Play {
                seat: seat.index() as u8,
                card,
                legal: true,
            });
            if self.state.current_trick().is_empty() {
                let events = self.state.history().events();
                let trick: Vec<PlayEvent> = events[events.len() - 4..].to_vec();
                let winner = resolve_trick(&trick).expect("complete trick");
                let point_cards: CardSet = trick.iter().map(|e| e.card).filter(|c| c.is_point_card()).collect();
                self.broadcast(&ServerMsg::TrickResult {
                    winner: winner.index() as u8,
                    cards: trick,
                    point_cards,
                });
            }
        }
        let record = MatchRecord::from_game(self.players.clone(), &self.state, Some(self.deal_seed), self.started_ms);
        let record = self.store.append(record).expect("record store is writable");
        let score = self.state.score().unwrap();
        self.broadcast(&ServerMsg::GameResult {
            scores: score.per_player,
            team: score.per_team,
            record_id: record.id,
            record: record.record.clone(),
        });
        record
    }
}
