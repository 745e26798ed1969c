//! TCP protocol listener, session bookkeeping and the HTTP stats API.

use std::collections::{BTreeMap, HashMap};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::io::{AsyncBufRead, AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc::{unbounded_channel, UnboundedSender};
use tokio::task::JoinHandle;

use gongzhu_core::agents::{Agent, GameRng};
use gongzhu_core::nn::Network;
use gongzhu_core::registry::{make_agent, RegistryError};
use gongzhu_core::Seat;

use crate::protocol::{ClientMsg, ServerMsg, MAX_LINE, PROTOCOL_VERSION};
use crate::stats;
use crate::store::{MatchRecord, Store, StoreError};
use crate::table::{Controller, Table, TableEvent};

pub const DEFAULT_TURN_TIMEOUT: Duration = Duration::from_secs(30);

/// Most games one `POST /api/matches` may request.
pub const MAX_MATCH_GAMES: usize = 1000;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Agent(#[from] RegistryError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone)]
pub struct ServeConfig {
    pub host: IpAddr,
    /// Protocol port; 0 picks a free one.
    pub port: u16,
    /// HTTP port; `port + 1` if absent, or a free one when `port` is 0.
    pub http_port: Option<u16>,
    /// Agents that may fill seats, by registry name.
    pub agents: Vec<String>,
    pub store: PathBuf,
    pub turn_timeout: Duration,
    /// Network behind `scrofa`, `scrofa-us`, `net` and the hints.
    pub model: Option<Arc<Network<f32>>>,
    /// Directory served as static files under `/`.
    pub web_root: Option<PathBuf>,
    /// Seed for deals and session tokens; random if absent.
    pub seed: Option<u64>,
}

impl ServeConfig {
    pub fn new(port: u16, agents: Vec<String>, store: impl Into<PathBuf>) -> ServeConfig {
        ServeConfig {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port,
            http_port: None,
            agents,
            store: store.into(),
            turn_timeout: DEFAULT_TURN_TIMEOUT,
            model: None,
            web_root: None,
            seed: None,
        }
    }
}

struct Session {
    game: u64,
    seat: Seat,
    players: [String; 4],
    events: UnboundedSender<TableEvent>,
}

pub struct Arena {
    config: ServeConfig,
    store: Arc<Store>,
    agents: BTreeMap<String, Arc<dyn Agent>>,
    sessions: Mutex<HashMap<String, Session>>,
    rng: Mutex<GameRng>,
    next_game: AtomicU64,
    next_conn: AtomicU64,
}

impl Arena {
    pub fn new(config: ServeConfig) -> Result<Arena, ServeError> {
        if config.agents.is_empty() {
            return Err(ServeError::Config("at least one agent is required".into()));
        }
        let mut agents = BTreeMap::new();
        for name in &config.agents {
            agents.insert(name.clone(), make_agent(name, config.model.as_ref())?);
        }
        let store = Arc::new(Store::open(&config.store)?);
        let seed = config.seed.unwrap_or_else(rand::random);
        Ok(Arena {
            store,
            agents,
            sessions: Mutex::new(HashMap::new()),
            rng: Mutex::new(GameRng::seed_from_u64(seed)),
            next_game: AtomicU64::new(1),
            next_conn: AtomicU64::new(1),
            config,
        })
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn agent_names(&self) -> Vec<String> {
        self.config.agents.clone()
    }

    fn agent(&self, name: &str) -> Result<Arc<dyn Agent>, String> {
        self.agents
            .get(name)
            .cloned()
            .ok_or_else(|| format!("agent {name:?} is not served here; available: {:?}", self.config.agents))
    }

    fn deal_seed(&self) -> u64 {
        self.rng.lock().unwrap().gen()
    }

    fn token(&self) -> String {
        format!("{:032x}", self.rng.lock().unwrap().gen::<u128>())
    }

    fn table(&self, players: [String; 4], controllers: [Controller; 4], deal_seed: u64) -> (Table, UnboundedSender<TableEvent>) {
        let (tx, rx) = unbounded_channel();
        let id = self.next_game.fetch_add(1, Ordering::Relaxed);
        let table = Table::new(
            id,
            players,
            controllers,
            deal_seed,
            rx,
            self.config.turn_timeout,
            self.config.model.clone(),
            self.store.clone(),
        );
        (table, tx)
    }

    /// Play one game among served agents and persist it.
    pub async fn play_local(&self, players: [String; 4], deal_seed: u64) -> Result<MatchRecord, String> {
        let mut controllers = Vec::with_capacity(4);
        for p in &players {
            controllers.push(Controller::Local(self.agent(p)?));
        }
        let controllers: [Controller; 4] = controllers.try_into().ok().unwrap();
        let (table, _tx) = self.table(players, controllers, deal_seed);
        Ok(table.run().await)
    }
}

/// A running server. Dropping it does not stop the tasks; call
/// [`ServerHandle::shutdown`].
pub struct ServerHandle {
    pub protocol_addr: SocketAddr,
    pub http_addr: SocketAddr,
    pub arena: Arc<Arena>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn shutdown(self) {
        for t in self.tasks {
            t.abort();
        }
    }

    /// Run until both listeners stop.
    pub async fn wait(self) {
        for t in self.tasks {
            let _ = t.await;
        }
    }
}

async fn bind(addr: SocketAddr) -> Result<TcpListener, ServeError> {
    TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })
}

/// Open the store, bind both ports and start serving.
pub async fn serve(config: ServeConfig) -> Result<ServerHandle, ServeError> {
    let host = config.host;
    let http_port = match (config.http_port, config.port) {
        (Some(p), _) => p,
        (None, 0) => 0,
        (None, p) => p
            .checked_add(1)
            .ok_or_else(|| ServeError::Config("no port above 65535 for HTTP".into()))?,
    };
    let protocol = bind(SocketAddr::new(host, config.port)).await?;
    let http = bind(SocketAddr::new(host, http_port)).await?;
    let arena = Arc::new(Arena::new(config)?);
    let protocol_addr = protocol.local_addr().map_err(|source| ServeError::Bind {
        addr: SocketAddr::new(host, 0),
        source,
    })?;
    let http_addr = http.local_addr().map_err(|source| ServeError::Bind {
        addr: SocketAddr::new(host, http_port),
        source,
    })?;

    let a = arena.clone();
    let accept = tokio::spawn(async move {
        loop {
            match protocol.accept().await {
                Ok((stream, _)) => {
                    tokio::spawn(connection(a.clone(), stream));
                }
                Err(_) => tokio::time::sleep(Duration::from_millis(50)).await,
            }
        }
    });
    let app = router(arena.clone());
    let web = tokio::spawn(async move {
        let _ = axum::serve(http, app).await;
    });
    Ok(ServerHandle {
        protocol_addr,
        http_addr,
        arena,
        tasks: vec![accept, web],
    })
}

#[derive(Debug)]
enum LineError {
    TooLong,
    Utf8,
    Io,
}

/// Next line without its terminator; `Ok(None)` at end of stream.
async fn read_line<R: AsyncBufRead + Unpin>(reader: &mut R) -> Result<Option<String>, LineError> {
    let mut buf = Vec::new();
    let n = (&mut *reader)
        .take(MAX_LINE as u64 + 1)
        .read_until(b'\n', &mut buf)
        .await
        .map_err(|_| LineError::Io)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
    } else if buf.len() > MAX_LINE {
        return Err(LineError::TooLong);
    }
    if buf.last() == Some(&b'\r') {
        buf.pop();
    }
    String::from_utf8(buf).map(Some).map_err(|_| LineError::Utf8)
}

struct Connection {
    id: u64,
    out: UnboundedSender<ServerMsg>,
    hints: Option<bool>,
    seated: Option<(Seat, u64, UnboundedSender<TableEvent>)>,
}

impl Connection {
    fn send(&self, msg: ServerMsg) {
        let _ = self.out.send(msg);
    }

    /// `Err` is a protocol violation: reported as fatal, then the
    /// connection is closed.
    fn handle(&mut self, arena: &Arc<Arena>, line: &str) -> Result<(), String> {
        if line.trim().is_empty() {
            return Ok(());
        }
        let msg = ClientMsg::parse(line).map_err(|e| format!("malformed message: {e}"))?;
        match (msg, self.hints) {
            (ClientMsg::Hello { version, hints, .. }, None) => {
                if let Some(v) = version {
                    if v != PROTOCOL_VERSION {
                        return Err(format!("protocol version {v} is not supported; expected {PROTOCOL_VERSION}"));
                    }
                }
                self.hints = Some(hints);
                self.send(ServerMsg::Hello {
                    server: format!("gongzhu-arena {}", env!("CARGO_PKG_VERSION")),
                    version: PROTOCOL_VERSION,
                    agents: arena.agent_names(),
                });
                Ok(())
            }
            (ClientMsg::Hello { .. }, Some(_)) => Err("duplicate hello".into()),
            (_, None) => Err("expected hello first".into()),
            (ClientMsg::Seat { token: Some(token), .. }, Some(hints)) => {
                self.resume(arena, &token, hints);
                Ok(())
            }
            (ClientMsg::Seat { seat, partner, opponents, .. }, Some(hints)) => {
                if let Some((_, _, events)) = &self.seated {
                    if !events.is_closed() {
                        return Err("already seated in a running game".into());
                    }
                }
                self.seat(arena, seat, partner, opponents, hints);
                Ok(())
            }
            (ClientMsg::Play { card }, Some(_)) => {
                let Some((seat, _, events)) = &self.seated else {
                    return Err("play before taking a seat".into());
                };
                let ev = TableEvent::Play {
                    seat: *seat,
                    conn: self.id,
                    card,
                };
                if events.send(ev).is_err() {
                    self.seated = None;
                    self.send(ServerMsg::error("the game is over; ask for a new seat", false));
                }
                Ok(())
            }
        }
    }

    fn seat(&mut self, arena: &Arc<Arena>, seat: Option<u8>, partner: Option<String>, opponents: Option<String>, hints: bool) {
        let seat = match seat.unwrap_or(0) {
            s @ 0..=3 => Seat::new(s as usize),
            s => return self.send(ServerMsg::error(format!("seat {s} does not exist"), false)),
        };
        let names = &arena.config.agents;
        let partner = partner.unwrap_or_else(|| names[0].clone());
        let opponents = opponents.unwrap_or_else(|| names[names.len() - 1].clone());
        let (p_agent, o_agent) = match (arena.agent(&partner), arena.agent(&opponents)) {
            (Ok(p), Ok(o)) => (p, o),
            (Err(e), _) | (_, Err(e)) => return self.send(ServerMsg::error(e, false)),
        };
        let mut players: [String; 4] = Default::default();
        let mut controllers: [Option<Controller>; 4] = Default::default();
        for s in Seat::ALL {
            let (name, c) = if s == seat {
                ("remote".to_string(), Controller::Remote)
            } else if s == seat.partner() {
                (partner.clone(), Controller::Local(p_agent.clone()))
            } else {
                (opponents.clone(), Controller::Local(o_agent.clone()))
            };
            players[s.index()] = name;
            controllers[s.index()] = Some(c);
        }
        let (table, events) = arena.table(players.clone(), controllers.map(Option::unwrap), arena.deal_seed());
        let game = table.id;
        let token = arena.token();
        self.send(ServerMsg::Seat {
            seat: seat.index() as u8,
            token: token.clone(),
            game,
            players: players.clone(),
        });
        // queued before the table starts, so the deal reaches the client
        // before any play
        let _ = events.send(TableEvent::Attach {
            seat,
            conn: self.id,
            out: self.out.clone(),
            hints,
        });
        arena.sessions.lock().unwrap().insert(
            token,
            Session {
                game,
                seat,
                players,
                events: events.clone(),
            },
        );
        self.seated = Some((seat, game, events));
        let a = arena.clone();
        tokio::spawn(async move {
            table.run().await;
            a.sessions.lock().unwrap().retain(|_, s| s.game != game);
        });
    }

    fn resume(&mut self, arena: &Arc<Arena>, token: &str, hints: bool) {
        let found = arena
            .sessions
            .lock()
            .unwrap()
            .get(token)
            .map(|s| (s.game, s.seat, s.players.clone(), s.events.clone()));
        let Some((game, seat, players, events)) = found else {
            return self.send(ServerMsg::error("unknown or expired token", false));
        };
        self.send(ServerMsg::Seat {
            seat: seat.index() as u8,
            token: token.to_string(),
            game,
            players,
        });
        let attach = TableEvent::Attach {
            seat,
            conn: self.id,
            out: self.out.clone(),
            hints,
        };
        if events.send(attach).is_err() {
            return self.send(ServerMsg::error("the game is over", false));
        }
        self.seated = Some((seat, game, events));
    }
}

async fn connection(arena: Arc<Arena>, stream: TcpStream) {
    let (rd, mut wr) = stream.into_split();
    let (tx, mut rx) = unbounded_channel::<ServerMsg>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            let fatal = matches!(msg, ServerMsg::Error { fatal: true, .. });
            if wr.write_all(msg.to_line().as_bytes()).await.is_err() || fatal {
                break;
            }
        }
        let _ = wr.shutdown().await;
    });
    let mut conn = Connection {
        id: arena.next_conn.fetch_add(1, Ordering::Relaxed),
        out: tx,
        hints: None,
        seated: None,
    };
    let mut reader = BufReader::new(rd);
    loop {
        let violation = match read_line(&mut reader).await {
            Ok(Some(line)) => match conn.handle(&arena, &line) {
                Ok(()) => continue,
                Err(e) => e,
            },
            Ok(None) | Err(LineError::Io) => break,
            Err(LineError::TooLong) => format!("line longer than {MAX_LINE} bytes"),
            Err(LineError::Utf8) => "line is not UTF-8".to_string(),
        };
        conn.send(ServerMsg::error(violation, true));
        break;
    }
    if let Some((seat, _, events)) = conn.seated.take() {
        let _ = events.send(TableEvent::Detach { seat, conn: conn.id });
    }
    drop(conn);
    let _ = writer.await;
}

#[derive(Serialize)]
struct ApiError {
    error: String,
}

fn not_found(message: String) -> Response {
    (StatusCode::NOT_FOUND, Json(ApiError { error: message })).into_response()
}

fn bad_request(message: String) -> Response {
    (StatusCode::BAD_REQUEST, Json(ApiError { error: message })).into_response()
}

#[derive(Serialize)]
struct AgentsBody {
    served: Vec<String>,
    recorded: Vec<String>,
}

#[derive(Deserialize)]
struct LeaderboardQuery {
    reference: Option<String>,
}

#[derive(Serialize)]
struct EpsilonBody {
    agents: Vec<String>,
    epsilon: Option<f64>,
}

#[derive(Deserialize)]
struct GamesQuery {
    offset: Option<usize>,
    limit: Option<usize>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct MatchRequest {
    pub players: [String; 4],
    pub games: usize,
    /// Deal seeds are derived from it; random if absent.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Play each deal twice with the teams swapped.
    #[serde(default)]
    pub paired: bool,
}

pub fn router(arena: Arc<Arena>) -> Router {
    let api = Router::new()
        .route("/api/agents", get(agents))
        .route("/api/agents/{name}", get(agent))
        .route("/api/leaderboard", get(leaderboard))
        .route("/api/matrix", get(matrix))
        .route("/api/epsilon", get(epsilon))
        .route("/api/games", get(games))
        .route("/api/games/{id}", get(game))
        .route("/api/games/{id}/record", get(game_record))
        .route("/api/matches", post(matches));
    api.fallback(static_file).with_state(arena)
}

async fn agents(State(a): State<Arc<Arena>>) -> Json<AgentsBody> {
    Json(AgentsBody {
        served: a.agent_names(),
        recorded: stats::matrix(&a.store.all()).names,
    })
}

async fn agent(State(a): State<Arc<Arena>>, UrlPath(name): UrlPath<String>) -> Response {
    match stats::agent_summary(&a.store.all(), &name) {
        Some(s) => Json(s).into_response(),
        None => not_found(format!("unknown agent {name:?}")),
    }
}

async fn leaderboard(State(a): State<Arc<Arena>>, Query(q): Query<LeaderboardQuery>) -> Json<Vec<stats::Standing>> {
    let reference = q.reference.unwrap_or_else(|| "greed".to_string());
    Json(stats::leaderboard(&a.store.all(), &reference))
}

async fn matrix(State(a): State<Arc<Arena>>) -> Json<stats::Matrix> {
    Json(stats::matrix(&a.store.all()))
}

async fn epsilon(State(a): State<Arc<Arena>>) -> Json<EpsilonBody> {
    let m = stats::matrix(&a.store.all());
    Json(EpsilonBody {
        epsilon: m.epsilon(),
        agents: m.names,
    })
}

async fn games(State(a): State<Arc<Arena>>, Query(q): Query<GamesQuery>) -> Json<Vec<MatchRecord>> {
    let offset = q.offset.unwrap_or(0);
    let limit = q.limit.unwrap_or(100);
    Json(a.store.all().into_iter().skip(offset).take(limit).collect())
}

async fn game(State(a): State<Arc<Arena>>, UrlPath(id): UrlPath<u64>) -> Response {
    match a.store.get(id) {
        Some(r) => Json(r).into_response(),
        None => not_found(format!("no game {id}")),
    }
}

async fn game_record(State(a): State<Arc<Arena>>, UrlPath(id): UrlPath<u64>) -> Response {
    match a.store.get(id) {
        Some(r) => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], format!("{}\n", r.record)).into_response(),
        None => not_found(format!("no game {id}")),
    }
}

async fn matches(State(a): State<Arc<Arena>>, Json(req): Json<MatchRequest>) -> Response {
    if req.games == 0 || req.games > MAX_MATCH_GAMES {
        return bad_request(format!("games must be between 1 and {MAX_MATCH_GAMES}"));
    }
    for p in &req.players {
        if let Err(e) = a.agent(p) {
            return not_found(e);
        }
    }
    let seed = req.seed.unwrap_or_else(|| a.deal_seed());
    let mut out = Vec::new();
    for deal_seed in gongzhu_core::eval::deal_seeds(seed, req.games) {
        let seatings = if req.paired {
            let p = &req.players;
            vec![p.clone(), [p[1].clone(), p[0].clone(), p[3].clone(), p[2].clone()]]
        } else {
            vec![req.players.clone()]
        };
        for players in seatings {
            match a.play_local(players, deal_seed).await {
                Ok(r) => out.push(r),
                Err(e) => return not_found(e),
            }
        }
    }
    Json(out).into_response()
}

/// `uri` resolved under `root`, refusing anything that escapes it.
fn static_path(root: &Path, uri: &Uri) -> Option<PathBuf> {
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let mut out = root.to_path_buf();
    for c in Path::new(rel).components() {
        match c {
            Component::Normal(part) => out.push(part),
            _ => return None,
        }
    }
    Some(out)
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

async fn static_file(State(a): State<Arc<Arena>>, uri: Uri) -> Response {
    let Some(root) = &a.config.web_root else {
        return not_found(format!("no route {}", uri.path()));
    };
    let Some(path) = static_path(root, &uri) else {
        return not_found(format!("no route {}", uri.path()));
    };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => not_found(format!("no file {}", uri.path())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn lines_are_bounded() {
        let mut data: &[u8] = b"a\r\nb\nlast";
        assert_eq!(read_line(&mut data).await.unwrap().as_deref(), Some("a"));
        assert_eq!(read_line(&mut data).await.unwrap().as_deref(), Some("b"));
        assert_eq!(read_line(&mut data).await.unwrap().as_deref(), Some("last"));
        assert_eq!(read_line(&mut data).await.unwrap(), None);
        let long = vec![b'x'; MAX_LINE + 10];
        let mut r: &[u8] = &long;
        assert!(matches!(read_line(&mut r).await, Err(LineError::TooLong)));
        let mut bad: &[u8] = b"\xff\xfe\n";
        assert!(matches!(read_line(&mut bad).await, Err(LineError::Utf8)));
    }

    #[test]
    fn static_paths_stay_inside_root() {
        let root = Path::new("/srv/web");
        let p = |s: &str| static_path(root, &s.parse().unwrap());
        assert_eq!(p("/"), Some(root.join("index.html")));
        assert_eq!(p("/js/app.js"), Some(root.join("js/app.js")));
        assert_eq!(p("/../etc/passwd"), None);
    }
}
