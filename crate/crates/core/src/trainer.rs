//! Double-dummy self-play and training.
//!
//! Every seat searches the true full state. Each play becomes one sample:
//! the mover's exact encoding, the root visit distribution and the final
//! team differential from the mover's side. Training runs three shuffled
//! minibatch passes over the last three batches of games.

use std::collections::VecDeque;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{baseline, Agent};
use crate::belief::{BeliefConfig, ScrofaAgent};
use crate::engine::{GameState, Seat};
use crate::eval::{run_match, MatchConfig};
use crate::mcts::{choose_from_visits, search, SearchConfig};
use crate::nn::{
    encode_state, train_pass, Adam, AdamConfig, EncodeMode, Evaluator, LossStats, NetConfig, Network, NnError,
    TrainingSample,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid training config: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressConfig {
    /// Evaluate after every `every` batches; 0 disables.
    pub every: usize,
    pub deals: usize,
    /// Belief settings of the evaluated net+search agent.
    pub agent: BeliefConfig,
}

impl Default for ProgressConfig {
    fn default() -> Self {
        ProgressConfig {
            every: 4,
            deals: 16,
            agent: BeliefConfig {
                budget: 3,
                ..BeliefConfig::uniform()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub games_per_batch: usize,
    pub seed: u64,
    pub net: NetConfig,
    pub adam: AdamConfig,
    /// Passes over the replay window per batch.
    pub passes: usize,
    pub minibatch: usize,
    /// Batches kept in the replay window.
    pub window: usize,
    /// Tricks played with visit-proportional sampling before switching to
    /// the most visited move.
    pub explore_tricks: usize,
    pub search: SearchConfig,
    pub checkpoint_every: usize,
    pub keep_checkpoints: usize,
    pub progress: ProgressConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            games_per_batch: 64,
            seed: 0,
            net: NetConfig::small(),
            adam: AdamConfig::default(),
            passes: 3,
            minibatch: 64,
            window: 3,
            explore_tricks: 8,
            search: SearchConfig::training(),
            checkpoint_every: 16,
            keep_checkpoints: 8,
            progress: ProgressConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("games_per_batch", self.games_per_batch),
            ("passes", self.passes),
            ("minibatch", self.minibatch),
            ("window", self.window),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(TrainError::Config(format!("{name} must be positive")));
            }
        }
        if self.adam.lr.is_nan() || self.adam.lr < 0.0 {
            return Err(TrainError::Config("learning rate must be non-negative".into()));
        }
        self.net.validate()?;
        Ok(())
    }
}

pub struct SelfPlayGame {
    pub samples: Vec<TrainingSample>,
    pub final_state: GameState,
}

/// One double-dummy game from `deal_seed`, all four seats searching with
/// `evaluator`.
pub fn selfplay_game(
    evaluator: &dyn Evaluator,
    deal_seed: u64,
    search_config: &SearchConfig,
    explore_tricks: usize,
) -> SelfPlayGame {
    let mut rng = ChaCha8Rng::seed_from_u64(deal_seed);
    rng.set_stream(99);
    let mut state = GameState::deal(deal_seed);
    let mut pending: Vec<(TrainingSample, Seat)> = Vec::with_capacity(52);
    while !state.is_terminal() {
        let mover = state.to_play();
        let legal = state.legal_moves().unwrap();
        let input = encode_state(&state, mover, EncodeMode::Exact);
        let mut target = [0.0f32; 52];
        let card = if legal.len() == 1 {
            let only = legal.lowest().unwrap();
            target[only.index()] = 1.0;
            only
        } else {
            let result = search(&state, evaluator, search_config);
            for (t, d) in target.iter_mut().zip(result.distribution.iter()) {
                *t = *d as f32;
            }
            let tau = if state.history().len() < 4 * explore_tricks { 1.0 } else { 0.0 };
            choose_from_visits(&result, tau, &mut rng)
        };
        pending.push((
            TrainingSample {
                input,
                target_policy: target,
                target_value: 0.0,
                legal,
            },
            mover,
        ));
        state.play_mut(card).unwrap();
    }
    let diff = state.team_differential().unwrap() as f64;
    let samples = pending
        .into_iter()
        .map(|(mut s, mover)| {
            s.target_value = (diff * mover.team_sign()) as f32;
            s
        })
        .collect();
    SelfPlayGame {
        samples,
        final_state: state,
    }
}

/// The most recent `capacity` batches of samples, oldest first.
#[derive(Clone, Debug, Default)]
pub struct ReplayBuffer {
    capacity: usize,
    samples: Vec<TrainingSample>,
    sizes: VecDeque<usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        ReplayBuffer {
            capacity,
            samples: Vec::new(),
            sizes: VecDeque::new(),
        }
    }

    pub fn push(&mut self, batch: Vec<TrainingSample>) {
        self.sizes.push_back(batch.len());
        self.samples.extend(batch);
        while self.sizes.len() > self.capacity {
            let old = self.sizes.pop_front().unwrap();
            self.samples.drain(..old);
        }
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn batches(&self) -> usize {
        self.sizes.len()
    }
}

/// `passes` shuffled minibatch passes over the buffer. Returns the loss of
/// the last pass.
pub fn train_epoch(
    net: &mut Network<f32>,
    adam: &mut Adam<f32>,
    buffer: &ReplayBuffer,
    passes: usize,
    minibatch: usize,
    rng: &mut impl Rng,
) -> Result<LossStats, NnError> {
    if buffer.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let mut last = LossStats::default();
    for _ in 0..passes {
        last = train_pass(net, adam, buffer.samples(), minibatch, rng)?;
    }
    Ok(last)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressPoint {
    pub wpg: f64,
    pub stderr: f64,
}

/// WPG of the net with belief search against a rule-based opponent.
pub fn progress_eval(
    net: &Network<f32>,
    agent: &BeliefConfig,
    opponent: &str,
    deals: usize,
    seed: u64,
) -> ProgressPoint {
    let me = ScrofaAgent::new("net", net, agent.clone()).expect("valid belief config");
    let other = baseline(opponent).expect("known baseline");
    let r = run_match(
        &me,
        other.as_ref() as &dyn Agent,
        &MatchConfig {
            deals,
            seed,
            paired: true,
        },
    );
    ProgressPoint {
        wpg: r.report.wpg,
        stderr: r.report.stderr,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    pub batch: usize,
    pub loss_kl: f64,
    pub loss_v: f64,
    pub wpg_random: Option<f64>,
    pub wpg_greed: Option<f64>,
    pub samples: usize,
    pub seconds: f64,
}

pub const METRICS_HEADER: &str = "batch,loss_kl,loss_v,wpg_random,wpg_greed";

impl BatchMetrics {
    pub fn csv_line(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.3}")).unwrap_or_default();
        format!(
            "{},{:.6},{:.4},{},{}",
            self.batch,
            self.loss_kl,
            self.loss_v,
            opt(self.wpg_random),
            opt(self.wpg_greed)
        )
    }
}

/// Self-play and training state across batches.
pub struct Trainer {
    pub config: TrainConfig,
    pub net: Network<f32>,
    adam: Adam<f32>,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    batch: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Trainer, TrainError> {
        config.validate()?;
        let net = Network::new(config.net, config.seed)?;
        Ok(Trainer::from_network(config, net))
    }

    /// Continue from an existing network with fresh optimizer state.
    pub fn from_network(config: TrainConfig, net: Network<f32>) -> Trainer {
        let adam = Adam::new(config.adam, net.param_count());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(7);
        Trainer {
            buffer: ReplayBuffer::new(config.window),
            config,
            net,
            adam,
            rng,
            batch: 0,
        }
    }

    pub fn batches_done(&self) -> usize {
        self.batch
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Deal seeds of the next batch.
    fn next_seeds(&mut self) -> Vec<u64> {
        (0..self.config.games_per_batch).map(|_| self.rng.gen()).collect()
    }

    /// Generate one batch of games with the current network.
    pub fn generate(&mut self) -> Vec<TrainingSample> {
        let seeds = self.next_seeds();
        let net = &self.net;
        let config = &self.config;
        let games: Vec<Vec<TrainingSample>> = seeds
            .par_iter()
            .map(|&s| selfplay_game(net, s, &config.search, config.explore_tricks).samples)
            .collect();
        games.into_iter().flatten().collect()
    }

    /// Self-play one batch, train on the window, optionally evaluate.
    pub fn step(&mut self) -> Result<BatchMetrics, TrainError> {
        let start = Instant::now();
        let samples = self.generate();
        let n = samples.len();
        self.buffer.push(samples);
        let loss = train_epoch(
            &mut self.net,
            &mut self.adam,
            &self.buffer,
            self.config.passes,
            self.config.minibatch,
            &mut self.rng,
        )?;
        self.batch += 1;
        let p = &self.config.progress;
        let (mut wpg_random, mut wpg_greed) = (None, None);
        if p.every > 0 && self.batch.is_multiple_of(p.every) && p.deals > 0 {
            let seed = self.config.seed ^ (self.batch as u64).wrapping_mul(0x9e37_79b9);
            wpg_random = Some(progress_eval(&self.net, &p.agent, "random", p.deals, seed).wpg);
            wpg_greed = Some(progress_eval(&self.net, &p.agent, "greed", p.deals, seed).wpg);
        }
        Ok(BatchMetrics {
            batch: self.batch,
            loss_kl: loss.kl,
            loss_v: loss.value_abs,
            wpg_random,
            wpg_greed,
            samples: n,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// Run `batches` more batches, writing `metrics.csv`, rolling
    /// checkpoints and a final `model.gznn` under `out`.
    pub fn run(
        &mut self,
        batches: usize,
        out: &Path,
        mut on_batch: impl FnMut(&BatchMetrics),
    ) -> Result<Vec<BatchMetrics>, TrainError> {
        fs::create_dir_all(out.join("checkpoints"))?;
        let mut csv = BufWriter::new(File::create(out.join("metrics.csv"))?);
        writeln!(csv, "{METRICS_HEADER}")?;
        fs::write(out.join("config.json"), serde_json::to_string_pretty(&self.config).unwrap())?;
        let mut all = Vec::with_capacity(batches);
        for _ in 0..batches {
            let m = self.step()?;
            writeln!(csv, "{}", m.csv_line())?;
            csv.flush()?;
            if self.config.checkpoint_every > 0 && self.batch.is_multiple_of(self.config.checkpoint_every) {
                self.checkpoint(out)?;
            }
            on_batch(&m);
            all.push(m);
        }
        self.net.save_file(out.join("model.gznn"))?;
        Ok(all)
    }

    fn checkpoint(&self, out: &Path) -> Result<PathBuf, TrainError> {
        let dir = out.join("checkpoints");
        let path = dir.join(format!("batch_{:06}.gznn", self.batch));
        self.net.save_file(&path)?;
        let mut existing: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "gznn"))
            .collect();
        existing.sort();
        let keep = self.config.keep_checkpoints.max(1);
        if existing.len() > keep {
            for old in &existing[..existing.len() - keep] {
                fs::remove_file(old)?;
            }
        }
        Ok(path)
    }
}
