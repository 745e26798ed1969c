//! The `gongzhu` command: `train`, `eval`, `matrix` and `serve`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use gongzhu_arena::{serve, ServeConfig, ServeError};
use gongzhu_core::agents::Agent;
use gongzhu_core::eval::{combat_matrix, run_match, MatchConfig};
use gongzhu_core::nn::{NetConfig, Network, NnError};
use gongzhu_core::registry::{make_agent, needs_model, RegistryError, AGENT_NAMES};
use gongzhu_core::trainer::{TrainConfig, TrainError, Trainer};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("cannot load model {path}: {source}")]
    Model { path: PathBuf, source: NnError },
    #[error(transparent)]
    Agent(#[from] RegistryError),
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "gongzhu", version, about = "Train, evaluate and serve Gongzhu agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Self-play training; writes metrics.csv, checkpoints and model.gznn.
    Train(TrainArgs),
    /// Paired match between two agents.
    Eval(EvalArgs),
    /// Round robin among several agents, with ε and its bootstrap error.
    Matrix(MatrixArgs),
    /// Run the arena.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 64)]
    pub games_per_batch: usize,
    #[arg(long, default_value_t = 100)]
    pub batches: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = NetConfig::small().width)]
    pub width: usize,
    #[arg(long, default_value_t = NetConfig::small().depth)]
    pub depth: usize,
    /// Continue from this network instead of a fresh one.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Progress evaluation period in batches; 0 disables it.
    #[arg(long, default_value_t = 4)]
    pub eval_every: usize,
    #[arg(long, default_value_t = 16)]
    pub eval_deals: usize,
    #[arg(long, default_value_t = 16)]
    pub checkpoint_every: usize,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value_t = 1024)]
    pub deals: usize,
    /// Play every deal twice, swapping the teams.
    #[arg(long)]
    pub paired: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Network for `scrofa`, `scrofa-us` and `net`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// Comma-separated agent names.
    #[arg(long, value_delimiter = ',', default_value = "random,if,greed")]
    pub agents: Vec<String>,
    #[arg(long, default_value_t = 256)]
    pub deals: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Protocol port.
    #[arg(long, default_value_t = 7420)]
    pub port: u16,
    /// HTTP port for the stats API and static files; port + 1 by default.
    #[arg(long)]
    pub http_port: Option<u16>,
    #[arg(long, value_delimiter = ',', default_value = "greed")]
    pub agents: Vec<String>,
    #[arg(long)]
    pub store: PathBuf,
    /// Network for net-backed agents and hints; `<store>/model.gznn` if
    /// absent and present.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 30_000)]
    pub turn_timeout_ms: u64,
    #[arg(long)]
    pub web_root: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn load_model(path: &Path) -> Result<Arc<Network<f32>>, CliError> {
    Network::load_file(path).map(Arc::new).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

/// Build agents by name, loading `model` once if any of them needs it.
pub fn agents(names: &[String], model: Option<&Path>) -> Result<Vec<Arc<dyn Agent>>, CliError> {
    let net = match model {
        Some(p) if names.iter().any(|n| needs_model(n)) => Some(load_model(p)?),
        _ => None,
    };
    names
        .iter()
        .map(|n| {
            if !AGENT_NAMES.contains(&n.as_str()) {
                return Err(RegistryError::Unknown(n.clone()).into());
            }
            make_agent(n, net.as_ref()).map_err(|e| match e {
                RegistryError::NeedsModel(n) => CliError::Usage(format!("agent {n:?} needs --model")),
                e => e.into(),
            })
        })
        .collect()
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).expect("reports serialize");
    writeln!(w)?;
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let mut config = TrainConfig {
        games_per_batch: args.games_per_batch,
        seed: args.seed,
        net: NetConfig {
            width: args.width,
            depth: args.depth,
            ..NetConfig::small()
        },
        checkpoint_every: args.checkpoint_every,
        ..TrainConfig::default()
    };
    config.progress.every = args.eval_every;
    config.progress.deals = args.eval_deals;
    let mut trainer = match &args.resume {
        Some(path) => {
            let net = Network::load_file(path).map_err(|source| CliError::Model {
                path: path.clone(),
                source,
            })?;
            config.net = *net.config();
            config.validate()?;
            Trainer::from_network(config, net)
        }
        None => Trainer::new(config)?,
    };
    let quiet = args.quiet;
    trainer.run(args.batches, &args.out, |m| {
        if !quiet {
            eprintln!("{}  ({} samples, {:.1}s)", m.csv_line(), m.samples, m.seconds);
        }
    })?;
    if !quiet {
        eprintln!("wrote {}", args.out.join("model.gznn").display());
    }
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<gongzhu_core::eval::EvalReport, CliError> {
    if args.deals == 0 {
        return Err(CliError::Usage("--deals must be positive".into()));
    }
    let ab = agents(&[args.a.clone(), args.b.clone()], args.model.as_deref())?;
    let config = MatchConfig {
        deals: args.deals,
        seed: args.seed,
        paired: args.paired,
    };
    let report = run_match(&*ab[0], &*ab[1], &config).report;
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(report)
}

pub fn matrix(args: &MatrixArgs) -> Result<serde_json::Value, CliError> {
    if args.agents.len() < 3 {
        return Err(CliError::Usage("ε needs at least three agents".into()));
    }
    let list = agents(&args.agents, args.model.as_deref())?;
    let refs: Vec<&dyn Agent> = list.iter().map(|a| &**a as &dyn Agent).collect();
    let config = MatchConfig {
        deals: args.deals,
        seed: args.seed,
        paired: true,
    };
    let m = combat_matrix(&refs, &config);
    let eps = m.epsilon();
    let stderr = m.epsilon_stderr(args.bootstrap, args.seed);
    let out = serde_json::json!({
        "schema_version": m.schema_version,
        "names": m.names,
        "xi": m.xi,
        "stderr": m.stderr,
        "deals": args.deals,
        "seed": args.seed,
        "epsilon": eps,
        "epsilon_stderr": stderr,
    });
    if let Some(path) = &args.json {
        write_json(path, &out)?;
    }
    Ok(out)
}

pub async fn serve_cmd(args: &ServeArgs) -> Result<(), CliError> {
    let model_path = args
        .model
        .clone()
        .or_else(|| Some(args.store.join("model.gznn")).filter(|p| p.exists()));
    let model = match &model_path {
        Some(p) => Some(load_model(p)?),
        None => None,
    };
    if model.is_none() {
        if let Some(n) = args.agents.iter().find(|n| needs_model(n)) {
            return Err(CliError::Usage(format!(
                "agent {n:?} needs --model (or a model.gznn in {})",
                args.store.display()
            )));
        }
    }
    let config = ServeConfig {
        host: args.host,
        port: args.port,
        http_port: args.http_port,
        agents: args.agents.clone(),
        store: args.store.clone(),
        turn_timeout: Duration::from_millis(args.turn_timeout_ms),
        model,
        web_root: args.web_root.clone(),
        seed: args.seed,
    };
    let handle = serve(config).await?;
    eprintln!(
        "protocol on {}, http on {}, store {}",
        handle.protocol_addr,
        handle.http_addr,
        args.store.display()
    );
    tokio::select! {
        _ = tokio::signal::ctrl_c() => Ok(()),
        _ = handle.wait() => Ok(()),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => train(&a),
        Command::Eval(a) => {
            let r = eval(&a)?;
            println!(
                "{} vs {}: wpg {:+.2} ± {:.2} (z {:.2}) over {} deals, {} games",
                r.agent_a, r.agent_b, r.wpg, r.stderr, r.z, r.deals, r.games
            );
            Ok(())
        }
        Command::Matrix(a) => {
            let m = matrix(&a)?;
            println!("{}", serde_json::to_string_pretty(&m).unwrap());
            Ok(())
        }
        Command::Serve(a) => tokio::runtime::Runtime::new()?.block_on(serve_cmd(&a)),
    }
}
