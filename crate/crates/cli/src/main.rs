//! Command-line driver for the treeplex library.
//!
//! Six subcommands: `inspect` prints tree statistics, `norms` evaluates the
//! treeplex norms of a payoff vector, `prox-check` stress-tests the prox
//! operator against its optimality certificate, `learn` runs mirror descent
//! against an adversary and writes the regret curve, `cce` runs clairvoyant
//! self-play and reports equilibrium gaps, and `rate` fits power laws to
//! recorded curves.
//!
//! Exit codes: 0 on success, 1 when a run fails an invariant or an input
//! cannot be processed, 2 on usage errors. All randomness derives from the
//! `--seed` flag, so identical invocations produce byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use treeplex::adversary::{empirical_rate_fit, run_match, Adversary};
use treeplex::builtins::{parse_builtin, Builtin};
use treeplex::clairvoyant::{clairvoyant_run, CceConfig};
use treeplex::format::{parse_document, Document};
use treeplex::metrics::{
    leaf_count, ln_vertex_count, normalize_observations, tree_size, vertex_count,
};
use treeplex::norms::{norm_l1, norm_linf, norm_oracle, NormKind};
use treeplex::numeric::{kahan_dot, Kahan};
use treeplex::omd::{best_response, tuned_eta};
use treeplex::oracle::{prox_certificate_gap, prox_nonexpansive_gap};
use treeplex::tfsdp::{behavioral_to_sequence, random_interior_behavioral};
use treeplex::{Game, Tfsdp};

/// Tolerance on the prox certificate and non-expansiveness gaps; anything
/// larger than accumulated rounding noise fails the check.
const PROX_GAP_TOLERANCE: f64 = 1e-7;

/// Enumeration budget for oracle norms and vertex certificates.
const ENUMERATION_CAP: usize = 1_000_000;

#[derive(Parser)]
#[command(
    name = "treeplex",
    version,
    about = "Tree-form decision problems: norms, regularizers, and self-play"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print size, vertex, and normalization statistics for a tree or game.
    Inspect(InspectArgs),
    /// Evaluate the treeplex norms of a payoff vector, with oracle deltas.
    Norms(NormsArgs),
    /// Stress-test the prox operator against its optimality certificate.
    #[command(name = "prox-check")]
    ProxCheck(ProxCheckArgs),
    /// Run mirror descent against an adversary and write the regret curve.
    Learn(LearnArgs),
    /// Run clairvoyant self-play and report equilibrium gaps.
    Cce(CceArgs),
    /// Fit power laws to recorded curves.
    Rate(RateArgs),
}

/// Where the tree or game comes from: a named builtin or a document file.
#[derive(Args)]
struct Source {
    /// Builtin spec, e.g. `fig1`, `simplex:k=8`, `kuhn`, or
    /// `random:depth=3,dec=2,obs=2,seed=7`.
    #[arg(long, value_name = "SPEC")]
    builtin: Option<String>,
    /// Path to a `game` or `tree` document.
    #[arg(long, value_name = "FILE")]
    game: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct NormsArgs {
    #[command(flatten)]
    source: Source,
    /// Player whose tree is used when the source is a game.
    #[arg(long, default_value_t = 0)]
    player: usize,
    /// Vector file (comma- or whitespace-separated floats) or `random:SEED`.
    #[arg(long, value_name = "FILE|random:SEED")]
    vector: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ProxCheckArgs {
    #[command(flatten)]
    source: Source,
    /// Player whose tree is used when the source is a game.
    #[arg(long, default_value_t = 0)]
    player: usize,
    /// Seed for the sampled gradients and pivots.
    #[arg(long)]
    seed: u64,
    /// Number of sampled (gradient, pivot) instances.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    source: Source,
    /// Player whose tree is used when the source is a game.
    #[arg(long, default_value_t = 0)]
    player: usize,
    /// `hard`, `random`, `zero`, or the path of a reward-stream file.
    #[arg(long, value_name = "KIND|FILE")]
    adversary: String,
    /// Number of episodes.
    #[arg(long, value_name = "T")]
    episodes: u64,
    /// Step size, or `auto` for the horizon-tuned value.
    #[arg(long, default_value = "auto")]
    eta: String,
    /// Base seed; trial k runs with seed + k.
    #[arg(long)]
    seed: u64,
    /// Independent runs on seeds seed..seed+N; per-seed curves go to
    /// `<out>.seed<k>` and the mean curve to `<out>`.
    #[arg(long, default_value_t = 1, value_name = "N")]
    trials: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CceArgs {
    #[command(flatten)]
    source: Source,
    /// Number of episodes.
    #[arg(long = "K", value_name = "K")]
    episodes: usize,
    /// Inner fixed-point sweeps per episode, or `auto` for ⌈log₂ K⌉.
    #[arg(long = "L", default_value = "auto")]
    inner_steps: String,
    /// Step size, or `auto` for 1/(2n).
    #[arg(long, default_value = "auto")]
    eta: String,
    /// Recorded for provenance; the dynamics are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RateArgs {
    /// Curve files; the last column of each is fitted.
    #[arg(long = "in", value_name = "FILE", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format: `csv` (plain text) or `json`.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

enum OutputFormat {
    Csv,
    Json,
}

impl OutputArgs {
    fn parse(&self) -> Result<OutputFormat, CliError> {
        match self.format.as_str() {
            "csv" | "text" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Usage(format!(
                "unknown format {other:?}; expected csv or json"
            ))),
        }
    }
}

/// Failures split by exit code: usage errors exit 2, run errors exit 1.
enum CliError {
    Usage(String),
    Run(String),
}

impl CliError {
    fn run(err: impl std::fmt::Display) -> Self {
        CliError::Run(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Inspect(args) => cmd_inspect(&args),
        Command::Norms(args) => cmd_norms(&args),
        Command::ProxCheck(args) => cmd_prox_check(&args),
        Command::Learn(args) => cmd_learn(&args),
        Command::Cce(args) => cmd_cce(&args),
        Command::Rate(args) => cmd_rate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// A loaded source plus the string that names it in config echoes.
struct Loaded {
    document: Document,
    origin: String,
}

impl Source {
    fn load(&self) -> Result<Loaded, CliError> {
        match (&self.builtin, &self.game) {
            (Some(spec), None) => {
                let document = match parse_builtin(spec)
                    .map_err(|e| CliError::Usage(format!("bad builtin spec {spec:?}: {e}")))?
                {
                    Builtin::Tree(t) => Document::Tree(t),
                    Builtin::Game(g) => Document::Game(g),
                };
                Ok(Loaded {
                    document,
                    origin: format!("builtin={spec}"),
                })
            }
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Run(format!("cannot read {}: {e}", path.display()))
                })?;
                let document = parse_document(&text)
                    .map_err(|e| CliError::Run(format!("cannot parse {}: {e}", path.display())))?;
                Ok(Loaded {
                    document,
                    origin: format!("game={}", path.display()),
                })
            }
            (Some(_), Some(_)) => Err(CliError::Usage(
                "--builtin and --game are mutually exclusive".into(),
            )),
            (None, None) => Err(CliError::Usage(
                "one of --builtin or --game is required".into(),
            )),
        }
    }
}

/// Extracts the tree a single-tree subcommand should operate on.
fn tree_for_player(loaded: &Loaded, player: usize) -> Result<Arc<Tfsdp>, CliError> {
    match &loaded.document {
        Document::Tree(t) => {
            if player != 0 {
                return Err(CliError::Usage(
                    "--player is only meaningful for game sources".into(),
                ));
            }
            Ok(Arc::new(t.clone()))
        }
        Document::Game(efg) => {
            let game = Game::new(efg.clone()).map_err(CliError::run)?;
            if player >= game.n_players() {
                return Err(CliError::Usage(format!(
                    "player {player} out of range; the game has {} players",
                    game.n_players()
                )));
            }
            Ok(game.tfsdp(player).clone())
        }
    }
}

/// One `key=value` pair of a config echo; values are JSON scalars so the
/// structured output can mirror the text header exactly.
type ConfigEntry = (String, serde_json::Value);

fn config_line(entries: &[ConfigEntry]) -> String {
    let parts: Vec<String> = entries
        .iter()
        .map(|(k, v)| match v {
            serde_json::Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect();
    format!("# {}", parts.join(" "))
}

fn config_object(entries: &[ConfigEntry]) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> =
        entries.iter().cloned().collect();
    serde_json::Value::Object(map)
}

fn entry(key: &str, value: impl Into<serde_json::Value>) -> ConfigEntry {
    (key.to_string(), value.into())
}

/// Writes to `--out` when given, otherwise prints to stdout.
fn deliver(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_eta(s: &str) -> Result<Option<f64>, CliError> {
    if s == "auto" {
        return Ok(None);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::Usage(format!("bad eta {s:?}; expected a number or auto")))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(CliError::Usage(format!(
            "eta must be positive and finite, got {v}"
        )));
    }
    Ok(Some(v))
}

// ---------------------------------------------------------------------------
// inspect

struct TreeReport {
    tree_size: u64,
    leaf_count: u64,
    vertices: String,
    ln_vertices: f64,
    actions_before: usize,
    actions_after: usize,
    normalized_tree_size: u64,
    normalized_leaf_count: u64,
    normalized_vertices: String,
}

fn total_actions(t: &Tfsdp) -> usize {
    t.decisions().iter().map(|&j| t.actions(j).len()).sum()
}

fn tree_report(t: &Tfsdp) -> TreeReport {
    let normalized = normalize_observations(t);
    TreeReport {
        tree_size: tree_size(t),
        leaf_count: leaf_count(t),
        vertices: vertex_count(t).to_string(),
        ln_vertices: ln_vertex_count(t),
        actions_before: total_actions(t),
        actions_after: total_actions(&normalized),
        normalized_tree_size: tree_size(&normalized),
        normalized_leaf_count: leaf_count(&normalized),
        normalized_vertices: vertex_count(&normalized).to_string(),
    }
}

impl TreeReport {
    fn text_lines(&self, prefix: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{prefix}tree_size={} leaf_count={} vertices={}",
            self.tree_size, self.leaf_count, self.vertices
        );
        let _ = writeln!(out, "{prefix}ln_vertices={}", self.ln_vertices);
        let _ = writeln!(
            out,
            "{prefix}normalized actions_before={} actions_after={} \
             tree_size={} leaf_count={} vertices={}",
            self.actions_before,
            self.actions_after,
            self.normalized_tree_size,
            self.normalized_leaf_count,
            self.normalized_vertices
        );
        out
    }

    fn json_object(&self) -> serde_json::Value {
        json!({
            "tree_size": self.tree_size,
            "leaf_count": self.leaf_count,
            "vertices": self.vertices,
            "ln_vertices": self.ln_vertices,
            "normalized": {
                "actions_before": self.actions_before,
                "actions_after": self.actions_after,
                "tree_size": self.normalized_tree_size,
                "leaf_count": self.normalized_leaf_count,
                "vertices": self.normalized_vertices,
            },
        })
    }
}

fn cmd_inspect(args: &InspectArgs) -> Result<(), CliError> {
    let format = args.output.parse()?;
    let loaded = args.source.load()?;
    let doc = match &loaded.document {
        Document::Tree(t) => {
            let report = tree_report(t);
            match format {
                OutputFormat::Csv => report.text_lines(""),
                OutputFormat::Json => format!("{}\n", report.json_object()),
            }
        }
        Document::Game(efg) => {
            let game = Game::new(efg.clone()).map_err(CliError::run)?;
            let reports: Vec<TreeReport> =
                (0..game.n_players()).map(|i| tree_report(game.tfsdp(i))).collect();
            match format {
                OutputFormat::Csv => {
                    let mut out = format!("players={}\n", game.n_players());
                    for (i, report) in reports.iter().enumerate() {
                        out.push_str(&report.text_lines(&format!("player={i} ")));
                    }
                    out
                }
                OutputFormat::Json => {
                    let players: Vec<serde_json::Value> =
                        reports.iter().map(TreeReport::json_object).collect();
                    format!("{}\n", json!({ "players": players }))
                }
            }
        }
    };
    deliver(&args.output.out, &doc)
}

// ---------------------------------------------------------------------------
// norms

fn load_vector(spec: &str, len: usize) -> Result<(Vec<f64>, String), CliError> {
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| CliError::Usage(format!("bad vector seed {seed:?}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..len)
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
            .collect();
        return Ok((v, format!("vector=random:{seed}")));
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Run(format!("cannot read {}: {e}", path.display())))?;
    let mut v = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for token in line.split([',', ' ', '\t']) {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            let x: f64 = token.parse().map_err(|_| {
                CliError::Run(format!("bad number {token:?} in {}", path.display()))
            })?;
            v.push(x);
        }
    }
    if v.len() != len {
        return Err(CliError::Run(format!(
            "vector has {} entries but the tree has {len} terminals",
            v.len()
        )));
    }
    Ok((v, format!("vector={}", path.display())))
}

fn cmd_norms(args: &NormsArgs) -> Result<(), CliError> {
    let format = args.output.parse()?;
    let loaded = args.source.load()?;
    let t = tree_for_player(&loaded, args.player)?;
    let (u, vector_origin) = load_vector(&args.vector, t.num_terminals())?;

    let l1 = norm_l1(&t, &u);
    let linf = norm_linf(&t, &u);
    let oracle_l1 = norm_oracle(&t, &u, NormKind::L1, ENUMERATION_CAP).map_err(CliError::run)?;
    let oracle_linf =
        norm_oracle(&t, &u, NormKind::Linf, ENUMERATION_CAP).map_err(CliError::run)?;
    let delta_l1 = (l1 - oracle_l1).abs();
    let delta_linf = (linf - oracle_linf).abs();

    let config = vec![
        entry("subcommand", "norms"),
        entry("source", loaded.origin.clone()),
        entry("player", args.player as u64),
        entry("vector", vector_origin.split_once('=').map(|(_, v)| v).unwrap_or("").to_string()),
        entry("terminals", t.num_terminals() as u64),
    ];
    let doc = match format {
        OutputFormat::Csv => format!(
            "{}\nl1={l1} linf={linf}\noracle_l1={oracle_l1} oracle_linf={oracle_linf}\n\
             delta_l1={delta_l1} delta_linf={delta_linf}\n",
            config_line(&config)
        ),
        OutputFormat::Json => format!(
            "{}\n",
            json!({
                "config": config_object(&config),
                "l1": l1,
                "linf": linf,
                "oracle_l1": oracle_l1,
                "oracle_linf": oracle_linf,
                "delta_l1": delta_l1,
                "delta_linf": delta_linf,
            })
        ),
    };
    deliver(&args.output.out, &doc)
}

// ---------------------------------------------------------------------------
// prox-check

fn cmd_prox_check(args: &ProxCheckArgs) -> Result<(), CliError> {
    let format = args.output.parse()?;
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let loaded = args.source.load()?;
    let t = tree_for_player(&loaded, args.player)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    let mut worst_certificate = f64::NEG_INFINITY;
    let mut worst_nonexpansive = f64::NEG_INFINITY;
    for _ in 0..args.trials {
        let g1: Vec<f64> = (0..t.num_terminals())
            .map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0))
            .collect();
        let g2: Vec<f64> = (0..t.num_terminals())
            .map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0))
            .collect();
        let pivot_behavioral = random_interior_behavioral(&t, &mut rng, 1e-3);
        let pivot =
            behavioral_to_sequence(&t, &pivot_behavioral).map_err(CliError::run)?;

        let certificate =
            prox_certificate_gap(&t, &g1, &pivot.values, 20, ENUMERATION_CAP, &mut rng)
                .map_err(CliError::run)?;
        let nonexpansive =
            prox_nonexpansive_gap(&t, &g1, &g2, &pivot.values).map_err(CliError::run)?;
        worst_certificate = worst_certificate.max(certificate);
        worst_nonexpansive = worst_nonexpansive.max(nonexpansive);
    }

    let ok = worst_certificate <= PROX_GAP_TOLERANCE && worst_nonexpansive <= PROX_GAP_TOLERANCE;
    let config = vec![
        entry("subcommand", "prox-check"),
        entry("source", loaded.origin.clone()),
        entry("player", args.player as u64),
        entry("seed", args.seed),
        entry("trials", args.trials as u64),
        entry("tolerance", PROX_GAP_TOLERANCE),
    ];
    let doc = match format {
        OutputFormat::Csv => format!(
            "{}\nworst_certificate_gap={worst_certificate}\n\
             worst_nonexpansive_gap={worst_nonexpansive}\nstatus={}\n",
            config_line(&config),
            if ok { "ok" } else { "failed" }
        ),
        OutputFormat::Json => format!(
            "{}\n",
            json!({
                "config": config_object(&config),
                "worst_certificate_gap": worst_certificate,
                "worst_nonexpansive_gap": worst_nonexpansive,
                "status": if ok { "ok" } else { "failed" },
            })
        ),
    };
    deliver(&args.output.out, &doc)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Run(format!(
            "prox gaps exceed tolerance {PROX_GAP_TOLERANCE}: \
             certificate={worst_certificate} nonexpansive={worst_nonexpansive}"
        )))
    }
}

// ---------------------------------------------------------------------------
// learn

enum AdversaryKind {
    Hard,
    Random,
    Zero,
    Stream(Vec<Vec<f64>>, String),
}

fn parse_adversary(spec: &str, terminals: usize) -> Result<AdversaryKind, CliError> {
    match spec {
        "hard" => Ok(AdversaryKind::Hard),
        "random" => Ok(AdversaryKind::Random),
        "zero" => Ok(AdversaryKind::Zero),
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Run(format!("cannot read adversary file {path}: {e}")))?;
            let mut rows = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let row: Result<Vec<f64>, _> =
                    line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
                let row = row.map_err(|_| {
                    CliError::Run(format!("bad reward row at {path}:{}", i + 1))
                })?;
                if row.len() != terminals {
                    return Err(CliError::Run(format!(
                        "reward row at {path}:{} has {} entries, expected {terminals}",
                        i + 1,
                        row.len()
                    )));
                }
                rows.push(row);
            }
            if rows.is_empty() {
                return Err(CliError::Run(format!("adversary file {path} has no rows")));
            }
            Ok(AdversaryKind::Stream(rows, path.to_string()))
        }
    }
}

fn build_adversary(
    kind: &AdversaryKind,
    t: &Arc<Tfsdp>,
    episodes: u64,
    seed: u64,
) -> Result<Adversary, CliError> {
    match kind {
        AdversaryKind::Hard => treeplex::adversary::build_hard_instance(t, episodes, seed)
            .map(Adversary::Hard)
            .map_err(CliError::run),
        AdversaryKind::Random => Ok(Adversary::random(t, seed)),
        AdversaryKind::Zero => Ok(Adversary::zero(t)),
        AdversaryKind::Stream(rows, _) => {
            Adversary::stream(t, rows.clone()).map_err(CliError::run)
        }
    }
}

struct LearnOutcome {
    seed: u64,
    episode_rewards: Vec<f64>,
    cumulative_regret: Vec<f64>,
}

impl LearnOutcome {
    fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }
}

fn curve_document(
    format: &OutputFormat,
    config: &[ConfigEntry],
    outcome: &LearnOutcome,
) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::new();
            let _ = writeln!(out, "{}", config_line(config));
            let _ = writeln!(out, "# final_regret={}", outcome.final_regret());
            let _ = writeln!(out, "t,reward,regret");
            for (i, (&r, &reg)) in outcome
                .episode_rewards
                .iter()
                .zip(&outcome.cumulative_regret)
                .enumerate()
            {
                let _ = writeln!(out, "{},{r},{reg}", i + 1);
            }
            out
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = outcome
                .episode_rewards
                .iter()
                .zip(&outcome.cumulative_regret)
                .enumerate()
                .map(|(i, (&r, &reg))| json!({ "t": i + 1, "reward": r, "regret": reg }))
                .collect();
            let doc = json!({
                "config": config_object(config),
                "rows": rows,
                "summary": { "final_regret": outcome.final_regret() },
            });
            format!("{doc}\n")
        }
    }
}

fn cmd_learn(args: &LearnArgs) -> Result<(), CliError> {
    let format = args.output.parse()?;
    if args.episodes == 0 {
        return Err(CliError::Usage("--episodes must be at least 1".into()));
    }
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if args.trials > 1 && args.output.out.is_none() {
        return Err(CliError::Usage("--trials > 1 requires --out".into()));
    }
    let eta = parse_eta(&args.eta)?;
    let loaded = args.source.load()?;
    let t = tree_for_player(&loaded, args.player)?;
    let kind = parse_adversary(&args.adversary, t.num_terminals())?;
    let eta_value = eta.unwrap_or_else(|| tuned_eta(&t, args.episodes));
    let adversary_name = match &kind {
        AdversaryKind::Hard => "hard".to_string(),
        AdversaryKind::Random => "random".to_string(),
        AdversaryKind::Zero => "zero".to_string(),
        AdversaryKind::Stream(_, path) => path.clone(),
    };

    let base_config = vec![
        entry("subcommand", "learn"),
        entry("source", loaded.origin.clone()),
        entry("player", args.player as u64),
        entry("adversary", adversary_name.clone()),
        entry("episodes", args.episodes),
        entry("eta", args.eta.clone()),
        entry("eta_value", eta_value),
        entry("seed", args.seed),
        entry("trials", args.trials),
    ];

    // Trials run concurrently, one thread per seed; outputs are assembled in
    // seed order afterwards so the result is independent of scheduling.
    let outcomes: Vec<LearnOutcome> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for k in 0..args.trials {
            let seed = args.seed + k;
            let t = &t;
            let kind = &kind;
            handles.push(scope.spawn(move || -> Result<LearnOutcome, CliError> {
                let adversary = build_adversary(kind, t, args.episodes, seed)?;
                let curve =
                    run_match(&adversary, args.episodes, eta).map_err(CliError::run)?;
                Ok(LearnOutcome {
                    seed,
                    episode_rewards: curve.episode_rewards,
                    cumulative_regret: curve.cumulative_regret,
                })
            }));
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("trial thread panicked"))
            .collect::<Result<Vec<_>, CliError>>()
    })?;

    if args.trials == 1 {
        let doc = curve_document(&format, &base_config, &outcomes[0]);
        return deliver(&args.output.out, &doc);
    }

    let out = args.output.out.as_ref().expect("checked above");
    for outcome in &outcomes {
        let mut config = base_config.clone();
        config.push(entry("trial_seed", outcome.seed));
        let doc = curve_document(&format, &config, outcome);
        let path = PathBuf::from(format!("{}.seed{}", out.display(), outcome.seed));
        fs::write(&path, doc)
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    }

    // Merged output: the across-seed mean curve, accumulated in seed order.
    let n = args.episodes as usize;
    let mut mean_reward = vec![Kahan::new(); n];
    let mut mean_regret = vec![Kahan::new(); n];
    for outcome in &outcomes {
        for i in 0..n {
            mean_reward[i].add(outcome.episode_rewards[i]);
            mean_regret[i].add(outcome.cumulative_regret[i]);
        }
    }
    let scale = 1.0 / args.trials as f64;
    let merged = LearnOutcome {
        seed: args.seed,
        episode_rewards: mean_reward.iter().map(|k| k.value() * scale).collect(),
        cumulative_regret: mean_regret.iter().map(|k| k.value() * scale).collect(),
    };
    let mut config = base_config.clone();
    config.push(entry("merged", "mean"));
    for outcome in &outcomes {
        config.push(entry(
            &format!("final_regret_seed{}", outcome.seed),
            outcome.final_regret(),
        ));
    }
    let doc = curve_document(&format, &config, &merged);
    fs::write(out, doc)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", out.display())))
}

// ---------------------------------------------------------------------------
// cce

fn cmd_cce(args: &CceArgs) -> Result<(), CliError> {
    let format = args.output.parse()?;
    if args.episodes == 0 {
        return Err(CliError::Usage("--K must be at least 1".into()));
    }
    let eta = parse_eta(&args.eta)?;
    let inner_steps = if args.inner_steps == "auto" {
        None
    } else {
        let l: usize = args.inner_steps.parse().map_err(|_| {
            CliError::Usage(format!(
                "bad inner-step count {:?}; expected a positive integer or auto",
                args.inner_steps
            ))
        })?;
        if l == 0 {
            return Err(CliError::Usage("--L must be at least 1".into()));
        }
        Some(l)
    };

    let loaded = args.source.load()?;
    let efg = match &loaded.document {
        Document::Game(efg) => efg.clone(),
        Document::Tree(_) => {
            return Err(CliError::Usage(
                "cce requires a game source, not a single tree".into(),
            ))
        }
    };
    let game = Game::new(efg).map_err(CliError::run)?;
    let config = CceConfig {
        episodes: args.episodes,
        eta,
        inner_steps,
    };
    let log = clairvoyant_run(&game, &config).map_err(CliError::run)?;
    let report = log.gap(&game).map_err(CliError::run)?;

    // Per-episode gap of the running profile average, rebuilt incrementally
    // from the committed profiles.
    let n = game.n_players();
    let mut summed_rewards: Vec<Vec<Kahan>> = (0..n)
        .map(|i| vec![Kahan::new(); game.tfsdp(i).num_terminals()])
        .collect();
    let mut summed_utables: Vec<Kahan> = vec![Kahan::new(); n];
    let mut gap_rows: Vec<(usize, f64, f64)> = Vec::with_capacity(log.episodes());
    let errors = log.prediction_errors();
    for (k, profile) in log.profiles.iter().enumerate() {
        for i in 0..n {
            let w = game.reward_vector(profile, i).map_err(CliError::run)?;
            summed_utables[i].add(kahan_dot(&profile.strategies[i].values, &w.values));
            for (acc, &x) in summed_rewards[i].iter_mut().zip(&w.values) {
                acc.add(x);
            }
        }
        let episodes = (k + 1) as f64;
        let mut gap: f64 = f64::NEG_INFINITY;
        for i in 0..n {
            let sums: Vec<f64> = summed_rewards[i].iter().map(Kahan::value).collect();
            let (br, _) = best_response(game.tfsdp(i), &sums);
            gap = gap.max((br - summed_utables[i].value()) / episodes);
        }
        let prediction_error = errors[k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gap_rows.push((k + 1, gap, prediction_error));
    }

    let mut config_entries = vec![
        entry("subcommand", "cce"),
        entry("source", loaded.origin.clone()),
        entry("episodes", args.episodes as u64),
        entry("inner_steps", log.inner_steps as u64),
        entry("eta", log.eta),
        entry("seed", args.seed),
        entry("contraction_warning", log.contraction_warning),
        entry("oracle_evaluations", log.oracle_evaluations),
        entry("final_gap", report.max),
    ];
    for (i, &g) in report.per_player.iter().enumerate() {
        config_entries.push(entry(&format!("gap_player{i}"), g));
    }

    let doc = match format {
        OutputFormat::Csv => {
            let mut out = String::new();
            let _ = writeln!(out, "{}", config_line(&config_entries));
            let _ = writeln!(out, "t,gap,prediction_error");
            for &(t, gap, err) in &gap_rows {
                let _ = writeln!(out, "{t},{gap},{err}");
            }
            out
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = gap_rows
                .iter()
                .map(|&(t, gap, err)| json!({ "t": t, "gap": gap, "prediction_error": err }))
                .collect();
            let doc = json!({
                "config": config_object(&config_entries),
                "rows": rows,
                "summary": {
                    "final_gap": report.max,
                    "per_player": report.per_player,
                },
            });
            format!("{doc}\n")
        }
    };
    deliver(&args.output.out, &doc)
}

// ---------------------------------------------------------------------------
// rate

/// Reads the last column of a curve file, skipping `#` lines and a header
/// row of column names.
fn read_curve(path: &Path) -> Result<(String, Vec<f64>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Run(format!("cannot read {}: {e}", path.display())))?;
    let mut column = String::from("value");
    let mut series = Vec::new();
    let mut saw_header = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or(line).trim();
        match last.parse::<f64>() {
            Ok(x) => series.push(x),
            Err(_) if !saw_header => {
                saw_header = true;
                column = last.to_string();
            }
            Err(_) => {
                return Err(CliError::Run(format!(
                    "bad value {last:?} in {}",
                    path.display()
                )))
            }
        }
    }
    Ok((column, series))
}

fn cmd_rate(args: &RateArgs) -> Result<(), CliError> {
    let format = args.output.parse()?;
    let mut results = Vec::new();
    for path in &args.inputs {
        let (column, series) = read_curve(path)?;
        let fit = empirical_rate_fit(&series).map_err(|e| {
            CliError::Run(format!("cannot fit {}: {e}", path.display()))
        })?;
        results.push((path.display().to_string(), column, fit));
    }
    let doc = match format {
        OutputFormat::Csv => {
            let mut out = String::new();
            for (name, column, fit) in &results {
                let _ = writeln!(
                    out,
                    "file={name} column={column} slope={} r_squared={} points={}",
                    fit.slope, fit.r_squared, fit.points
                );
            }
            out
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = results
                .iter()
                .map(|(name, column, fit)| {
                    json!({
                        "file": name,
                        "column": column,
                        "slope": fit.slope,
                        "r_squared": fit.r_squared,
                        "points": fit.points,
                    })
                })
                .collect();
            format!("{}\n", json!({ "fits": rows }))
        }
    };
    deliver(&args.output.out, &doc)
}
