//! Command-line front end: `precompute`, `solve` and `simulate`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 domain error
//! (invalid network, infeasible request, solver failure), 3 IO error.

mod cache;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cache::{cache_key, cache_path, load_or_build, write_atomic, Cached, FORMAT_VERSION};

use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::network::{load_network, read_pairs, AlphaMode, LayeredNetwork, Start};
use crate::offline::{solve, Algorithm, BegVariant, SolveOptions, SolverResult, DEFAULT_ENUMERATION_LIMIT};
use crate::online::{run_experiment, write_trace, ArmFamily, Oracle, Policy, SimulationConfig};
use crate::visitprob::{build_table, VisitProbTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_IO: i32 = 3;

const DEFAULT_CACHE_DIR: &str = "mulane-cache";

/// Budget caps for every layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CapsMode {
    /// The `cap` field of each manifest layer.
    Manifest,
    /// Every cap equals the total budget.
    EqualToBudget,
    Explicit(Vec<usize>),
}

impl CapsMode {
    pub fn resolve(&self, network: &LayeredNetwork, budget: Option<usize>) -> Result<Vec<usize>> {
        match self {
            CapsMode::Manifest => Ok(network.budget_caps()),
            CapsMode::EqualToBudget => budget
                .map(|b| vec![b; network.num_layers()])
                .ok_or_else(|| Error::Config("caps `equal-to-b` needs a budget".into())),
            CapsMode::Explicit(caps) if caps.len() == network.num_layers() => Ok(caps.clone()),
            CapsMode::Explicit(caps) => Err(Error::Config(format!(
                "{} caps given for {} layers",
                caps.len(),
                network.num_layers()
            ))),
        }
    }
}

impl FromStr for CapsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "manifest" => Ok(CapsMode::Manifest),
            "equal-to-b" | "equal-to-B" => Ok(CapsMode::EqualToBudget),
            _ => s
                .split(',')
                .map(|c| c.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(CapsMode::Explicit)
                .map_err(|_| Error::Config(format!("caps must be `manifest`, `equal-to-b` or a list of integers, got `{s}`"))),
        }
    }
}

impl Serialize for CapsMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CapsMode::Manifest => s.serialize_str("manifest"),
            CapsMode::EqualToBudget => s.serialize_str("equal-to-b"),
            CapsMode::Explicit(caps) => caps.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for CapsMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            List(Vec<usize>),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::List(caps) => Ok(CapsMode::Explicit(caps)),
            Raw::Name(name) => name.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Inclusive budget range `from:to:step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sweep {
    pub from: usize,
    pub to: usize,
    pub step: usize,
}

impl Sweep {
    pub fn budgets(&self) -> Vec<usize> {
        (self.from..=self.to).step_by(self.step).collect()
    }
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("sweep must look like `B1:B2:step` with B1 <= B2 and step > 0, got `{s}`"));
        let parts = s
            .split(':')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        match parts[..] {
            [from, to, step] if from <= to && step > 0 => Ok(Sweep { from, to, step }),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Sweep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}:{}:{}", self.from, self.to, self.step))
    }
}

impl<'de> Deserialize<'de> for Sweep {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Experiment settings shared by all commands, loadable from one JSON document.
///
/// Every field is optional; command-line flags override the file. Defaults:
/// caps `manifest`, weights from the manifest, seed 0, rounds 1000, runs 10,
/// gamma 1, epsilon 0.1, oracle `beg`, BEG variant `equivalent`, output
/// directory `.` for `simulate`, cache directory `mulane-cache` for `precompute`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: Option<PathBuf>,
    /// Comma-separated algorithm names.
    pub algo: Option<String>,
    pub budget: Option<usize>,
    pub caps: Option<CapsMode>,
    /// Starting distribution for every layer, overriding the manifest.
    pub alpha: Option<String>,
    /// `manifest` or `random3`.
    pub weights: Option<String>,
    pub seed: Option<u64>,
    pub rounds: Option<usize>,
    pub runs: Option<usize>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub oracle: Option<Oracle>,
    pub arms: Option<ArmFamily>,
    pub beg_variant: Option<BegVariant>,
    pub lazy: Option<bool>,
    pub enumeration_limit: Option<u128>,
    pub sweep: Option<Sweep>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub verbose: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}:{}: {e}", e.line())))
    }

    /// Fields set in `over` replace those of `self`.
    pub fn overlay(self, over: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            manifest: over.manifest.or(self.manifest),
            algo: over.algo.or(self.algo),
            budget: over.budget.or(self.budget),
            caps: over.caps.or(self.caps),
            alpha: over.alpha.or(self.alpha),
            weights: over.weights.or(self.weights),
            seed: over.seed.or(self.seed),
            rounds: over.rounds.or(self.rounds),
            runs: over.runs.or(self.runs),
            gamma: over.gamma.or(self.gamma),
            epsilon: over.epsilon.or(self.epsilon),
            oracle: over.oracle.or(self.oracle),
            arms: over.arms.or(self.arms),
            beg_variant: over.beg_variant.or(self.beg_variant),
            lazy: over.lazy.or(self.lazy),
            enumeration_limit: over.enumeration_limit.or(self.enumeration_limit),
            sweep: over.sweep.or(self.sweep),
            cache: over.cache.or(self.cache),
            out: over.out.or(self.out),
            verbose: over.verbose.or(self.verbose),
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn caps_mode(&self) -> &CapsMode {
        self.caps.as_ref().unwrap_or(&CapsMode::Manifest)
    }

    fn require_budget(&self) -> Result<usize> {
        self.budget.ok_or_else(|| Error::Config("missing budget (--budget)".into()))
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            beg_variant: self.beg_variant.unwrap_or_default(),
            lazy: self.lazy.unwrap_or(false),
            enumeration_limit: self.enumeration_limit.unwrap_or(DEFAULT_ENUMERATION_LIMIT),
        }
    }

    /// Loads the manifest and applies the `alpha` and `weights` overrides.
    pub fn network(&self) -> Result<LayeredNetwork> {
        let path = self
            .manifest
            .as_deref()
            .ok_or_else(|| Error::Config("missing network manifest (--manifest)".into()))?;
        let alpha = self.alpha.as_deref().map(str::parse::<AlphaMode>).transpose()?;
        match self.weights.as_deref() {
            None | Some("manifest" | "random3") => {}
            Some(other) => return Err(Error::Config(format!("unknown weights mode `{other}`"))),
        }
        let mut network = load_network(path)?;
        if let Some(mode) = alpha {
            let start = match mode {
                AlphaMode::SmallestNode => Start::SmallestNode,
                AlphaMode::FixedNode(id) => Start::FixedNode(id),
                AlphaMode::Stationary => Start::Stationary,
                AlphaMode::File(p) => Start::Explicit(read_pairs(Path::new(&p))?),
            };
            network = network.with_start(&start)?;
        }
        if self.weights.as_deref() == Some("random3") {
            network = network.with_weights(random3_weights(network.num_nodes(), self.seed()))?;
        }
        Ok(network)
    }
}

/// Node weights drawn uniformly from `{0, 0.5, 1}`.
pub fn random3_weights(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [0.0, 0.5, 1.0][rng.random_range(0..3)]).collect()
}

#[derive(Debug, Parser)]
#[command(name = "mulane", version, about = "Budget allocation for random-walk exploration of multi-layered networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute and cache visiting probabilities; prints a stats JSON.
    Precompute(PrecomputeArgs),
    /// Solve the offline allocation problem; prints JSON, or CSV with --sweep.
    Solve(SolveArgs),
    /// Simulate online learners; writes regret.csv and summary.json.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct NetworkArgs {
    /// JSON experiment config; flags given on the command line take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Network manifest (JSON).
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,
    /// Budget caps: `manifest` (default), `equal-to-b`, or a comma-separated list.
    #[arg(long, value_name = "CAPS")]
    caps: Option<CapsMode>,
    /// Starting distribution for every layer: fixed-node, fixed-node:<id>, stationary or file:<path>.
    #[arg(long, value_name = "MODE")]
    alpha: Option<String>,
    /// Node weights: `manifest` (default) or `random3`, uniform over {0, 0.5, 1} drawn with --seed.
    #[arg(long, value_name = "MODE")]
    weights: Option<String>,
    /// Random seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

impl NetworkArgs {
    fn into_config(self) -> (Option<PathBuf>, ExperimentConfig) {
        let cfg = ExperimentConfig {
            manifest: self.manifest,
            caps: self.caps,
            alpha: self.alpha,
            weights: self.weights,
            seed: self.seed,
            ..Default::default()
        };
        (self.config, cfg)
    }
}

#[derive(Debug, Args)]
struct PrecomputeArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Total budget; only needed with `--caps equal-to-b`.
    #[arg(long)]
    budget: Option<usize>,
    /// Cache directory [default: mulane-cache].
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Stats JSON path [default: <cache>/stats.json].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Comma-separated solvers: beg, bege, mg, mg-no, dp, opt, prop-s, prop-w.
    #[arg(long, value_name = "ALGOS")]
    algo: Option<String>,
    /// Total budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Budget sweep `B1:B2:step` (inclusive); emits CSV rows B,algo,reward,millis.
    #[arg(long, value_name = "RANGE")]
    sweep: Option<Sweep>,
    /// BEG queue update: `equivalent` (default) or `literal`.
    #[arg(long, value_name = "VARIANT")]
    beg_variant: Option<BegVariant>,
    /// Lazy re-evaluation of stale BEG candidates.
    #[arg(long)]
    lazy: bool,
    /// Refuse enumerating solvers above this many candidates [default: 10000000].
    #[arg(long, value_name = "N")]
    enumeration_limit: Option<u128>,
    /// Reuse or fill a visiting-probability cache in this directory.
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Output file [default: stdout].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Learner: cucb-max, cucb-mg, cucb-max-r, emp, eps-greedy or ts.
    #[arg(long, value_name = "ALGO")]
    algo: Option<String>,
    /// Total budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Rounds per run [default: 1000].
    #[arg(long)]
    rounds: Option<usize>,
    /// Independent runs [default: 10].
    #[arg(long)]
    runs: Option<usize>,
    /// Confidence-radius scale in (0, 1] [default: 1].
    #[arg(long)]
    gamma: Option<f64>,
    /// Exploration probability of eps-greedy [default: 0.1].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Offline oracle of the visiting-probability learners: beg (default), bege or opt.
    #[arg(long, value_name = "ORACLE")]
    oracle: Option<Oracle>,
    /// Arm family of emp, eps-greedy and ts: max or marginal [default: marginal on disjoint layers, else max].
    #[arg(long, value_name = "FAMILY")]
    arms: Option<ArmFamily>,
    /// BEG queue update: `equivalent` (default) or `literal`.
    #[arg(long, value_name = "VARIANT")]
    beg_variant: Option<BegVariant>,
    /// Output directory [default: .].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write per-round records to trace.jsonl.
    #[arg(long)]
    verbose: bool,
}

fn with_file(path: Option<PathBuf>, flags: ExperimentConfig) -> Result<ExperimentConfig> {
    match path {
        Some(path) => Ok(ExperimentConfig::from_path(&path)?.overlay(flags)),
        None => Ok(flags),
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Precompute(args) => precompute_command(args),
        Command::Solve(args) => solve_command(args),
        Command::Simulate(args) => simulate_command(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code reported for `error`.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::InvalidGamma(_) => EXIT_USAGE,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_DOMAIN,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn precompute_command(args: PrecomputeArgs) -> Result<()> {
    let (file, mut flags) = args.network.into_config();
    flags.budget = args.budget;
    flags.cache = args.cache;
    flags.out = args.out;
    precompute(&with_file(file, flags)?)
}

/// Fills the cache for the configured network and caps and writes the stats JSON.
pub fn precompute(cfg: &ExperimentConfig) -> Result<()> {
    let network = cfg.network()?;
    let caps = cfg.caps_mode().resolve(&network, cfg.budget)?;
    let dir = cfg.cache.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
    let clock = Stopwatch::start();
    let cached = load_or_build(&network, &caps, &dir)?;
    let millis = clock.millis();
    let layers: Vec<_> = network
        .layers()
        .iter()
        .zip(&caps)
        .map(|(layer, &cap)| {
            serde_json::json!({
                "index": layer.index(),
                "name": layer.name(),
                "n": layer.len(),
                "nnz": layer.matrix().nnz(),
                "cap": cap,
            })
        })
        .collect();
    let stats = serde_json::json!({
        "cache_hit": cached.hit,
        "cache_file": cached.path.display().to_string(),
        "key": cached.key,
        "format_version": FORMAT_VERSION,
        "layers": layers,
        "max_drift": cached.table.max_drift(),
        "millis": millis,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&stats).expect("stats serialise"));
    let out = cfg.out.clone().unwrap_or_else(|| dir.join("stats.json"));
    write_atomic(&out, text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn solve_command(args: SolveArgs) -> Result<()> {
    let (file, mut flags) = args.network.into_config();
    flags.algo = args.algo;
    flags.budget = args.budget;
    flags.sweep = args.sweep;
    flags.beg_variant = args.beg_variant;
    flags.lazy = args.lazy.then_some(true);
    flags.enumeration_limit = args.enumeration_limit;
    flags.cache = args.cache;
    flags.out = args.out;
    let cfg = with_file(file, flags)?;
    let text = solve_text(&cfg)?;
    emit(cfg.out.as_deref(), &text)
}

fn parse_algorithms(cfg: &ExperimentConfig) -> Result<Vec<Algorithm>> {
    let list = cfg
        .algo
        .as_deref()
        .ok_or_else(|| Error::Config("missing algorithm (--algo)".into()))?;
    list.split(',').map(|a| a.trim().parse()).collect()
}

fn table_for(network: &LayeredNetwork, caps: &[usize], cache: Option<&Path>) -> Result<VisitProbTable> {
    match cache {
        Some(dir) => Ok(load_or_build(network, caps, dir)?.table),
        None => build_table(network, caps),
    }
}

/// Runs `solve` as configured and returns its output: JSON, or CSV for a sweep.
pub fn solve_text(cfg: &ExperimentConfig) -> Result<String> {
    let algos = parse_algorithms(cfg)?;
    let budgets = match cfg.sweep {
        Some(sweep) => sweep.budgets(),
        None => vec![cfg.require_budget()?],
    };
    let network = cfg.network()?;
    let opts = cfg.solve_options();
    let mode = cfg.caps_mode();
    // Caps that do not depend on the budget share one table.
    let shared = match mode {
        CapsMode::EqualToBudget => None,
        _ => {
            let caps = mode.resolve(&network, None)?;
            Some(table_for(&network, &caps, cfg.cache.as_deref())?)
        }
    };
    let mut rows: Vec<(usize, SolverResult)> = Vec::new();
    for &budget in &budgets {
        let own;
        let table = match &shared {
            Some(t) => t,
            None => {
                own = table_for(&network, &mode.resolve(&network, Some(budget))?, cfg.cache.as_deref())?;
                &own
            }
        };
        for &algo in &algos {
            rows.push((budget, solve(algo, table, network.weights(), budget, &opts)?));
        }
    }
    if cfg.sweep.is_some() {
        let mut csv = String::from("B,algo,reward,millis\n");
        for (b, r) in &rows {
            let _ = writeln!(csv, "{b},{},{},{}", r.algo, r.reward, r.millis);
        }
        return Ok(csv);
    }
    let value = if rows.len() == 1 {
        serde_json::to_value(&rows[0].1)
    } else {
        serde_json::to_value(rows.iter().map(|(_, r)| r).collect::<Vec<_>>())
    }
    .expect("results serialise");
    Ok(format!("{}\n", serde_json::to_string_pretty(&value).expect("results serialise")))
}

fn simulate_command(args: SimulateArgs) -> Result<()> {
    let (file, mut flags) = args.network.into_config();
    flags.algo = args.algo;
    flags.budget = args.budget;
    flags.rounds = args.rounds;
    flags.runs = args.runs;
    flags.gamma = args.gamma;
    flags.epsilon = args.epsilon;
    flags.oracle = args.oracle;
    flags.arms = args.arms;
    flags.beg_variant = args.beg_variant;
    flags.out = args.out;
    flags.verbose = args.verbose.then_some(true);
    simulate(&with_file(file, flags)?)
}

/// Resolves the simulation settings of `cfg`.
pub fn simulation_config(cfg: &ExperimentConfig) -> Result<SimulationConfig> {
    let policy: Policy = cfg
        .algo
        .as_deref()
        .ok_or_else(|| Error::Config("missing algorithm (--algo)".into()))?
        .trim()
        .parse()?;
    let mut sim = SimulationConfig::new(
        policy,
        cfg.require_budget()?,
        cfg.rounds.unwrap_or(1000),
        cfg.runs.unwrap_or(10),
        cfg.seed(),
    );
    sim.gamma = cfg.gamma.unwrap_or(1.0);
    sim.epsilon = cfg.epsilon.unwrap_or(sim.epsilon);
    sim.oracle = cfg.oracle.unwrap_or_default();
    sim.arms = cfg.arms;
    sim.beg_variant = cfg.beg_variant.unwrap_or_default();
    sim.verbose = cfg.verbose.unwrap_or(false);
    sim.validate()?;
    Ok(sim)
}

/// Runs the configured simulation and writes `regret.csv`, `summary.json` and,
/// in verbose mode, `trace.jsonl` into the output directory.
pub fn simulate(cfg: &ExperimentConfig) -> Result<()> {
    let sim = simulation_config(cfg)?;
    let network = cfg.network()?;
    let caps = cfg.caps_mode().resolve(&network, Some(sim.budget))?;
    let network = network.with_caps(&caps)?;
    let output = run_experiment(&network, &sim)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    write_atomic(&dir.join("regret.csv"), output.regret_csv().as_bytes())?;
    let summary = format!("{}\n", serde_json::to_string_pretty(&output.summary()).expect("summary serialises"));
    write_atomic(&dir.join("summary.json"), summary.as_bytes())?;
    if sim.verbose {
        let mut trace = Vec::new();
        write_trace(&output, &mut trace).expect("writing to memory");
        write_atomic(&dir.join("trace.jsonl"), &trace)?;
    }
    print!("{summary}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps_modes() {
        assert_eq!("equal-to-b".parse::<CapsMode>().unwrap(), CapsMode::EqualToBudget);
        assert_eq!("3, 4".parse::<CapsMode>().unwrap(), CapsMode::Explicit(vec![3, 4]));
        assert!("3,x".parse::<CapsMode>().is_err());
        let cfg = ExperimentConfig::from_json(r#"{"caps": [1, 2]}"#, "cfg").unwrap();
        assert_eq!(cfg.caps, Some(CapsMode::Explicit(vec![1, 2])));
        let cfg = ExperimentConfig::from_json(r#"{"caps": "equal-to-b"}"#, "cfg").unwrap();
        assert_eq!(cfg.caps, Some(CapsMode::EqualToBudget));
    }

    #[test]
    fn sweeps() {
        assert_eq!("2:6:2".parse::<Sweep>().unwrap().budgets(), vec![2, 4, 6]);
        assert_eq!("2:7:2".parse::<Sweep>().unwrap().budgets(), vec![2, 4, 6]);
        assert!("2:6:0".parse::<Sweep>().is_err());
        assert!("6:2:1".parse::<Sweep>().is_err());
        assert!("2:6".parse::<Sweep>().is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(ExperimentConfig::from_json(r#"{"budget": 3, "colour": 1}"#, "cfg").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = ExperimentConfig {
            budget: Some(3),
            seed: Some(1),
            ..Default::default()
        };
        let flags = ExperimentConfig {
            budget: Some(5),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.budget, Some(5));
        assert_eq!(merged.seed, Some(1));
    }

    #[test]
    fn random3_is_seeded() {
        let a = random3_weights(50, 4);
        assert_eq!(a, random3_weights(50, 4));
        assert_ne!(a, random3_weights(50, 5));
        assert!(a.iter().all(|w| [0.0, 0.5, 1.0].contains(w)));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Overlap), EXIT_DOMAIN);
        assert_eq!(
            exit_code(&Error::io("p", std::io::Error::other("x"))),
            EXIT_IO
        );
    }
}
