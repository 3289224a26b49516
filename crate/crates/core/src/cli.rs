//! The `hiercp` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 invalid input
//! data, 3 runtime failure (I/O and internal errors).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assignment::GroupAssignment;
use crate::error::{Error, Result};
use crate::generator::{
    make_planted_instance, sample_assignment, sample_network, OmegaTable, PlantedParams,
};
use crate::network::TemporalNetwork;
use crate::prob::JTable;
use crate::render::{render, Palette, RenderSpec, RenderTarget};
use crate::sampler::{
    self, consensus_with, ConsensusRule, GroupAddition, Manifest, Mode, SamplerConfig,
};

/// Environment variable naming a directory for cached J tables.
pub const JTABLE_CACHE_ENV: &str = "HIERCP_JTABLE_CACHE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hiercp",
    version,
    about = "Hierarchical core-periphery inference for temporal networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample group assignments from the posterior.
    Infer(InferArgs),
    /// Most frequent assignment among saved samples.
    Consensus(ConsensusArgs),
    /// Draw a synthetic temporal network.
    Generate(GenerateArgs),
    /// Draw heat maps and permuted adjacency matrices.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Main,
    FixedK,
    NoMultiNode,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Main => Mode::Main,
            ModeArg::FixedK => Mode::FixedK,
            ModeArg::NoMultiNode => Mode::NoMultiNode,
        }
    }
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Edge-list file: a header `n L`, then `layer i j` lines.
    #[arg(long, required_unless_present = "replay")]
    pub network: Option<PathBuf>,
    /// Repeat the run recorded in a manifest: its network and sampler
    /// settings replace the flags below.
    #[arg(long, conflicts_with = "network")]
    pub replay: Option<PathBuf>,
    /// Output directory for samples.ndjson and manifest.json.
    #[arg(long, default_value = "hiercp-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 4)]
    pub init_k: usize,
    /// Multi-node move probability.
    #[arg(long, default_value_t = 1e-3)]
    pub mnp: f64,
    #[arg(long, default_value_t = 10_000)]
    pub thin: u64,
    #[arg(long, default_value_t = 0)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Main)]
    pub mode: ModeArg,
    /// Number of groups for `--mode fixed-k` (overrides --init-k).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = crate::assignment::MAX_GROUPS)]
    pub k_max: usize,
    /// Draw multi-node layers from the second layer onward.
    #[arg(long)]
    pub restrict_multi_node_layer1: bool,
    /// Take every group-addition branch instead of gating it on a layer draw.
    #[arg(long)]
    pub ungated_group_addition: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Pattern,
    PerGroup,
}

#[derive(Debug, Args)]
pub struct ConsensusArgs {
    /// Sample files written by `infer`.
    #[arg(long = "samples", required = true, num_args = 1..)]
    pub samples: Vec<PathBuf>,
    /// Output assignment file.
    #[arg(long, default_value = "consensus.assignment")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = RuleArg::Pattern)]
    pub rule: RuleArg,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "L")]
    pub layers: usize,
    /// Number of groups (ignored with --planted, which uses 2).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Comma-separated edge probabilities from the highest group down to
    /// group 0, or `uniform` to draw each per group and layer.
    #[arg(long, default_value = "uniform")]
    pub omega: String,
    /// Two-level planted instance instead of a prior draw.
    #[arg(long)]
    pub planted: bool,
    #[arg(long, default_value_t = 0.3)]
    pub core_frac: f64,
    #[arg(long, default_value_t = 0.95)]
    pub persistence: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "generated.edges")]
    pub out_network: PathBuf,
    #[arg(long, default_value = "generated.assignment")]
    pub out_assignment: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Heatmap,
    Adjacency,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub assignment: PathBuf,
    /// Required for `--target adjacency`.
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TargetArg::Heatmap)]
    pub target: TargetArg,
    /// Output path stem.
    #[arg(long, default_value = "figure")]
    pub out: PathBuf,
    /// Pixels per cell.
    #[arg(long, default_value_t = 8)]
    pub scale: usize,
    /// Comma-separated layers for adjacency figures (default: all).
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Comma-separated `rrggbb` colors; the last is the empty pattern.
    #[arg(long)]
    pub palette: Option<String>,
}

/// J table for `n` nodes, read from and written to the cache directory
/// named by `HIERCP_JTABLE_CACHE` when it is set.
pub fn load_jtable(n: usize) -> Result<JTable> {
    match std::env::var_os(JTABLE_CACHE_ENV) {
        Some(dir) if !dir.is_empty() => JTable::cached(PathBuf::from(dir), n),
        _ => JTable::build(n),
    }
}

fn config_from_flags(args: &InferArgs) -> Result<SamplerConfig> {
    let mode = Mode::from(args.mode);
    let init_k = match (mode, args.k) {
        (_, Some(k)) => k,
        (Mode::FixedK, None) => {
            return Err(Error::Config("--mode fixed-k needs --k".into()));
        }
        _ => args.init_k,
    };
    Ok(SamplerConfig {
        steps: args.steps,
        runs: args.runs,
        init_k,
        multi_node_prob: args.mnp,
        thin: args.thin,
        seed: args.seed,
        k_max: args.k_max,
        mode,
        restrict_multi_node_layer1: args.restrict_multi_node_layer1,
        burn_in: args.burn_in,
        group_addition: if args.ungated_group_addition {
            GroupAddition::Ungated
        } else {
            GroupAddition::LayerGated
        },
    })
}

pub fn cmd_infer(args: &InferArgs) -> Result<()> {
    let (network, config) = match (&args.replay, &args.network) {
        (Some(path), _) => {
            let m = Manifest::load(path)?;
            (PathBuf::from(m.network), m.config)
        }
        (None, Some(network)) => (network.clone(), config_from_flags(args)?),
        (None, None) => return Err(Error::Config("--network or --replay is required".into())),
    };
    let net = TemporalNetwork::load(&network)?;
    let mode = config.mode;
    config.validate()?;
    let jt = load_jtable(net.node_count())?;
    let outputs = sampler::run(&config, &net, &jt)?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let samples = args.out.join("samples.ndjson");
    sampler::write_records(&samples, outputs.iter().flat_map(|o| o.records.iter()))?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        network: std::fs::canonicalize(&network)
            .unwrap_or(network)
            .display()
            .to_string(),
        nodes: net.node_count(),
        layers: net.layer_count(),
        config: config.clone(),
        runs: outputs.iter().map(|o| o.summary.clone()).collect(),
    };
    manifest.save(args.out.join("manifest.json"))?;

    let total: usize = outputs.iter().map(|o| o.records.len()).sum();
    for o in &outputs {
        let s = &o.summary;
        println!(
            "run {}: acceptance {:.4}, final k {}",
            s.run,
            s.counts.acceptance_rate(),
            s.final_k
        );
        if s.final_k >= config.k_max && mode != Mode::FixedK {
            log::warn!(
                "run {} reached the group cap k_max = {}",
                s.run,
                config.k_max
            );
        }
    }
    println!("{total} records written to {}", samples.display());
    Ok(())
}

pub fn cmd_consensus(args: &ConsensusArgs) -> Result<()> {
    let mut records = Vec::new();
    for path in &args.samples {
        records.extend(sampler::read_records(path)?);
    }
    let rule = match args.rule {
        RuleArg::Pattern => ConsensusRule::Pattern,
        RuleArg::PerGroup => ConsensusRule::PerGroup,
    };
    let c = consensus_with(&records, rule)?;
    c.assignment.save(&args.out)?;
    println!(
        "modal k {} ({} of {} records; {} discarded)",
        c.modal_k,
        c.used,
        records.len(),
        c.discarded
    );
    for layer in 0..c.assignment.layer_count() {
        let sizes: Vec<String> = (1..c.modal_k)
            .map(|r| c.assignment.group_size(r, layer).to_string())
            .collect();
        println!("layer {layer}: group sizes [{}]", sizes.join(", "));
    }
    println!("consensus written to {}", args.out.display());
    Ok(())
}

/// Parses `--omega`: values from the highest group down to group 0.
fn parse_omega_list(s: &str) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Validation(format!("edge probability {v:?} is not a number")))
        })
        .collect::<Result<_>>()?;
    if let Some(bad) = values.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(Error::Validation(format!(
            "edge probability {bad} outside [0, 1]"
        )));
    }
    values.reverse();
    Ok(values)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let mut rng = sampler::run_rng(args.seed, 0);
    let (net, g) = if args.planted {
        let by_group = parse_omega_list(&args.omega)?;
        let [omega_base, omega_core] = by_group[..] else {
            return Err(Error::Config(
                "--planted needs --omega core,base with two values".into(),
            ));
        };
        let params = PlantedParams {
            n: args.n,
            num_layers: args.layers,
            core_fraction: args.core_frac,
            omega_core,
            omega_base,
            persistence: args.persistence,
        };
        make_planted_instance(&params, &mut rng)?
    } else {
        let jt = load_jtable(args.n.max(1))?;
        let g = sample_assignment(args.k, args.n, args.layers, &jt, &mut rng)?;
        let omega = if args.omega.trim() == "uniform" {
            OmegaTable::uniform(args.k, args.layers, &mut rng)
        } else {
            let by_group = parse_omega_list(&args.omega)?;
            if by_group.len() != args.k {
                return Err(Error::Config(format!(
                    "--omega lists {} values but k = {}",
                    by_group.len(),
                    args.k
                )));
            }
            OmegaTable::constant(&by_group, args.layers)?
        };
        let net = sample_network(&g, &omega, &mut rng)?;
        (net, g)
    };
    net.save(&args.out_network)?;
    g.save(&args.out_assignment)?;
    println!(
        "{} nodes, {} layers, {} edges -> {}; ground truth -> {}",
        net.node_count(),
        net.layer_count(),
        net.total_edges(),
        args.out_network.display(),
        args.out_assignment.display()
    );
    Ok(())
}

pub fn cmd_render(args: &RenderArgs) -> Result<()> {
    let g = GroupAssignment::load(&args.assignment)?;
    let net = args
        .network
        .as_deref()
        .map(TemporalNetwork::load)
        .transpose()?;
    let target = match args.target {
        TargetArg::Heatmap => RenderTarget::AssignmentHeatmap,
        TargetArg::Adjacency => RenderTarget::PermutedAdjacency,
    };
    if target == RenderTarget::PermutedAdjacency && net.is_none() {
        return Err(Error::Config("--target adjacency needs --network".into()));
    }
    let palette = match &args.palette {
        Some(p) => Palette::parse(p)?,
        None => Palette::default(),
    };
    let spec = RenderSpec {
        target,
        layers: args.layers.clone(),
        palette,
        output: args.out.clone(),
        scale: args.scale,
    };
    for path in render(&spec, &g, net.as_ref())? {
        println!("{}", path.display());
    }
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    if e.is_data_error() {
        EXIT_DATA
    } else if matches!(e, Error::Config(_)) {
        EXIT_USAGE
    } else {
        EXIT_RUNTIME
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Infer(a) => cmd_infer(a),
        Command::Consensus(a) => cmd_consensus(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Render(a) => cmd_render(a),
    }
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
