//! Command-line driver. Every command is deterministic given its flags and
//! writes its outputs atomically.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{rank_sweep, sensitivity_sweep, SweepSpec};
use crate::io::{self, PairFormat};
use crate::protocol::{cross_matrix, evaluate, fit_map};
use crate::seed::DEFAULT_SEED;
use crate::synthetic::{self, ProtocolSpec, SystemSpec, WorldSpec};
use crate::types::{EmbeddingSet, EvalConfig, MappingMode, PairProtocol, PairSubsample};

#[derive(Debug, Parser)]
#[command(
    name = "embedmap",
    version,
    about = "Fit and evaluate linear maps between embedding spaces"
)]
pub struct Cli {
    /// Worker threads for folds, cells and sweep points (results do not depend on it).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic world: one embedding file per system plus pairs.txt.
    Synth(SynthArgs),
    /// Evaluate one source -> target mapping under the fold protocol.
    Evaluate(EvaluateArgs),
    /// Evaluate every ordered pair of systems.
    Cross(CrossArgs),
    /// Accuracy as a function of the number of pairs used to fit the map.
    Sensitivity(SensitivityArgs),
    /// Accuracy as a function of the rank of the map.
    Rank(RankArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Csv,
    Bin,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 3000)]
    pub n_identities: usize,
    #[arg(long, default_value_t = 4)]
    pub images_per_identity: usize,
    #[arg(long, default_value_t = 32)]
    pub latent_dim: usize,
    /// Output dimension of each system; one file per entry.
    #[arg(long, value_delimiter = ',', default_value = "64,64")]
    pub out_dims: Vec<usize>,
    /// Per-image latent jitter shared by all systems.
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    /// System-specific output noise.
    #[arg(long, default_value_t = 0.0)]
    pub output_sigma: f64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 300)]
    pub matched_per_fold: usize,
    #[arg(long, default_value_t = 300)]
    pub mismatched_per_fold: usize,
    #[arg(long, value_enum, default_value_t = FileFormat::Csv)]
    pub format: FileFormat,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fitted,
    Identity,
    Rank,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Fit on raw embeddings instead of L2-normalized ones.
    #[arg(long)]
    pub no_normalize: bool,
}

impl FitArgs {
    fn config(&self) -> EvalConfig {
        EvalConfig {
            lambda: self.lambda,
            normalize_before_fit: !self.no_normalize,
            ..EvalConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    /// auto, lfw, ytf or csv.
    #[arg(long, default_value = "auto")]
    pub pairs_format: PairFormat,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub pairs: PairsArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Fitted)]
    pub mode: ModeArg,
    /// Rank kept when --mode rank.
    #[arg(long, required_if_eq("mode", "rank"))]
    pub rank: Option<usize>,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Fit each fold's map on this many randomly drawn matched pairs.
    #[arg(long)]
    pub pairs_subsample: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub report: PathBuf,
    /// Also write the map fit on every matched pair of the protocol.
    #[arg(long)]
    pub map_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossArgs {
    #[arg(long, num_args = 2.., required = true)]
    pub systems: Vec<PathBuf>,
    #[command(flatten)]
    pub pairs: PairsArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub pairs: PairsArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, default_value_t = 0.01)]
    pub drop: f64,
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// `p,accuracy` rows.
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub pairs: PairsArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ranks: Vec<usize>,
    /// `k,accuracy,variance_explained` rows.
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

impl Cli {
    /// Flag checks clap cannot express; failures are usage errors.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.jobs == 0 {
            return Err("--jobs must be at least 1".into());
        }
        if let Command::Synth(a) = &self.command {
            if a.out_dims.is_empty() {
                return Err("--out-dims needs at least one system".into());
            }
            if let Some(d) = a.out_dims.iter().find(|&&d| d < a.latent_dim) {
                return Err(format!(
                    "--out-dims entry {d} is smaller than --latent-dim {}",
                    a.latent_dim
                ));
            }
        }
        Ok(())
    }
}

/// Runs a parsed command on a pool of `cli.jobs` threads; returns the stdout text.
pub fn run(cli: &Cli) -> Result<String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::protocol(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Cross(a) => cmd_cross(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
        Command::Rank(a) => cmd_rank(a),
    })
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    n_identities: usize,
    images_per_identity: usize,
    latent_dim: usize,
    sigma: f64,
    output_sigma: f64,
    systems: Vec<ManifestSystem>,
    pairs: String,
    folds: usize,
    pairs_per_fold: usize,
}

#[derive(Serialize)]
struct ManifestSystem {
    file: String,
    tag: String,
    dim: usize,
    entries: usize,
}

pub fn cmd_synth(a: &SynthArgs) -> Result<String> {
    let spec = WorldSpec {
        n_identities: a.n_identities,
        latent_dim: a.latent_dim,
        images_per_identity: a.images_per_identity,
        latent_sigma: a.sigma,
        systems: a
            .out_dims
            .iter()
            .map(|&d| SystemSpec {
                out_dim: d,
                output_sigma: a.output_sigma,
            })
            .collect(),
        seed: a.seed,
    };
    let world = synthetic::generate_world(&spec)?;
    let proto = synthetic::generate_protocol(
        &world,
        &ProtocolSpec {
            n_folds: a.folds,
            matched_per_fold: a.matched_per_fold,
            mismatched_per_fold: a.mismatched_per_fold,
            seed: a.seed,
        },
    )?;

    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let ext = match a.format {
        FileFormat::Csv => "csv",
        FileFormat::Bin => "bin",
    };
    let mut systems = Vec::new();
    for s in 0..world.systems.len() {
        let tag = format!("system_{s}");
        let set = synthetic::emit_embeddings(&world, s)?.with_system_tag(tag.clone());
        let file = format!("{tag}.{ext}");
        io::write_embeddings(&set, a.out_dir.join(&file))?;
        systems.push(ManifestSystem {
            file,
            tag,
            dim: set.dim(),
            entries: set.len(),
        });
    }
    io::write_pairs_lfw(&proto, a.out_dir.join("pairs.txt"))?;

    let manifest = Manifest {
        seed: a.seed,
        n_identities: a.n_identities,
        images_per_identity: a.images_per_identity,
        latent_dim: a.latent_dim,
        sigma: a.sigma,
        output_sigma: a.output_sigma,
        systems,
        pairs: "pairs.txt".into(),
        folds: proto.n_folds(),
        pairs_per_fold: a.matched_per_fold + a.mismatched_per_fold,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    io::write_atomic(&a.out_dir.join("manifest.json"), text.as_bytes())?;
    Ok(text)
}

fn load_pairs(p: &PairsArgs) -> Result<PairProtocol> {
    io::read_pairs(&p.pairs, p.pairs_format)
}

fn load(path: &Path) -> Result<EmbeddingSet> {
    io::read_embeddings(path)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<String> {
    let source = load(&a.source)?;
    let target = load(&a.target)?;
    let proto = load_pairs(&a.pairs)?;
    let mut config = a.fit.config();
    config.mapping_mode = match a.mode {
        ModeArg::Fitted => MappingMode::Fitted,
        ModeArg::Identity => MappingMode::Identity,
        ModeArg::Rank => MappingMode::TruncatedRank(
            a.rank
                .ok_or_else(|| Error::protocol("--mode rank needs --rank K"))?,
        ),
    };
    if let Some(p) = a.pairs_subsample {
        config.pairs_subsample = PairSubsample::Count { p, seed: a.seed };
    }
    let report = evaluate(&source, &target, &proto, &config)?;
    io::write_report(&report, &a.report)?;
    if let Some(path) = &a.map_out {
        if config.mapping_mode == MappingMode::Identity {
            return Err(Error::protocol("--map-out needs a fitted mode"));
        }
        io::write_map(&fit_map(&source, &target, &proto, &config, None)?, path)?;
    }
    let mut out = format!(
        "{} -> {}: {}\n",
        report.source_tag,
        report.target_tag,
        report.summary()
    );
    if report.has_degenerate_threshold() {
        out.push_str("warning: some training folds held a single label\n");
    }
    Ok(out)
}

pub fn cmd_cross(a: &CrossArgs) -> Result<String> {
    let systems = a
        .systems
        .iter()
        .map(|p| load(p))
        .collect::<Result<Vec<_>>>()?;
    let proto = load_pairs(&a.pairs)?;
    let matrix = cross_matrix(&systems, &proto, &a.fit.config())?;
    io::write_report(&matrix, &a.report)?;
    Ok(format!(
        "{}max mapping drop: {:.2} points\n",
        matrix.render_table(),
        100.0 * matrix.max_mapping_drop()
    ))
}

pub fn cmd_sensitivity(a: &SensitivityArgs) -> Result<String> {
    let source = load(&a.source)?;
    let target = load(&a.target)?;
    let proto = load_pairs(&a.pairs)?;
    let spec = SweepSpec {
        num_points: a.points,
        seed: a.seed,
        drop_threshold: a.drop,
        repetitions: a.repetitions,
    };
    let curve = sensitivity_sweep(&source, &target, &proto, &a.fit.config(), &spec)?;
    io::write_atomic(&a.curve, io::sensitivity_csv(&curve).as_bytes())?;
    io::write_report(&curve, &a.report)?;
    let drop = match curve.p_for_drop {
        Some(p) => format!("{p} pairs reach within {:.2} points", 100.0 * a.drop),
        None => format!("no swept p reaches within {:.2} points", 100.0 * a.drop),
    };
    Ok(format!(
        "full accuracy {:.2}% with m = {} pairs; {drop}\n",
        100.0 * curve.full_accuracy,
        curve.m
    ))
}

pub fn cmd_rank(a: &RankArgs) -> Result<String> {
    let source = load(&a.source)?;
    let target = load(&a.target)?;
    let proto = load_pairs(&a.pairs)?;
    let curve = rank_sweep(&source, &target, &proto, &a.fit.config(), &a.ranks)?;
    io::write_atomic(&a.curve, io::rank_csv(&curve).as_bytes())?;
    io::write_report(&curve, &a.report)?;
    let mut out = format!("untruncated: {:.2}%\n", 100.0 * curve.fitted_accuracy);
    for pt in &curve.points {
        out.push_str(&format!(
            "k = {:>4}: {:.2}%  (variance explained {:.4})\n",
            pt.k,
            100.0 * pt.mean_accuracy,
            pt.variance_explained
        ));
    }
    Ok(out)
}
