use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use polarsteg::construct::ConstructionCache;
use polarsteg::core::codec::CoderConfig;
use polarsteg::core::construction::{
    key_set_size, select_adaptive_partition, select_robust_partition, ConstructionMethod, Scheme,
    DEFAULT_KEY_MARGIN,
};
use polarsteg::core::optimizer::{
    solve_am2, solve_dls, solve_pls, solve_robust_pls_am1, AttackModel, DistortionProfile, ProfileKind,
};
use polarsteg::core::stego::{
    adaptive_embed, adaptive_extract, derive_frozen_key, robust_embed, robust_extract, StegoContext,
};
use polarsteg::core::BitVector;
use polarsteg::files::{read_real_list, ConstructionFile, SolutionFile};
use polarsteg::sim::{self, ExperimentConfig, ExperimentKind, KernelTag, Runner};
use polarsteg::{bitfile, lsb};

#[derive(Parser)]
#[command(name = "polarsteg", version, about = "Polar-code adaptive and robust steganography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for per-position embedding probabilities.
    Solve(SolveArgs),
    /// Build the index partition for a solution.
    Construct(ConstructArgs),
    /// Embed a message into a cover (bit file, PNG or PGM).
    Embed(EmbedArgs),
    /// Extract a message from a (possibly noisy) stego.
    Extract(ExtractArgs),
    /// Run a seeded experiment from a TOML config.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Constant,
    Linear,
    Square,
}

impl From<ProfileArg> for ProfileKind {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Constant => ProfileKind::Constant,
            ProfileArg::Linear => ProfileKind::Linear,
            ProfileArg::Square => ProfileKind::Square,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Am1,
    Am2,
}

#[derive(Args)]
struct SolveArgs {
    /// Analytic profile; use with --len.
    #[arg(long, conflicts_with = "weights")]
    profile: Option<ProfileArg>,
    #[arg(long, requires = "profile")]
    len: Option<usize>,
    /// One cost per line, `inf` for wet positions.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Payload in bits.
    #[arg(long, group = "target")]
    payload: Option<f64>,
    /// Payload as a fraction of N.
    #[arg(long, group = "target")]
    rate: Option<f64>,
    /// Total distortion budget (adaptive only).
    #[arg(long, group = "target")]
    distortion: Option<f64>,
    /// Preset attack noise; selects the robust scheme.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum, default_value = "am1")]
    model: ModelArg,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long)]
    solution: PathBuf,
    /// Message length in bits.
    #[arg(long)]
    payload: usize,
    /// `bhattacharyya`, `merge:MU`, `merge-pe:MU` or `mc:TRIALS:SEED`.
    #[arg(long, default_value = "merge-pe:16")]
    method: String,
    /// Method for the attack channels (robust only).
    #[arg(long, default_value = "merge-pe:16")]
    attack_method: String,
    #[arg(long, default_value_t = DEFAULT_KEY_MARGIN)]
    key_margin: f64,
    /// Directory for cached constructions.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoderArgs {
    #[arg(long, default_value_t = 16)]
    list: usize,
    #[arg(long, value_enum, default_value = "exact")]
    kernel: KernelArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Exact,
    MinSum,
}

impl CoderArgs {
    fn config(&self) -> CoderConfig {
        let k = match self.kernel {
            KernelArg::Exact => KernelTag::Exact,
            KernelArg::MinSum => KernelTag::MinSum,
        };
        CoderConfig::list(self.list).with_kernel(k.into())
    }
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    construction: PathBuf,
    #[arg(long)]
    cover: PathBuf,
    /// Packed bit file of exactly `payload` bits.
    #[arg(long)]
    message: PathBuf,
    /// Shared secret for the key bits (robust only).
    #[arg(long)]
    key_secret: Option<u64>,
    #[command(flatten)]
    coder: CoderArgs,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    construction: PathBuf,
    #[arg(long)]
    stego: PathBuf,
    /// Needed for robust extraction.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long)]
    key_secret: Option<u64>,
    #[command(flatten)]
    coder: CoderArgs,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum SimKind {
    Distortion,
    Robustness,
}

#[derive(Args)]
struct SimulateArgs {
    kind: SimKind,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    list: Option<usize>,
    /// Output directory for report.csv and trials.ndrec.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Directory for cached constructions and bounds.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Exit nonzero if a configured check fails.
    #[arg(long)]
    check: bool,
    #[arg(short, long)]
    verbose: bool,
}

fn parse_method(s: &str) -> Result<ConstructionMethod> {
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts.as_slice() {
        ["bhattacharyya"] => ConstructionMethod::Bhattacharyya,
        ["merge", mu] => ConstructionMethod::DegradingMerge { mu: mu.parse()? },
        ["merge-pe", mu] => ConstructionMethod::MergeErrorProbability { mu: mu.parse()? },
        ["mc", t, seed] => ConstructionMethod::MonteCarlo {
            trials: t.parse()?,
            seed: seed.parse()?,
        },
        _ => bail!("unknown construction method {s:?}"),
    })
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "pgm")
    )
}

fn solve(a: SolveArgs) -> Result<()> {
    let (kind, profile) = match (&a.weights, a.profile, a.len) {
        (Some(w), _, _) => (ProfileKind::Custom, DistortionProfile::custom(read_real_list(w)?)?),
        (None, Some(p), Some(n)) => (p.into(), DistortionProfile::analytic(p.into(), n)?),
        _ => bail!("give --weights or --profile with --len"),
    };
    let n = profile.len() as f64;
    let q = match (a.payload, a.rate) {
        (Some(q), _) => Some(q),
        (None, Some(r)) => Some(r * n),
        _ => None,
    };
    let sol = match (q, a.distortion, a.theta) {
        (Some(q), None, None) => solve_pls(&profile, q)?,
        (None, Some(d), None) => solve_dls(&profile, d)?,
        (Some(q), None, Some(t)) => match a.model {
            ModelArg::Am1 => solve_robust_pls_am1(&profile, q, t)?,
            ModelArg::Am2 => solve_am2(&profile, q, t)?,
        },
        (None, Some(_), Some(_)) => bail!("--distortion is only supported without --theta"),
        _ => bail!("give one of --payload, --rate or --distortion"),
    };
    SolutionFile::new(kind, &sol).write(&a.out)?;
    println!(
        "lambda {} payload {:.6} bits distortion {:.6} ({:.6} per bit)",
        sol.lambda,
        sol.achieved_payload,
        sol.achieved_distortion,
        sol.per_bit_distortion()
    );
    Ok(())
}

fn construct(a: ConstructArgs) -> Result<()> {
    let sol = SolutionFile::read(&a.solution)?.solution()?;
    let cache = ConstructionCache::new(a.cache);
    let method = parse_method(&a.method)?;
    let w = cache.profile(&sol.embed_bank()?, method)?;
    let file = if sol.attack_model == AttackModel::None {
        let part = select_adaptive_partition(&w, a.payload)?;
        ConstructionFile::new(&part, method, w.scores().to_vec(), None)
    } else {
        let attack_method = parse_method(&a.attack_method)?;
        let qp = cache.profile(&sol.attack_bank()?, attack_method)?;
        let m_f = key_set_size(&sol.theta, a.key_margin)?;
        let part = select_robust_partition(&w, &qp, a.payload, m_f)?;
        ConstructionFile::new(&part, method, w.scores().to_vec(), Some((attack_method, qp.scores().to_vec())))
    };
    let part = file.partition()?;
    file.write(&a.out)?;
    println!(
        "N {} key {} message {} encoder {} nesting violation {:.6}",
        part.len(),
        part.key().len(),
        part.message().len(),
        part.encoder().len(),
        part.nesting_violation()
    );
    Ok(())
}

fn read_stego(path: &Path) -> Result<BitVector> {
    Ok(if is_image(path) {
        lsb::cover_bits(&lsb::load_gray(path)?)
    } else {
        bitfile::read(path)?
    })
}

fn embed(a: EmbedArgs) -> Result<()> {
    let sol = SolutionFile::read(&a.solution)?.solution()?;
    let part = ConstructionFile::read(&a.construction)?.partition()?;
    let message = bitfile::read(&a.message)?;
    let image = if is_image(&a.cover) { Some(lsb::load_gray(&a.cover)?) } else { None };
    let cover = match &image {
        Some(img) => lsb::cover_bits(img),
        None => bitfile::read(&a.cover)?,
    };
    let coder = a.coder.config();
    let stego = match part.scheme() {
        Scheme::Adaptive => {
            let ctx = StegoContext::adaptive(part, sol.embed_bank()?, coder)?;
            adaptive_embed(&cover, &message, &ctx)?
        }
        Scheme::Robust => {
            let secret = a.key_secret.context("robust embedding needs --key-secret")?;
            let key = derive_frozen_key(secret, part.key().len());
            let ctx = StegoContext::robust(part, sol.embed_bank()?, sol.attack_bank()?, key, coder)?;
            robust_embed(&cover, &message, &ctx)?
        }
    };
    let changed = cover.hamming_distance(&stego)?;
    match image {
        Some(mut img) => {
            lsb::apply_bits(&mut img, &stego)?;
            lsb::save_gray(&img, &a.out)?;
        }
        None => bitfile::write(&a.out, &stego)?,
    }
    println!("embedded {} bits, changed {changed} of {} positions", message.len(), cover.len());
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let part = ConstructionFile::read(&a.construction)?.partition()?;
    let stego = read_stego(&a.stego)?;
    let message = match part.scheme() {
        Scheme::Adaptive => adaptive_extract(&stego, &part)?,
        Scheme::Robust => {
            let sol_path = a.solution.context("robust extraction needs --solution")?;
            let sol = SolutionFile::read(&sol_path)?.solution()?;
            let secret = a.key_secret.context("robust extraction needs --key-secret")?;
            let key = derive_frozen_key(secret, part.key().len());
            let ctx = StegoContext::robust(part, sol.embed_bank()?, sol.attack_bank()?, key, a.coder.config())?;
            robust_extract(&stego, &ctx)?
        }
    };
    bitfile::write(&a.out, &message)?;
    println!("extracted {} bits", message.len());
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::read(&a.config)?;
    let expected = match a.kind {
        SimKind::Distortion => ExperimentKind::Distortion,
        SimKind::Robustness => ExperimentKind::Robustness,
    };
    if cfg.experiment != expected {
        bail!("config describes a {:?} experiment", cfg.experiment);
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if let Some(l) = a.list {
        cfg.list_size = l;
    }
    let mut runner = Runner::with_cache_dir(a.cache);
    runner.verbose = a.verbose;
    let report = sim::run_experiment(&cfg, &runner)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    report.write_csv(&a.out.join("report.csv"))?;
    report.write_records(&a.out.join("trials.ndrec"))?;
    println!("{} rows written to {}", report.rows.len(), a.out.join("report.csv").display());
    if a.check {
        let violations = report.check();
        for v in &violations {
            eprintln!("FAIL {v}");
        }
        if !violations.is_empty() {
            return Ok(ExitCode::FAILURE);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Solve(a) => solve(a)?,
        Command::Construct(a) => construct(a)?,
        Command::Embed(a) => embed(a)?,
        Command::Extract(a) => extract(a)?,
        Command::Simulate(a) => return simulate(a),
    }
    Ok(ExitCode::SUCCESS)
}
