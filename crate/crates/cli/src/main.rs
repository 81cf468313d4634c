use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use orthoshadow::experiment::{self, metadata_path, write_json, ExperimentConfig};
use orthoshadow::validation::{validate_channel, validate_twirl, validate_variance};
use orthoshadow::variance::ratio_sweep;
use orthoshadow::{BasisTag, EnsembleSpec, Error, Group, MeasurementBasis, RngStream, Scope};

#[derive(Parser)]
#[command(name = "orthoshadow", version, about = "Orthogonal and unitary classical shadow workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate observables from a JSON experiment config.
    Estimate(EstimateArgs),
    /// Compare the closed-form channel with Monte Carlo and definition routes.
    ValidateChannel(ChannelArgs),
    /// Compare closed-form moments with commutant projection and Monte Carlo.
    ValidateTwirl(TwirlArgs),
    /// Compare empirical and predicted estimator variance.
    ValidateVariance(VarianceArgs),
    /// Exact real-versus-unitary variance ratios for random instances.
    RatioSweep(RatioArgs),
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    batches: Option<usize>,
    /// Estimates CSV; the metadata sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long)]
    allow_bias: bool,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, default_value = "global")]
    scope: Scope,
    /// One group, or one per qubit for local ensembles (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "orthogonal")]
    group: Vec<Group>,
    /// computational, sh or random:SEED (global ensembles only).
    #[arg(long, default_value = "computational")]
    basis: BasisTag,
    /// Hilbert-space dimension (global ensembles).
    #[arg(long, conflicts_with = "n")]
    d: Option<usize>,
    /// Number of qubits.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct ChannelArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TwirlArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "orthogonal")]
    group: Group,
    /// Random real and random complex vectors checked exactly.
    #[arg(long, default_value_t = 10)]
    vectors: usize,
    /// Monte Carlo samples per twirl; 0 skips the sampled route.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VarianceArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 100_000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long, default_value_t = 1)]
    n_min: usize,
    #[arg(long, default_value_t = 6)]
    n_max: usize,
    #[arg(long, default_value_t = 500)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-instance CSV; the metadata sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Validation,
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let io = match &e {
            Error::Io(_) => true,
            Error::Csv(c) => c.is_io_error(),
            Error::Json(j) => j.is_io(),
            _ => false,
        };
        if io {
            Failure::Io(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::ValidateChannel(a) => channel(a),
        Command::ValidateTwirl(a) => twirl(a),
        Command::ValidateVariance(a) => variance(a),
        Command::RatioSweep(a) => ratio(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn estimate(args: EstimateArgs) -> Outcome {
    let text = std::fs::read_to_string(&args.config).map_err(|e| Failure::Io(format!("{}: {e}", args.config.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(shots) = args.shots {
        config.shots = shots;
    }
    if let Some(batches) = args.batches {
        config.batches = batches;
    }
    if let Some(out) = args.out {
        config.emit.csv = Some(out);
    }
    if let Some(records) = args.records {
        config.emit.records = Some(records);
    }
    config.allow_bias |= args.allow_bias;

    let out = experiment::run_experiment(&config)?;
    for path in [&config.emit.csv, &config.emit.records].into_iter().flatten() {
        ensure_parent(path)?;
    }
    experiment::emit(&config, &out)?;

    println!("{:<16} {:>12} {:>12} {:>12} {:>12}  bias", "observable", "mean", "mom", "emp_var", "pred_var");
    for r in &out.reports {
        let pred = r.predicted_variance.as_ref().map_or("-".to_string(), |p| format!("{:.5}", p.value));
        println!(
            "{:<16} {:>12.6} {:>12.6} {:>12.5} {:>12}  {}",
            r.observable_id, r.mean, r.median_of_means, r.empirical_variance, pred, r.bias_warning
        );
    }
    let sc = &out.metadata.sample_complexity;
    println!(
        "median of means: eps = {:.4e} at failure probability <= {:.3e} ({} batches)",
        sc.epsilon, sc.failure_probability_bound, sc.batches
    );
    Ok(())
}

fn ensure_parent(path: &Path) -> Outcome {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))
        }
        _ => Ok(()),
    }
}

fn build_spec(args: &EnsembleArgs) -> Result<EnsembleSpec, Failure> {
    let usage = |m: &str| Failure::Usage(m.to_string());
    match args.scope {
        Scope::Global => {
            let [group] = args.group[..] else {
                return Err(usage("global ensembles take exactly one group"));
            };
            let d = match (args.d, args.n) {
                (Some(d), None) => d,
                (None, Some(n)) if n < usize::BITS as usize => 1 << n,
                _ => return Err(usage("give --d or --n")),
            };
            let basis = match &args.basis {
                BasisTag::Computational => MeasurementBasis::computational_dim(d),
                BasisTag::Random(seed) => MeasurementBasis::random_seeded(*seed, d)?,
                tag => {
                    if !d.is_power_of_two() {
                        return Err(usage("the sh basis needs a power-of-two dimension"));
                    }
                    MeasurementBasis::from_tag(tag, d.trailing_zeros() as usize)?
                }
            };
            let spec = EnsembleSpec::global(group, basis);
            spec.validate()?;
            Ok(spec)
        }
        Scope::Local => {
            if args.basis != BasisTag::Computational {
                return Err(usage("local ensembles measure in the computational basis"));
            }
            let n = match (args.n, args.d) {
                (Some(n), None) => n,
                (None, Some(d)) if d.is_power_of_two() => d.trailing_zeros() as usize,
                _ => return Err(usage("give --n (or a power-of-two --d)")),
            };
            let groups = match args.group.len() {
                1 => vec![args.group[0]; n],
                len if len == n => args.group.clone(),
                _ => return Err(usage("give one group or one per qubit")),
            };
            let spec = EnsembleSpec::local(groups);
            spec.validate()?;
            Ok(spec)
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    crate_version: &'a str,
    rng_algorithm: &'a str,
    wall_time_seconds: f64,
    report: T,
}

fn write_sidecar<T: Serialize>(path: &Path, command: &str, seed: u64, started: Instant, report: T) -> Outcome {
    ensure_parent(path)?;
    let sidecar = Sidecar {
        command,
        seed,
        crate_version: env!("CARGO_PKG_VERSION"),
        rng_algorithm: RngStream::ALGORITHM,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        report,
    };
    write_json(path, &sidecar)?;
    Ok(())
}

fn verdict(passed: bool) -> Outcome {
    if passed {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn channel(args: ChannelArgs) -> Outcome {
    let started = Instant::now();
    let spec = build_spec(&args.ensemble)?;
    let report = validate_channel(&spec, args.samples, args.seed)?;
    println!("{report}");
    if let Some(out) = &args.out {
        write_sidecar(out, "validate-channel", args.seed, started, &report)?;
    }
    verdict(report.passed)
}

fn twirl(args: TwirlArgs) -> Outcome {
    let started = Instant::now();
    let report = validate_twirl(args.group, args.d, args.k, args.vectors, args.samples, args.seed)?;
    println!("{report}");
    if let Some(out) = &args.out {
        write_sidecar(out, "validate-twirl", args.seed, started, &report)?;
    }
    verdict(report.passed)
}

fn variance(args: VarianceArgs) -> Outcome {
    let started = Instant::now();
    let spec = build_spec(&args.ensemble)?;
    let report = validate_variance(&spec, args.shots, args.seed)?;
    println!("{report}");
    if let Some(out) = &args.out {
        write_sidecar(out, "validate-variance", args.seed, started, &report)?;
    }
    verdict(report.passed)
}

fn ratio(args: RatioArgs) -> Outcome {
    let started = Instant::now();
    if args.n_min == 0 || args.n_min > args.n_max || args.instances < 2 {
        return Err(Failure::Usage("need 1 <= n-min <= n-max and at least 2 instances".into()));
    }
    let ns: Vec<usize> = (args.n_min..=args.n_max).collect();
    let (rows, summaries) = ratio_sweep(&ns, args.instances, args.seed)?;
    println!("{:>3} {:>10} {:>12} {:>12}", "n", "instances", "mean_ratio", "std_error");
    for s in &summaries {
        println!("{:>3} {:>10} {:>12.6} {:>12.6}", s.n, s.instances, s.mean_ratio, s.standard_error);
    }
    if let Some(out) = &args.out {
        ensure_parent(out)?;
        let mut w = csv::Writer::from_path(out).map_err(Error::from)?;
        for r in &rows {
            w.serialize(r).map_err(Error::from)?;
        }
        w.flush().map_err(|e| Failure::Io(e.to_string()))?;
        write_sidecar(&metadata_path(out), "ratio-sweep", args.seed, started, &summaries)?;
    }
    Ok(())
}
