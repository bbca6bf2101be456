//! Command-line harness for the projection toolkit.
//!
//! Subcommands generate datasets, project them, run the experiment sweeps
//! and convert reports. Every run prints its fully resolved configuration
//! (seed included) so any report row can be reproduced. Exit codes: 0 on
//! success, 2 for usage errors, 1 for runtime failures.

use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sparseproj::builders::Method;
use sparseproj::data_io::{
    generate_synthetic, load_libsvm, read_report_csv, write_libsvm, write_report, ReportFormat,
    ReportRecord, SyntheticSpec,
};
use sparseproj::experiments::{
    project_dataset, run, DataSource, ExperimentConfig, ExperimentKind,
};

#[derive(Parser)]
#[command(
    name = "sparseproj",
    version,
    about = "Sparse random projections: builders, metrics and experiment sweeps",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    /// Master seed driving all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo trials per sweep cell.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Cap trials at 500 for quick runs.
    #[arg(long, global = true)]
    fast: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Uniform01,
    StdNormal,
    GaussianClasses,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as LIBSVM text.
    Gen(GenArgs),
    /// Build one projection and write the projected dataset as LIBSVM text.
    Project(ProjectArgs),
    /// Row-occupancy stability sweep over target dimensions.
    Stability(StabilityArgs),
    /// Class-separability sweep over target dimensions.
    Separability(SweepArgs),
    /// Distance preservation experiments (relative error and probability).
    Distance(DistanceArgs),
    /// k-means accuracy and timing over a compression-factor sweep.
    Kmeans(KmeansArgs),
    /// Convert a report file between CSV and JSON.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Sample count.
    #[arg(long)]
    m: usize,
    /// Feature count.
    #[arg(long)]
    n: usize,
    /// Class means for gaussian-classes, comma separated.
    #[arg(long, value_delimiter = ',')]
    means: Option<Vec<f64>>,
    /// Per-feature standard deviation for gaussian-classes.
    #[arg(long, default_value_t = 1.0)]
    std: f64,
}

#[derive(Args)]
struct ProjectArgs {
    /// Input LIBSVM dataset.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Target dimension.
    #[arg(long)]
    d: usize,
    /// Sparsity parameter for the achlioptas method.
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args)]
struct StabilityArgs {
    /// Source dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Target dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    /// Methods to compare.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    /// JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    /// Input LIBSVM dataset path.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic dataset kind instead of a file.
    #[arg(long, value_enum)]
    synthetic: Option<KindArg>,
    /// Synthetic sample count.
    #[arg(long)]
    m: Option<usize>,
    /// Synthetic feature count.
    #[arg(long)]
    n: Option<usize>,
    /// Synthetic class means, comma separated.
    #[arg(long, value_delimiter = ',')]
    means: Option<Vec<f64>>,
    /// Synthetic per-feature standard deviation.
    #[arg(long)]
    std: Option<f64>,
    /// Min-max scale features after loading.
    #[arg(long)]
    scale_features: bool,
}

impl DataArgs {
    fn resolve(&self, seed: u64) -> Result<Option<DataSource>> {
        if let Some(path) = &self.data {
            return Ok(Some(DataSource::File(path.clone())));
        }
        let Some(kind) = self.synthetic else {
            return Ok(None);
        };
        let m = self.m.context("--synthetic needs --m")?;
        let n = self.n.context("--synthetic needs --n")?;
        let spec = match kind {
            KindArg::Uniform01 => SyntheticSpec::uniform01(m, n, seed),
            KindArg::StdNormal => SyntheticSpec::std_normal(m, n, seed),
            KindArg::GaussianClasses => SyntheticSpec::gaussian_classes(
                m,
                n,
                self.means.clone().context("gaussian-classes needs --means")?,
                self.std.unwrap_or(1.0),
                seed,
            ),
        };
        Ok(Some(DataSource::Synthetic(spec)))
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Target dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DistanceArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Which distance experiment to run.
    #[arg(long, value_enum, default_value_t = DistanceVariant::RelErrorVsD)]
    variant: DistanceVariant,
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    /// Fixed distortion bound for p-vs-d.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Distortion sweep for p-vs-eps, comma separated.
    #[arg(long, value_delimiter = ',')]
    epsilon_sweep: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceVariant {
    RelErrorVsD,
    PVsD,
    PVsEps,
}

#[derive(Args)]
struct KmeansArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Compression factors d/n in (0, 1], comma separated.
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    /// k-means restarts per cell.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Input report (.csv or .json).
    #[arg(long)]
    input: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // usage problems exit 2; --help/--version exit 0
        Err(err) => err.exit(),
    };
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Gen(args) => run_gen(&cli, args, seed),
        Command::Project(args) => run_project(&cli, args, seed),
        Command::Stability(args) => {
            let mut cfg = load_config(args.config.as_deref())?
                .unwrap_or_else(|| ExperimentConfig::new(ExperimentKind::Stability));
            cfg.experiment = ExperimentKind::Stability;
            if let Some(n) = args.n {
                cfg.n = Some(n);
            }
            if let Some(d) = &args.d {
                cfg.d_sweep = d.clone();
            }
            if let Some(methods) = &args.methods {
                cfg.methods = methods.clone();
            }
            finish_experiment(&cli, cfg, seed)
        }
        Command::Separability(args) => {
            let mut cfg = load_config(args.config.as_deref())?
                .unwrap_or_else(|| ExperimentConfig::new(ExperimentKind::Separability));
            cfg.experiment = ExperimentKind::Separability;
            if let Some(source) = args.data.resolve(data_seed(seed))? {
                cfg.data = Some(source);
            }
            cfg.scale_features |= args.data.scale_features;
            if let Some(d) = &args.d {
                cfg.d_sweep = d.clone();
            }
            if let Some(methods) = &args.methods {
                cfg.methods = methods.clone();
            }
            finish_experiment(&cli, cfg, seed)
        }
        Command::Distance(args) => {
            let kind = match args.variant {
                DistanceVariant::RelErrorVsD => ExperimentKind::RelErrorVsD,
                DistanceVariant::PVsD => ExperimentKind::PVsD,
                DistanceVariant::PVsEps => ExperimentKind::PVsEps,
            };
            let mut cfg =
                load_config(args.config.as_deref())?.unwrap_or_else(|| ExperimentConfig::new(kind));
            cfg.experiment = kind;
            if let Some(source) = args.data.resolve(data_seed(seed))? {
                cfg.data = Some(source);
            }
            cfg.scale_features |= args.data.scale_features;
            if let Some(d) = &args.d {
                cfg.d_sweep = d.clone();
            }
            if let Some(epsilon) = args.epsilon {
                cfg.epsilon = Some(epsilon);
            }
            if let Some(sweep) = &args.epsilon_sweep {
                cfg.epsilon_sweep = sweep.clone();
            }
            if let Some(methods) = &args.methods {
                cfg.methods = methods.clone();
            }
            if cli.trials.is_none() && args.config.is_none() {
                // probability estimates default to the heavier trial count
                cfg.trials = match kind {
                    ExperimentKind::RelErrorVsD => 100,
                    _ => 10_000,
                };
            }
            finish_experiment(&cli, cfg, seed)
        }
        Command::Kmeans(args) => {
            let mut cfg = load_config(args.config.as_deref())?
                .unwrap_or_else(|| ExperimentConfig::new(ExperimentKind::Kmeans));
            cfg.experiment = ExperimentKind::Kmeans;
            if let Some(source) = args.data.resolve(data_seed(seed))? {
                cfg.data = Some(source);
            }
            cfg.scale_features |= args.data.scale_features;
            if let Some(factors) = &args.factors {
                cfg.compression_sweep = factors.clone();
            } else if cfg.compression_sweep.is_empty() {
                cfg.compression_sweep = (1..=10).map(|i| f64::from(i) / 10.0).collect();
            }
            if let Some(methods) = &args.methods {
                cfg.methods = methods.clone();
            }
            if let Some(replicates) = args.replicates {
                cfg.replicates = replicates;
            }
            finish_experiment(&cli, cfg, seed)
        }
        Command::Report(args) => run_report(&cli, args),
    }
}

fn data_seed(master: u64) -> u64 {
    sparseproj::seed::mix(master, 0xDA7A)
}

fn load_config(path: Option<&std::path::Path>) -> Result<Option<ExperimentConfig>> {
    let Some(path) = path else { return Ok(None) };
    let mut text = String::new();
    File::open(path)
        .with_context(|| format!("opening config {}", path.display()))?
        .read_to_string(&mut text)?;
    let cfg = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    Ok(Some(cfg))
}

fn finish_experiment(cli: &Cli, mut cfg: ExperimentConfig, seed: u64) -> Result<()> {
    if cli.seed.is_some() || cfg.master_seed == 0 {
        cfg.master_seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if cli.fast {
        cfg.trials = cfg.trials.min(500);
    }
    println!("resolved config: {}", serde_json::to_string(&cfg)?);
    let records = run(&cfg)?;
    emit_report(cli, &records)?;
    eprintln!("{} report rows", records.len());
    Ok(())
}

fn emit_report(cli: &Cli, records: &[ReportRecord]) -> Result<()> {
    let format = cli.format.map_or(ReportFormat::Csv, ReportFormat::from);
    match &cli.out {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("creating report {}", path.display()))?;
            write_report(records, format, BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            write_report(records, format, stdout.lock())?;
        }
    }
    Ok(())
}

fn run_gen(cli: &Cli, args: &GenArgs, seed: u64) -> Result<()> {
    let spec = match args.kind {
        KindArg::Uniform01 => SyntheticSpec::uniform01(args.m, args.n, seed),
        KindArg::StdNormal => SyntheticSpec::std_normal(args.m, args.n, seed),
        KindArg::GaussianClasses => SyntheticSpec::gaussian_classes(
            args.m,
            args.n,
            args.means.clone().context("gaussian-classes needs --means")?,
            args.std,
            seed,
        ),
    };
    println!("resolved config: {}", serde_json::to_string(&spec)?);
    let data = generate_synthetic(&spec)?;
    match &cli.out {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("creating dataset {}", path.display()))?;
            write_libsvm(&data, BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            write_libsvm(&data, stdout.lock())?;
        }
    }
    eprintln!(
        "wrote {} samples, {} features, {} classes",
        data.n_samples(),
        data.n_features(),
        data.class_count
    );
    Ok(())
}

fn run_project(cli: &Cli, args: &ProjectArgs, seed: u64) -> Result<()> {
    println!(
        "resolved config: {{\"method\":\"{}\",\"d\":{},\"kappa\":{:?},\"seed\":{}}}",
        args.method, args.d, args.kappa, seed
    );
    let data = load_libsvm(&args.data)
        .with_context(|| format!("loading {}", args.data.display()))?;
    let (projected, matrix) = project_dataset(&data, args.method, args.d, args.kappa, seed)?;
    match &cli.out {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("creating output {}", path.display()))?;
            write_libsvm(&projected, BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            write_libsvm(&projected, stdout.lock())?;
        }
    }
    eprintln!(
        "projected {} samples from {} to {} dimensions ({} stored nonzeros)",
        projected.n_samples(),
        data.n_features(),
        projected.n_features(),
        matrix.nnz()
    );
    Ok(())
}

fn run_report(cli: &Cli, args: &ReportArgs) -> Result<()> {
    let extension = args
        .input
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    let records = match extension.as_str() {
        "csv" => {
            let file = File::open(&args.input)
                .with_context(|| format!("opening {}", args.input.display()))?;
            read_report_csv(file)?
        }
        "json" => read_report_json(&args.input)?,
        other => bail!("unsupported report extension '{other}' (expected csv or json)"),
    };
    println!(
        "resolved config: {{\"input\":{:?},\"rows\":{}}}",
        args.input, records.len()
    );
    emit_report(cli, &records)?;
    Ok(())
}

fn read_report_json(path: &std::path::Path) -> Result<Vec<ReportRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows: Vec<serde_json::Value> = serde_json::from_reader(file)?;
    let mut records = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let field = |name: &str| -> Result<&serde_json::Value> {
            row.get(name)
                .with_context(|| format!("row {i}: missing field {name}"))
        };
        let as_u64 = |name: &str| -> Result<u64> {
            field(name)?
                .as_u64()
                .with_context(|| format!("row {i}: field {name} is not an integer"))
        };
        let as_f64 = |name: &str| -> Result<f64> {
            field(name)?
                .as_f64()
                .with_context(|| format!("row {i}: field {name} is not a number"))
        };
        let opt_f64 = |name: &str| -> Result<Option<f64>> {
            let value = field(name)?;
            if value.is_null() {
                Ok(None)
            } else {
                value
                    .as_f64()
                    .map(Some)
                    .with_context(|| format!("row {i}: field {name} is not a number"))
            }
        };
        records.push(ReportRecord {
            method: field("method")?
                .as_str()
                .with_context(|| format!("row {i}: method is not a string"))?
                .to_string(),
            n: as_u64("n")? as usize,
            d: as_u64("d")? as usize,
            compression: as_f64("compression")?,
            epsilon: opt_f64("epsilon")?,
            metric: field("metric")?
                .as_str()
                .with_context(|| format!("row {i}: metric is not a string"))?
                .to_string(),
            value: as_f64("value")?,
            stderr: opt_f64("stderr")?,
            trials: as_u64("trials")?,
            seed: as_u64("seed")?,
            wall_time_seconds: opt_f64("wall_time_seconds")?,
        });
    }
    Ok(records)
}
