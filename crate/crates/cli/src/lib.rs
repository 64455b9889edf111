//! Command implementations behind the `actkit` binary.
//!
//! Exit-code contract: 0 success, 1 verification failure, 2 usage or config
//! error, 3 I/O error.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use actkit::activations::{registry_list, ActivationError, ActivationInstance, ActivationKind};
use actkit::curves::{sample_curve, write_curve_csv, write_curve_svg, CurveError};
use actkit::gradcheck::{
    audit_activation, audit_scalar_fn, write_reports_csv, GradReport, SCALAR_STEP,
};
use actkit::train::{
    load_config_file, run_compare, run_train, ActivationConfig, DataConfig, OptimizerConfig,
    RunConfig, TrainError,
};

/// Process exit codes used by every subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    VerificationFailure = 1,
    Usage = 2,
    Io = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: ExitCode::Usage,
            message: msg.into(),
        }
    }

    fn io(msg: impl fmt::Display) -> Self {
        CliError {
            code: ExitCode::Io,
            message: msg.to_string(),
        }
    }

    fn verification(msg: impl Into<String>) -> Self {
        CliError {
            code: ExitCode::VerificationFailure,
            message: msg.into(),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match &e {
            TrainError::Config(_) | TrainError::Activation(_) | TrainError::Optim(_) => {
                CliError::usage(e.to_string())
            }
            TrainError::Data(_) | TrainError::Io(_) => CliError::io(e),
            TrainError::Network(_) => CliError::verification(e.to_string()),
        }
    }
}

impl From<ActivationError> for CliError {
    fn from(e: ActivationError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "actkit",
    version,
    about = "Activation function catalog, gradient audits, and training harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the activation catalog with parameter names and defaults.
    List(ListArgs),
    /// Sample an activation and its derivative onto a CSV (and optional SVG).
    Plot(PlotArgs),
    /// Audit analytic derivatives against central differences.
    Gradcheck(GradcheckArgs),
    /// Run one seeded training job.
    Train(TrainArgs),
    /// Train several activations under an identical config and rank them.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
pub struct ListArgs {
    /// Emit machine-readable JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Activation family name.
    #[arg(long)]
    pub activation: String,
    /// Parameter overrides, `name=value[,name=value]`.
    #[arg(long)]
    pub params: Option<String>,
    /// Sampling range, `min:max`.
    #[arg(long, default_value = "-6:6", allow_hyphen_values = true)]
    pub range: String,
    /// Number of grid samples, endpoints inclusive.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Output directory for curves.csv (and curves.svg).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write a polyline SVG rendering.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Comma-separated family filter; all families when omitted.
    #[arg(long)]
    pub activation: Option<String>,
    /// Number of audit points sampled uniformly from [-5, 5].
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Relative tolerance for a report to pass.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for gradreport.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Summarize as JSON on stdout.
    #[arg(long)]
    pub json: bool,
    /// Fault-injection hook: audit the named family against a deliberately
    /// corrupted derivative.
    #[arg(long, hide = true)]
    pub corrupt: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    /// JSON run config; command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding the four standard IDX file names.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Zero-pad 28x28 images to 32x32 at load time.
    #[arg(long)]
    pub pad_32: bool,
    /// Use the synthetic blob dataset instead of IDX files.
    #[arg(long)]
    pub synth: bool,
    /// Activation family, optionally `name:frozen` or `name:trainable`.
    #[arg(long)]
    pub activation: Option<String>,
    /// Activation parameter overrides, `name=value[,name=value]`.
    #[arg(long)]
    pub params: Option<String>,
    /// Layer sizes including input and output, comma separated.
    #[arg(long)]
    pub layers: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// `adam` or `sgd`.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for metrics.json and checkpoint.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cap on total optimizer steps.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Disable the per-epoch shuffle.
    #[arg(long)]
    pub no_shuffle: bool,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Comma-separated activation tokens (>= 2), e.g.
    /// `erfrelu,serf,erfrelu:frozen`.
    #[arg(long)]
    pub activations: String,
    #[command(flatten)]
    pub train: TrainArgs,
}

/// Dispatch a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::List(args) => cmd_list(&args),
        Command::Plot(args) => cmd_plot(&args),
        Command::Gradcheck(args) => cmd_gradcheck(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Compare(args) => cmd_compare(&args),
    }
}

#[derive(Serialize)]
struct ListRowParam {
    name: &'static str,
    default: f64,
    trainable: bool,
}

#[derive(Serialize)]
struct ListRow {
    name: &'static str,
    arity: usize,
    params: Vec<ListRowParam>,
    tuned_defaults: bool,
}

/// Print the catalog; one row per family, deterministic order.
pub fn cmd_list(args: &ListArgs) -> Result<(), CliError> {
    let rows: Vec<ListRow> = registry_list()
        .into_iter()
        .map(|e| ListRow {
            name: e.name,
            arity: e.params.len(),
            params: e
                .params
                .iter()
                .map(|p| ListRowParam {
                    name: p.name,
                    default: p.default,
                    trainable: p.trainable,
                })
                .collect(),
            tuned_defaults: e.tuned_defaults,
        })
        .collect();
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rows).expect("registry serialize")
        );
    } else {
        println!("{:<11} {:<6} {:<7} parameters", "name", "arity", "tuned");
        for r in &rows {
            let params = r
                .params
                .iter()
                .map(|p| {
                    format!(
                        "{}={}{}",
                        p.name,
                        p.default,
                        if p.trainable { "*" } else { "" }
                    )
                })
                .collect::<Vec<_>>()
                .join(", ");
            println!(
                "{:<11} {:<6} {:<7} {}",
                r.name, r.arity, r.tuned_defaults, params
            );
        }
        println!(
            "({} families; * marks parameters trained by default)",
            rows.len()
        );
    }
    Ok(())
}

fn parse_params(text: &str) -> Result<BTreeMap<String, f64>, CliError> {
    let mut map = BTreeMap::new();
    for piece in text.split(',').filter(|p| !p.is_empty()) {
        let (name, value) = piece.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "bad parameter override '{piece}', expected name=value"
            ))
        })?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::usage(format!("bad numeric value in '{piece}'")))?;
        map.insert(name.trim().to_string(), value);
    }
    Ok(map)
}

fn build_instance(name: &str, params: &Option<String>) -> Result<ActivationInstance, CliError> {
    let kind = ActivationKind::from_name(name)?;
    let mut set = actkit::activations::default_params(kind);
    if let Some(text) = params {
        for (n, v) in parse_params(text)? {
            set.set(kind, &n, v)?;
        }
    }
    Ok(ActivationInstance::new(kind, set)?)
}

/// Sample a curve to `curves.csv` (and optionally `curves.svg`).
pub fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let (min, max) = args
        .range
        .split_once(':')
        .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)))
        .ok_or_else(|| CliError::usage(format!("bad range '{}', expected min:max", args.range)))?;
    let inst = build_instance(&args.activation, &args.params)?;
    let points = sample_curve(&inst, min, max, args.samples)?;

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("curves.csv");
    let mut csv = Vec::new();
    write_curve_csv(&mut csv, &points)?;
    std::fs::write(&csv_path, csv)?;
    println!("wrote {} samples to {}", points.len(), csv_path.display());
    if args.svg {
        let svg_path = args.out.join("curves.svg");
        let mut svg = Vec::new();
        write_curve_svg(&mut svg, inst.kind().name(), &points)?;
        std::fs::write(&svg_path, svg)?;
        println!("wrote {}", svg_path.display());
    }
    Ok(())
}

fn gradcheck_points(n: usize, seed: u64) -> Vec<f64> {
    // deterministic low-discrepancy sweep of [-5, 5]; seed rotates the phase
    let golden = 0.618_033_988_749_894_9_f64;
    let phase = (seed as f64 * golden).fract();
    (0..n)
        .map(|i| -5.0 + 10.0 * ((i as f64 * golden + phase).fract()))
        .collect()
}

#[derive(Serialize)]
struct GradcheckSummary {
    family: String,
    reports: usize,
    failed: usize,
    skipped: usize,
}

/// Audit the selected families; nonzero exit iff any report fails.
pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<(), CliError> {
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(CliError::usage(format!(
            "tolerance must be positive, got {}",
            args.tol
        )));
    }
    let kinds: Vec<ActivationKind> = match &args.activation {
        None => actkit::activations::ALL_KINDS.to_vec(),
        Some(filter) => filter
            .split(',')
            .filter(|s| !s.is_empty())
            .map(ActivationKind::from_name)
            .collect::<Result<_, _>>()?,
    };
    let points = gradcheck_points(args.points, args.seed);

    let mut all_reports: Vec<GradReport> = Vec::new();
    let mut summaries = Vec::new();
    for kind in kinds {
        let inst = ActivationInstance::with_defaults(kind);
        let (reports, skipped) = if args.corrupt.as_deref() == Some(kind.name()) {
            let f = {
                let inst = inst.clone();
                move |x: f64| inst.forward(x).expect("total on defaults")
            };
            let df = {
                let inst = inst.clone();
                move |x: f64| {
                    let d = inst.derivative(x).expect("total on defaults");
                    d + 0.01 * (1.0 + d.abs())
                }
            };
            let kept: Vec<f64> = points
                .iter()
                .copied()
                .filter(|&x| kind.kinks().iter().all(|&k| (x - k).abs() > 1e-3))
                .collect();
            let n_skipped = points.len() - kept.len();
            (
                audit_scalar_fn(f, df, &kept, SCALAR_STEP, args.tol, &format!("{kind}/x")),
                n_skipped,
            )
        } else {
            let audit = audit_activation(&inst, &points, args.tol)?;
            let n_skipped = audit.skipped.len();
            (audit.reports, n_skipped)
        };
        summaries.push(GradcheckSummary {
            family: kind.name().to_string(),
            reports: reports.len(),
            failed: reports.iter().filter(|r| !r.pass).count(),
            skipped,
        });
        all_reports.extend(reports);
    }

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("gradreport.csv");
    let mut csv = Vec::new();
    write_reports_csv(&mut csv, &all_reports)?;
    std::fs::write(&csv_path, csv)?;

    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&summaries).expect("summary serialize")
        );
    } else {
        for s in &summaries {
            println!(
                "{:<11} {} reports, {} failed, {} skipped near kinks",
                s.family, s.reports, s.failed, s.skipped
            );
        }
        println!("report: {}", csv_path.display());
    }

    let failed: usize = summaries.iter().map(|s| s.failed).sum();
    if failed > 0 {
        return Err(CliError::verification(format!(
            "{failed} gradient reports failed"
        )));
    }
    Ok(())
}

/// Assemble a RunConfig from an optional config file plus flag overrides;
/// flags win.
pub fn resolve_run_config(args: &TrainArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => load_config_file(path)?,
        None => RunConfig {
            layers: None,
            activation: None,
            activations: None,
            optimizer: OptimizerConfig::default(),
            epochs: 5,
            batch_size: 128,
            seed: 42,
            data: DataConfig::Synth {
                train_n: 512,
                test_n: 256,
                classes: 2,
                separation: 6.0,
            },
            out_dir: None,
            max_steps: None,
            shuffle: true,
        },
    };

    if let Some(dir) = &args.data_dir {
        cfg.data = DataConfig::Idx {
            dir: dir.clone(),
            pad_to_32: args.pad_32,
        };
    } else if args.synth {
        cfg.data = DataConfig::Synth {
            train_n: 512,
            test_n: 256,
            classes: 2,
            separation: 6.0,
        };
    } else if args.pad_32 {
        if let DataConfig::Idx { pad_to_32, .. } = &mut cfg.data {
            *pad_to_32 = true;
        }
    }
    if args.config.is_none() && args.data_dir.is_none() && !args.synth {
        return Err(CliError::usage(
            "a dataset is required: --data-dir, --synth, or --config",
        ));
    }

    if let Some(token) = &args.activation {
        let mut ac = ActivationConfig::parse_token(token)?;
        if let Some(params) = &args.params {
            ac.params = parse_params(params)?;
        }
        cfg.activation = Some(ac);
        cfg.activations = None;
    } else if let Some(params) = &args.params {
        let overrides = parse_params(params)?;
        if let Some(ac) = &mut cfg.activation {
            ac.params.extend(overrides);
        } else {
            return Err(CliError::usage(
                "--params needs --activation or a config activation",
            ));
        }
    }

    if let Some(text) = &args.layers {
        let sizes: Result<Vec<usize>, _> = text.split(',').map(|s| s.trim().parse()).collect();
        cfg.layers = Some(sizes.map_err(|_| CliError::usage(format!("bad --layers '{text}'")))?);
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(b) = args.batch_size {
        cfg.batch_size = b;
    }
    if let Some(name) = &args.optimizer {
        cfg.optimizer = match name.as_str() {
            "adam" => OptimizerConfig::default(),
            "sgd" => OptimizerConfig::Sgd { lr: 0.001 },
            other => return Err(CliError::usage(format!("unknown optimizer '{other}'"))),
        };
    }
    if let Some(lr) = args.lr {
        cfg.optimizer = cfg.optimizer.with_learning_rate(lr);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    } else if cfg.out_dir.is_none() {
        cfg.out_dir = Some(PathBuf::from("."));
    }
    if args.max_steps.is_some() {
        cfg.max_steps = args.max_steps;
    }
    if args.no_shuffle {
        cfg.shuffle = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run one training job and print per-epoch metrics.
pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = resolve_run_config(args)?;
    let outcome = run_train(&cfg)?;
    let m = &outcome.metrics;
    for e in &m.epochs {
        println!(
            "epoch {:>3}: train loss {:.6}, train acc {:.4}, test acc {:.4}",
            e.epoch, e.train_loss, e.train_accuracy, e.test_accuracy
        );
    }
    println!(
        "final: train loss {:.6}, train acc {:.4}, test acc {:.4} ({:.1}s)",
        m.final_train_loss,
        m.final_train_accuracy,
        m.final_test_accuracy,
        m.wall_time.as_secs_f64()
    );
    for layer in &m.final_params {
        if !layer.params.is_empty() {
            let rendered = layer
                .params
                .iter()
                .map(|p| format!("{}={}", p.name, p.value))
                .collect::<Vec<_>>()
                .join(", ");
            println!("layer {} {}: {}", layer.layer, layer.activation, rendered);
        }
    }
    if let Some(dir) = &cfg.out_dir {
        println!("metrics: {}", dir.join("metrics.json").display());
    }
    Ok(())
}

/// Train each listed activation under the shared config and print the
/// ranking.
pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let specs: Vec<ActivationConfig> = args
        .activations
        .split(',')
        .filter(|s| !s.is_empty())
        .map(ActivationConfig::parse_token)
        .collect::<Result<_, _>>()?;
    if specs.len() < 2 {
        return Err(CliError::usage("compare needs at least two activations"));
    }
    // the per-run activation comes from the list; the placeholder only
    // satisfies config validation
    let train_args = TrainArgs {
        activation: Some(specs[0].kind.clone()),
        ..clone_train_args(&args.train)
    };
    let cfg = resolve_run_config(&train_args)?;

    let report = run_compare(&cfg, &specs)?;
    println!("rank  activation         test_acc   train_loss");
    for row in &report.rows {
        println!(
            "{:<5} {:<18} {:<10.4} {:.6}",
            row.rank, row.activation, row.test_accuracy, row.train_loss
        );
    }
    if let Some(dir) = &cfg.out_dir {
        println!("report: {}", dir.join("compare.csv").display());
    }
    Ok(())
}

fn clone_train_args(a: &TrainArgs) -> TrainArgs {
    TrainArgs {
        config: a.config.clone(),
        data_dir: a.data_dir.clone(),
        pad_32: a.pad_32,
        synth: a.synth,
        activation: a.activation.clone(),
        params: a.params.clone(),
        layers: a.layers.clone(),
        epochs: a.epochs,
        batch_size: a.batch_size,
        lr: a.lr,
        optimizer: a.optimizer.clone(),
        seed: a.seed,
        out: a.out.clone(),
        max_steps: a.max_steps,
        no_shuffle: a.no_shuffle,
    }
}
