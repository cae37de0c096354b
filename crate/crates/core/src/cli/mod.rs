//! The `delaybw` command line: probe, estimate, simulate, calibrate, stats.
//!
//! Exit codes: 0 success, 1 internal error, 2 target unreachable,
//! 3 estimation or statistics failure, 64 usage error, 65 bad input data.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::estimator::{self, BandwidthEstimate, DelayProfile, EstimateError};
use crate::intercept_model::{self, FitOptions, InterceptModel, ModelError, PathFeatures};
use crate::probe::{self, ProbeError, ProbePlan};
use crate::sample::{ProbeMethod, ProbeSample};
use crate::sim::{self, Experiment, ProbeSize, SimError, SimPath};
use crate::stats::{self, StatsError};
use crate::store::{self, CsvMapping, SessionPlan, SessionRecord, SimulationPlan, SizeUnit, StoreError};
use crate::units::{format_ms, format_rate};
use config::{parse_sizes, CliConfig, OutputFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_UNREACHABLE: i32 = 2;
pub const EXIT_ESTIMATE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

/// Creation time written into simulated sessions so that equal inputs give
/// byte-identical files.
pub const SIMULATED_CREATED_AT: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Parser)]
#[command(
    name = "delaybw",
    version,
    about = "Available-bandwidth estimation from probe delays at several packet sizes"
)]
pub struct Cli {
    /// key=value file with defaults (flags take precedence)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Machine-readable JSON output
    #[arg(long, global = true)]
    pub json: bool,
    /// Output format (text, json, csv)
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Override the simulator seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Where to write the session, model or report
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// More diagnostics on stderr
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probe a live target with echo packets of several sizes
    Probe(ProbeArgs),
    /// Estimate bandwidth and intercept from a session file or CSV
    Estimate(EstimateArgs),
    /// Run the path simulator and compare the estimate with ground truth
    Simulate(SimulateArgs),
    /// Fit the hop-count / route-length intercept model
    Calibrate(CalibrateArgs),
    /// Delay, jitter and loss summary of a session
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    pub target: String,
    /// Payload sizes in bytes, comma separated
    #[arg(long)]
    pub sizes: Option<String>,
    /// Probes per size
    #[arg(long)]
    pub count: Option<usize>,
    /// Seconds between consecutive probes
    #[arg(long)]
    pub gap: Option<f64>,
    /// Seconds before an unanswered probe counts as lost
    #[arg(long)]
    pub timeout: Option<f64>,
    /// icmp or udp
    #[arg(long)]
    pub method: Option<ProbeMethod>,
    /// Reflector port for --method udp
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    /// Count hops to the target before probing
    #[arg(long)]
    pub discover_hops: bool,
    #[arg(long)]
    pub max_ttl: Option<u8>,
    /// Known hop count (skips discovery)
    #[arg(long)]
    pub hop_count: Option<u32>,
    /// Route length in km, stored with the hop count as path features
    #[arg(long)]
    pub route_km: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct CsvArgs {
    /// CSV column holding the packet size
    #[arg(long)]
    pub size_col: Option<String>,
    /// Unit of the size column (bytes or bits)
    #[arg(long)]
    pub size_unit: Option<SizeUnit>,
    /// CSV column holding the delay in seconds
    #[arg(long)]
    pub delay_col: Option<String>,
    #[arg(long)]
    pub lost_col: Option<String>,
    #[arg(long)]
    pub timestamp_col: Option<String>,
    /// Path id for CSV rows (defaults to the file stem)
    #[arg(long)]
    pub path_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Session JSONL or CSV file
    pub input: PathBuf,
    #[arg(long)]
    pub min_samples: Option<usize>,
    /// Halve delays (round trip to one way; assumes a symmetric path)
    #[arg(long)]
    pub one_way_halve: bool,
    /// Intercept model JSON from `calibrate`; needs path features
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub hop_count: Option<u32>,
    #[arg(long)]
    pub route_km: Option<f64>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Path config JSON: {"seed":..,"hops":[{"capacity_bps":..,..}]}
    pub path_config: PathBuf,
    /// Payload sizes in bytes, comma separated
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Simulated seconds between probes
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub min_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with columns path_id, n, l_km, a_s
    pub observations: PathBuf,
    /// Fit an additional constant term
    #[arg(long)]
    pub with_constant: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Session JSONL or CSV file
    pub input: PathBuf,
    /// Emit the sliding-window jitter series as CSV
    #[arg(long)]
    pub series: bool,
    #[arg(long)]
    pub window: Option<usize>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        CliError::new(EXIT_ESTIMATE, format!("estimation failed: {e}"))
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::new(EXIT_ESTIMATE, format!("statistics failed: {e}"))
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidFeatures(_) => CliError::new(EXIT_DATA, e.to_string()),
            e => CliError::new(EXIT_ESTIMATE, format!("calibration failed: {e}")),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        let code = match e {
            ProbeError::AllProbesLost(_) | ProbeError::NoReply(_) | ProbeError::ResolveFailure(_) => EXIT_UNREACHABLE,
            ProbeError::InvalidPlan(_) => EXIT_USAGE,
            ProbeError::PermissionDenied(_) | ProbeError::Io(_) => EXIT_INTERNAL,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        let code = match e {
            StoreError::Io { .. } => EXIT_INTERNAL,
            _ => EXIT_DATA,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidSizes | SimError::ZeroCount => CliError::usage(e.to_string()),
            e => CliError::new(EXIT_DATA, e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        // A closed pipe (`| head`) ends output early but is not a failure.
        if e.kind() == io::ErrorKind::BrokenPipe {
            return CliError::new(EXIT_OK, String::new());
        }
        CliError::new(EXIT_INTERNAL, e.to_string())
    }
}

/// Settings shared by every command after config/flag resolution.
struct Ctx<'a> {
    cfg: CliConfig,
    format: OutputFormat,
    seed: Option<u64>,
    output: Option<PathBuf>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn verbose(&self) -> bool {
        self.cfg.verbosity > 0
    }

    fn emit_json(&mut self, value: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(EXIT_INTERNAL, e.to_string()))?;
        writeln!(self.out, "{text}")?;
        Ok(())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) if e.code == EXIT_OK => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => CliConfig::load(p).map_err(CliError::usage)?,
        None => CliConfig::default(),
    };
    cfg.verbosity = cfg.verbosity.max(cli.verbose);
    let format = if cli.json {
        OutputFormat::Json
    } else {
        cli.format.unwrap_or(cfg.format)
    };
    let mut ctx = Ctx {
        cfg,
        format,
        seed: cli.seed,
        output: cli.output,
        out,
        err,
    };
    match cli.command {
        Command::Probe(a) => cmd_probe(&mut ctx, a),
        Command::Estimate(a) => cmd_estimate(&mut ctx, a),
        Command::Simulate(a) => cmd_simulate(&mut ctx, a),
        Command::Calibrate(a) => cmd_calibrate(&mut ctx, a),
        Command::Stats(a) => cmd_stats(&mut ctx, a),
    }
}

#[derive(Serialize)]
struct PointReport {
    size_bits: u64,
    delay_s: f64,
    samples: usize,
}

#[derive(Serialize)]
struct EstimateReport {
    path_id: String,
    #[serde(flatten)]
    estimate: BandwidthEstimate,
    points: Vec<PointReport>,
    dropped: Vec<estimator::DroppedSize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_estimate: Option<BandwidthEstimate>,
}

fn estimate_report(profile: &DelayProfile, estimate: BandwidthEstimate) -> EstimateReport {
    EstimateReport {
        path_id: profile.path_id.clone(),
        estimate,
        points: profile
            .points()
            .iter()
            .map(|p| PointReport {
                size_bits: p.size_bits(),
                delay_s: p.delay_s(),
                samples: profile.samples_per_size().get(&p.size_bits()).copied().unwrap_or(0),
            })
            .collect(),
        dropped: profile.dropped.clone(),
        model_estimate: None,
    }
}

fn method_name(e: &BandwidthEstimate) -> &'static str {
    match e.method {
        estimator::EstimateMethod::Direct => "direct",
        estimator::EstimateMethod::Pairwise => "pairwise",
        estimator::EstimateMethod::Regression => "regression",
        estimator::EstimateMethod::InterceptCorrected => "intercept_corrected",
    }
}

fn write_estimate_text(w: &mut dyn Write, e: &BandwidthEstimate, n_sizes: usize) -> io::Result<()> {
    writeln!(
        w,
        "B_av = {}, a = {}",
        format_rate(e.b_av_bps),
        format_ms(e.intercept_s)
    )?;
    writeln!(
        w,
        "  rate {:.0} bit/s, method {}, residual {}, {} sizes",
        e.b_av_bps,
        method_name(e),
        format_ms(e.residual_rms_s),
        n_sizes
    )?;
    for warning in &e.warnings {
        writeln!(w, "  warning: {warning}")?;
    }
    Ok(())
}

fn write_report(ctx: &mut Ctx<'_>, report: &EstimateReport) -> Result<(), CliError> {
    match ctx.format {
        OutputFormat::Json => ctx.emit_json(report),
        OutputFormat::Csv => {
            let e = &report.estimate;
            writeln!(
                ctx.out,
                "path_id,method,b_av_bps,intercept_s,residual_rms_s,n_sizes,warnings"
            )?;
            writeln!(
                ctx.out,
                "{},{},{},{},{},{},{}",
                report.path_id,
                method_name(e),
                e.b_av_bps,
                e.intercept_s,
                e.residual_rms_s,
                report.points.len(),
                e.warnings.join(";")
            )?;
            Ok(())
        }
        OutputFormat::Text => {
            write_estimate_text(ctx.out, &report.estimate, report.points.len())?;
            if let Some(m) = &report.model_estimate {
                writeln!(
                    ctx.out,
                    "with intercept model: B_av = {}, a = {}",
                    format_rate(m.b_av_bps),
                    format_ms(m.intercept_s)
                )?;
            }
            Ok(())
        }
    }
}

fn resolve_sizes(flag: &Option<String>, cfg: &CliConfig) -> Result<Vec<u32>, CliError> {
    match flag {
        Some(s) => parse_sizes(s).map_err(CliError::usage),
        None => Ok(cfg.sizes.clone()),
    }
}

fn random_session_id() -> String {
    format!(
        "{}-{:08x}",
        chrono::Utc::now().format("%Y%m%dT%H%M%SZ"),
        rand::random::<u32>()
    )
}

fn cmd_probe(ctx: &mut Ctx<'_>, a: ProbeArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let plan = ProbePlan {
        target: a.target.clone(),
        sizes_payload_bytes: resolve_sizes(&a.sizes, cfg)?,
        count_per_size: a.count.unwrap_or(cfg.count),
        inter_probe_gap_s: a.gap.unwrap_or(cfg.gap_s),
        timeout_s: a.timeout.unwrap_or(cfg.timeout_s),
        method: a.method.unwrap_or(cfg.method),
        udp_port: match a.method.unwrap_or(cfg.method) {
            ProbeMethod::UdpEcho => Some(a.port.unwrap_or(cfg.udp_port)),
            _ => None,
        },
    };
    plan.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let min_samples = a.min_samples.unwrap_or(cfg.min_samples);
    let max_ttl = a.max_ttl.unwrap_or(cfg.max_ttl);

    let hop_count = match (a.hop_count, a.discover_hops) {
        (Some(n), _) => Some(n),
        (None, true) => {
            let timeout = Duration::from_secs_f64(plan.timeout_s.min(1.0));
            Some(u32::from(probe::discover_hops(&plan.target, max_ttl, timeout)?))
        }
        (None, false) => None,
    };
    let features = match (hop_count, a.route_km) {
        (Some(n), l) => Some(PathFeatures::new(plan.target.clone(), n, l.unwrap_or(0.0))?),
        (None, Some(_)) => return Err(CliError::usage("--route-km needs --hop-count or --discover-hops")),
        (None, None) => None,
    };

    let samples = probe::run_session(&plan)?;
    let record = SessionRecord {
        session_id: random_session_id(),
        created_at: store::now_utc(),
        plan: SessionPlan::Probe(plan.clone()),
        samples,
        features,
        extra: Map::new(),
    };
    let path = ctx
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.jsonl", record.session_id)));
    store::save_session(&record, &path)?;

    let lost = record.samples.iter().filter(|s| s.lost).count();
    // Short sessions cannot meet the default threshold; never ask for more than was sent.
    let threshold = min_samples.min(plan.count_per_size).max(1);
    let estimate = estimator::min_delay_profile(&record.samples, threshold)
        .and_then(|p| estimator::estimate_profile(&p).map(|e| (p, e)));

    match ctx.format {
        OutputFormat::Json => {
            let (est, error) = match &estimate {
                Ok((p, e)) => (serde_json::to_value(estimate_report(p, e.clone())).ok(), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let v = json!({
                "session_id": record.session_id,
                "session_file": path,
                "samples": record.samples.len(),
                "lost": lost,
                "hop_count": record.features.as_ref().map(|f| f.hop_count_n),
                "estimate": est,
                "estimate_error": error,
            });
            ctx.emit_json(&v)?;
        }
        _ => {
            writeln!(ctx.out, "session {} -> {}", record.session_id, path.display())?;
            writeln!(ctx.out, "{} samples, {} lost", record.samples.len(), lost)?;
            if let Some(f) = &record.features {
                writeln!(ctx.out, "hops {}, route {} km", f.hop_count_n, f.route_length_l_km)?;
            }
            match &estimate {
                Ok((p, e)) => write_estimate_text(ctx.out, e, p.len())?,
                Err(e) => writeln!(ctx.err, "warning: no estimate: {e}")?,
            }
        }
    }
    Ok(())
}

struct LoadedSamples {
    samples: Vec<ProbeSample>,
    features: Option<PathFeatures>,
    unparseable: usize,
}

fn looks_like_session(path: &Path) -> Result<bool, CliError> {
    let mut f = fs::File::open(path).map_err(|e| CliError::new(EXIT_INTERNAL, format!("{}: {e}", path.display())))?;
    let mut head = [0u8; 64];
    let n = f.read(&mut head)?;
    Ok(head[..n].iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{'))
}

fn load_samples(path: &Path, csv: &CsvArgs) -> Result<LoadedSamples, CliError> {
    if looks_like_session(path)? {
        let rec = store::load_session(path)?;
        return Ok(LoadedSamples {
            samples: rec.samples,
            features: rec.features,
            unparseable: 0,
        });
    }
    let path_id = csv.path_id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let headers = store::csv_headers(fs::File::open(path)?)?;
    let mut mapping = match (&csv.size_col, &csv.delay_col) {
        (Some(size), Some(delay)) => {
            CsvMapping::simple(path_id.clone(), size, csv.size_unit.unwrap_or(SizeUnit::Bytes), delay)
        }
        (None, None) => CsvMapping::detect(&headers, &path_id).ok_or_else(|| {
            CliError::new(
                EXIT_DATA,
                "cannot infer CSV columns; pass --size-col and --delay-col (and --size-unit)",
            )
        })?,
        _ => return Err(CliError::usage("--size-col and --delay-col go together")),
    };
    if let Some(unit) = csv.size_unit {
        mapping.size_unit = unit;
    }
    if csv.lost_col.is_some() {
        mapping.lost_column = csv.lost_col.clone();
    }
    if csv.timestamp_col.is_some() {
        mapping.timestamp_column = csv.timestamp_col.clone();
    }
    let imported = store::import_csv(path, &mapping)?;
    Ok(LoadedSamples {
        samples: imported.samples,
        features: None,
        unparseable: imported.unparseable_delays,
    })
}

fn cmd_estimate(ctx: &mut Ctx<'_>, a: EstimateArgs) -> Result<(), CliError> {
    let loaded = load_samples(&a.input, &a.csv)?;
    if loaded.unparseable > 0 {
        writeln!(
            ctx.err,
            "warning: {} rows with unparseable delay counted as lost",
            loaded.unparseable
        )?;
    }
    let min_samples = a.min_samples.unwrap_or(ctx.cfg.min_samples);
    let mut profile = estimator::min_delay_profile(&loaded.samples, min_samples)?;
    if ctx.verbose() {
        for d in &profile.dropped {
            writeln!(
                ctx.err,
                "dropped size {} bits: {} delivered samples < {}",
                d.size_bits, d.delivered, min_samples
            )?;
        }
    }
    let mut extra_warnings = Vec::new();
    if a.one_way_halve {
        profile = profile.halved();
        extra_warnings.push("delays halved to one-way: assumes a symmetric path".to_string());
    }
    let mut estimate = estimator::estimate_profile(&profile)?;
    estimate.warnings.extend(extra_warnings);

    let mut report = estimate_report(&profile, estimate);
    if let Some(model_path) = &a.model {
        let text = fs::read_to_string(model_path)?;
        let model: InterceptModel = serde_json::from_str(&text)
            .map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", model_path.display())))?;
        let features = match (a.hop_count, loaded.features) {
            (Some(n), _) => PathFeatures::new(profile.path_id.clone(), n, a.route_km.unwrap_or(0.0))?,
            (None, Some(f)) => f,
            (None, None) => return Err(CliError::usage("--model needs path features (--hop-count/--route-km)")),
        };
        let smallest = profile.points()[0];
        report.model_estimate = Some(intercept_model::estimate_with_model(smallest, &model, &features)?);
    }

    with_output(ctx, |ctx| write_report(ctx, &report))
}

/// Sends command output to `--output` when given.
fn with_output(ctx: &mut Ctx<'_>, f: impl FnOnce(&mut Ctx<'_>) -> Result<(), CliError>) -> Result<(), CliError> {
    let Some(path) = ctx.output.clone() else {
        return f(ctx);
    };
    let mut buf = Vec::new();
    {
        let mut sub = Ctx {
            cfg: ctx.cfg.clone(),
            format: ctx.format,
            seed: ctx.seed,
            output: None,
            out: &mut buf,
            err: &mut *ctx.err,
        };
        f(&mut sub)?;
    }
    fs::write(&path, buf).map_err(|e| CliError::new(EXIT_INTERNAL, format!("{}: {e}", path.display())))?;
    Ok(())
}

fn simulated_session_id(plan: &SimulationPlan) -> String {
    let canonical = serde_json::to_vec(plan).expect("plan serializes");
    let digest = Sha256::digest(&canonical);
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("sim-{hex}")
}

fn cmd_simulate(ctx: &mut Ctx<'_>, a: SimulateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.path_config)
        .map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", a.path_config.display())))?;
    let mut path = SimPath::from_json(&text)?;
    if let Some(seed) = ctx.seed {
        path.seed = seed;
    }
    let payloads = resolve_sizes(&a.sizes, &ctx.cfg)?;
    let count = a.count.unwrap_or(ctx.cfg.count);
    let gap_s = a.gap.unwrap_or(ctx.cfg.gap_s);
    if !(gap_s.is_finite() && gap_s > 0.0) {
        return Err(CliError::usage("gap must be positive"));
    }
    let sizes: Vec<ProbeSize> = payloads
        .iter()
        .map(|&p| ProbeSize {
            payload_bytes: p,
            wire_bits: probe::wire_size(p, ProbeMethod::Simulated),
        })
        .collect();

    let mut experiment = Experiment::new(&path, &sizes, count)?;
    experiment.gap_us = (gap_s * 1e6).round() as u64;
    let plan = SimulationPlan {
        path: path.clone(),
        sizes_payload_bytes: payloads.clone(),
        sizes_wire_bits: sizes.iter().map(|s| s.wire_bits).collect(),
        count_per_size: count,
        gap_us: experiment.gap_us,
        rng: sim::RNG_ALGORITHM.to_string(),
    };
    experiment.path_id = simulated_session_id(&plan);
    let samples = experiment.run()?;

    let record = SessionRecord {
        session_id: experiment.path_id.clone(),
        created_at: SIMULATED_CREATED_AT.to_string(),
        plan: SessionPlan::Simulated(plan),
        samples,
        features: None,
        extra: Map::new(),
    };
    let out_path = ctx
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.jsonl", record.session_id)));
    store::save_session(&record, &out_path)?;

    let truth = sim::ground_truth_rate(&path);
    let truth_intercept = path.size_independent_delay();
    let threshold = ctx.cfg.min_samples.min(count).max(1);
    let threshold = a.min_samples.unwrap_or(threshold);
    let profile = estimator::min_delay_profile(&record.samples, threshold)?;
    let estimate = estimator::estimate_profile(&profile)?;
    let relative_error = (estimate.b_av_bps - truth) / truth;

    match ctx.format {
        OutputFormat::Json => {
            let report = estimate_report(&profile, estimate);
            let v = json!({
                "session_id": record.session_id,
                "session_file": out_path,
                "ground_truth_bps": truth,
                "ground_truth_intercept_s": truth_intercept,
                "relative_error": relative_error,
                "estimate": report,
            });
            ctx.emit_json(&v)?;
        }
        _ => {
            writeln!(ctx.out, "session {} -> {}", record.session_id, out_path.display())?;
            writeln!(
                ctx.out,
                "ground truth = {} ({truth:.0} bit/s), a = {}",
                format_rate(truth),
                format_ms(truth_intercept)
            )?;
            write_estimate_text(ctx.out, &estimate, profile.len())?;
            writeln!(ctx.out, "  relative error {:+.3e}", relative_error)?;
        }
    }
    Ok(())
}

fn cmd_calibrate(ctx: &mut Ctx<'_>, a: CalibrateArgs) -> Result<(), CliError> {
    let observations = store::import_observations(&a.observations)?;
    let model = intercept_model::fit_intercept_model_with(
        &observations,
        FitOptions {
            with_constant: a.with_constant,
        },
    )?;
    let model_path = ctx
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("intercept-model.json"));
    let body = serde_json::to_string_pretty(&model).expect("model serializes");
    fs::write(&model_path, body + "\n")
        .map_err(|e| CliError::new(EXIT_INTERNAL, format!("{}: {e}", model_path.display())))?;

    match ctx.format {
        OutputFormat::Json => {
            let mut v = serde_json::to_value(model).expect("model serializes");
            v["model_file"] = Value::from(model_path.display().to_string());
            ctx.emit_json(&v)?;
        }
        OutputFormat::Csv => {
            writeln!(
                ctx.out,
                "alpha_s_per_hop,beta_s_per_km,constant_s,residual_rms_s,n_observations"
            )?;
            writeln!(
                ctx.out,
                "{},{},{},{},{}",
                model.alpha_s_per_hop,
                model.beta_s_per_km,
                model.constant_s,
                model.residual_rms_s,
                model.n_observations
            )?;
        }
        OutputFormat::Text => {
            writeln!(
                ctx.out,
                "alpha = {:.6} ms/hop, beta = {:.6} ms/km, residual {} ({} paths)",
                model.alpha_s_per_hop * 1e3,
                model.beta_s_per_km * 1e3,
                format_ms(model.residual_rms_s),
                model.n_observations
            )?;
            if a.with_constant {
                writeln!(ctx.out, "constant = {}", format_ms(model.constant_s))?;
            }
            writeln!(ctx.out, "model written to {}", model_path.display())?;
        }
    }
    Ok(())
}

fn cmd_stats(ctx: &mut Ctx<'_>, a: StatsArgs) -> Result<(), CliError> {
    let loaded = load_samples(&a.input, &a.csv)?;
    if a.series {
        let window = a.window.unwrap_or(ctx.cfg.window);
        let series = stats::jitter_series(&loaded.samples, window)?;
        return with_output(ctx, |ctx| {
            writeln!(ctx.out, "sent_at_us,jitter_s")?;
            for (t, j) in &series {
                writeln!(ctx.out, "{t},{j}")?;
            }
            Ok(())
        });
    }

    let summary = stats::summarize(&loaded.samples)?;
    with_output(ctx, |ctx| match ctx.format {
        OutputFormat::Json => ctx.emit_json(&summary),
        OutputFormat::Csv => {
            writeln!(
                ctx.out,
                "n_total,n_lost,mean_s,lower_2_5_s,upper_97_5_s,jitter_s,loss_rate"
            )?;
            writeln!(
                ctx.out,
                "{},{},{},{},{},{},{}",
                summary.n_total,
                summary.n_lost,
                summary.mean_s,
                summary.lower_2_5_s,
                summary.upper_97_5_s,
                summary.jitter_s,
                summary.loss_rate
            )?;
            Ok(())
        }
        OutputFormat::Text => {
            writeln!(
                ctx.out,
                "{} samples, {} lost (loss rate {:.4})",
                summary.n_total, summary.n_lost, summary.loss_rate
            )?;
            writeln!(
                ctx.out,
                "mean {}, 2.5% {}, 97.5% {}",
                format_ms(summary.mean_s),
                format_ms(summary.lower_2_5_s),
                format_ms(summary.upper_97_5_s)
            )?;
            writeln!(ctx.out, "jitter {}", format_ms(summary.jitter_s))?;
            Ok(())
        }
    })
}

/// Entry point for the binary.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    run(args, &mut out, &mut err)
}
