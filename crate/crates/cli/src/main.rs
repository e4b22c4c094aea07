//! Command line front end: sensing, closed-form statistics, tail bounds,
//! quantized coding, and Monte Carlo validation, all driven by JSON
//! configs. Tabular data goes out as CSV, reports as JSON.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use srm_core::coding::{self, CodingConfig, SideInfo};
use srm_core::harness::{self, ExperimentConfig, SynthSignal};
use srm_core::moments::{self, AmnReport, MixtureMoments};
use srm_core::quant;
use srm_core::sensing::{self, Mode, SensingSpec, Signal};
use srm_core::tailbounds::{self, TailBound};

#[derive(Parser)]
#[command(
    name = "srm",
    version,
    about = "Structurally random measurements: sensing, statistics, bounds, coding, validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure a signal and write the measurement vector.
    Measure(MeasureArgs),
    /// Closed-form measurement statistics on a probe set.
    Stats(StatsArgs),
    /// Tabulate the deviation bound over a t grid as CSV.
    Bounds(BoundsArgs),
    /// Describe the quantizers and rates an encode would use.
    QuantizeReport(QuantizeReportArgs),
    /// Quantize and entropy-code measurements into a container file.
    Encode(EncodeArgs),
    /// Reconstruct measurement values from a container file.
    Decode(DecodeArgs),
    /// Monte Carlo check of empirical probe moments against the model.
    ValidateMoments(ValidateMomentsArgs),
    /// Monte Carlo check of tail exceedance against the bounds.
    ValidateTails(ValidateTailsArgs),
    /// Quantile-quantile data for pooled measurements.
    Qq(QqArgs),
    /// Compare selection with and without replacement.
    Replacement(ReplacementArgs),
}

#[derive(Args)]
struct SignalArgs {
    /// Signal file: .f64/.bin/.raw as little-endian doubles, anything else
    /// as one value per line.
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    /// Inline synthetic signal JSON, e.g. '{"name":"smooth"}'.
    #[arg(long, value_name = "JSON", conflicts_with = "input")]
    synth: Option<String>,
    /// Seed for synthetic signals; defaults to the spec seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl SignalArgs {
    fn resolve(&self, spec: &SensingSpec) -> Result<Signal> {
        let x = match (&self.input, &self.synth) {
            (Some(path), None) => harness::read_signal_file(path)
                .with_context(|| format!("reading signal from {}", path.display()))?,
            (None, Some(json)) => {
                let kind: SynthSignal =
                    serde_json::from_str(json).context("parsing --synth JSON")?;
                harness::synth_signal(&kind, spec.n, self.seed.unwrap_or(spec.seed))?
            }
            _ => bail!("provide a signal via --in or --synth"),
        };
        if x.len() != spec.n {
            bail!(
                "signal has {} samples but the spec wants n = {}",
                x.len(),
                spec.n
            );
        }
        Ok(x)
    }
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long, value_name = "PATH")]
    spec: PathBuf,
    #[command(flatten)]
    signal: SignalArgs,
    /// Output path for the m measurement values.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, value_name = "PATH")]
    spec: PathBuf,
    #[command(flatten)]
    signal: SignalArgs,
    /// Comma-separated 1-based probe components.
    #[arg(long, value_name = "LIST")]
    probe: String,
    /// Report path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_name = "PATH")]
    spec: PathBuf,
    #[command(flatten)]
    signal: SignalArgs,
    /// Component whose bound to tabulate (permutation bounds vary per row).
    #[arg(long, default_value_t = 2)]
    component: usize,
    #[arg(long, default_value_t = 5.0)]
    t_max: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// CSV path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuantizeReportArgs {
    #[arg(long, value_name = "PATH")]
    spec: PathBuf,
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[command(flatten)]
    signal: SignalArgs,
    /// Report path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[arg(long, value_name = "PATH")]
    spec: PathBuf,
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Container output path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    /// Container input path.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Reconstructed values output path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Metadata report path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateMomentsArgs {
    /// ExperimentConfig JSON path.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Report path; falls back to the config's output path, then stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Largest tolerated |z| before the command exits nonzero.
    #[arg(long, default_value_t = 5.0)]
    max_z: f64,
}

#[derive(Args)]
struct ValidateTailsArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QqArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Quantile CSV path; falls back to the config's output path, then
    /// stdout (suppressing the JSON summary).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplacementArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Paired Monte Carlo trials; 0 reports the exact ratio only.
    #[arg(long, default_value_t = 0)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Measure(args) => run_measure(args),
        Command::Stats(args) => run_stats(args),
        Command::Bounds(args) => run_bounds(args),
        Command::QuantizeReport(args) => run_quantize_report(args),
        Command::Encode(args) => run_encode(args),
        Command::Decode(args) => run_decode(args),
        Command::ValidateMoments(args) => run_validate_moments(args),
        Command::ValidateTails(args) => run_validate_tails(args),
        Command::Qq(args) => run_qq(args),
        Command::Replacement(args) => run_replacement(args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_values(path: &Path, values: &[f64]) -> Result<()> {
    let binary = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("f64") | Some("bin") | Some("raw")
    );
    if binary {
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
    } else {
        let mut text = String::new();
        for v in values {
            text.push_str(&format!("{v}\n"));
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn emit_report<T: Serialize>(path: Option<&Path>, report: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn parse_probe(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .with_context(|| format!("probe entry '{s}'"))
        })
        .collect()
}

fn model_for(spec: &SensingSpec, x: &Signal) -> Result<MixtureMoments> {
    Ok(match spec.mode {
        Mode::Lr => moments::lr_moments(&spec.transform, x, spec.m)?,
        Mode::Gr => moments::gr_moments(&spec.transform, x, spec.m)?,
        Mode::Rc => moments::rc_moments(x, spec.m)?,
        Mode::Rst => bail!("the baseline mode has no closed-form moment model"),
    })
}

fn run_measure(args: MeasureArgs) -> Result<()> {
    let spec: SensingSpec = read_json(&args.spec)?;
    let x = args.signal.resolve(&spec)?;
    let d = spec.draw()?;
    let y = sensing::measure(&spec, &d, &x)?;
    write_values(&args.out, &y)
}

#[derive(Serialize)]
struct StatsReport {
    mode: Mode,
    mu_y: f64,
    sigma_y2: f64,
    probe: Vec<usize>,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    amn: AmnReport,
}

fn run_stats(args: StatsArgs) -> Result<()> {
    let spec: SensingSpec = read_json(&args.spec)?;
    let x = args.signal.resolve(&spec)?;
    let probe = parse_probe(&args.probe)?;
    let mm = model_for(&spec, &x)?;
    let report = StatsReport {
        mode: spec.mode,
        mu_y: mm.measurement_mean(),
        sigma_y2: mm.measurement_var(),
        probe: probe.clone(),
        mean: mm.mean_probe(&probe)?,
        cov: mm.cov_submatrix(&probe)?,
        amn: moments::amn_diagnostics(&mm, &x, &probe)?,
    };
    emit_report(args.out.as_deref(), &report)
}

fn run_bounds(args: BoundsArgs) -> Result<()> {
    let spec: SensingSpec = read_json(&args.spec)?;
    let x = args.signal.resolve(&spec)?;
    if args.steps == 0 {
        bail!("need at least one grid step");
    }
    let bound = match spec.mode {
        Mode::Lr => TailBound::SignDiagonal,
        Mode::Rc => TailBound::convolution(tailbounds::tau_rc(&x)?)?,
        Mode::Gr => TailBound::permutation(
            tailbounds::tau_gr(&spec.transform, args.component, &x)?,
            spec.n,
        )?,
        Mode::Rst => bail!("the baseline mode has no tail bound"),
    };
    let mut csv = String::from("t,bound\n");
    for i in 0..=args.steps {
        let t = args.t_max * i as f64 / args.steps as f64;
        csv.push_str(&format!("{t},{}\n", bound.eval(t)));
    }
    emit_text(args.out.as_deref(), &csv)
}

#[derive(Serialize)]
struct QuantizerRow {
    component: usize,
    mean: f64,
    sigma: f64,
    levels: u32,
    alphabet: u32,
    step: Option<f64>,
    lo: Option<f64>,
    hi: Option<f64>,
    entropy_bits: f64,
}

#[derive(Serialize)]
struct QuantizeReport {
    mode: Mode,
    n: usize,
    m: usize,
    coded: usize,
    omitted: usize,
    prediction: u16,
    header_bits: u64,
    payload_bits: u64,
    model_entropy_bits: f64,
    saturated: usize,
    container_bytes: usize,
    quantizers: Vec<QuantizerRow>,
}

fn run_quantize_report(args: QuantizeReportArgs) -> Result<()> {
    let spec: SensingSpec = read_json(&args.spec)?;
    let config: CodingConfig = read_json(&args.config)?;
    let x = args.signal.resolve(&spec)?;
    let out = coding::encode(&x, &spec, &config)?;
    let scheme = coding::derive_scheme(&out.side_info)?;
    let mut rows = Vec::with_capacity(scheme.quantizers.len());
    for ((q, g), &pos) in scheme
        .quantizers
        .iter()
        .zip(&scheme.gaussians)
        .zip(&scheme.coding_positions)
    {
        let edges = q.edges();
        let probs = quant::codeword_probs(q, g);
        rows.push(QuantizerRow {
            component: scheme.selection[pos],
            mean: g.mean,
            sigma: g.sigma,
            levels: q.levels(),
            alphabet: q.alphabet_size(),
            step: q.step(),
            lo: edges.first().copied(),
            hi: edges.last().copied(),
            entropy_bits: quant::entropy(&probs)?,
        });
    }
    let report = QuantizeReport {
        mode: spec.mode,
        n: spec.n,
        m: spec.m,
        coded: scheme.coding_positions.len(),
        omitted: scheme.omitted_positions.len(),
        prediction: out.side_info.prediction,
        header_bits: out.header_bits,
        payload_bits: out.payload_bits,
        model_entropy_bits: out.model_entropy_bits,
        saturated: out.saturated.iter().filter(|&&s| s).count(),
        container_bytes: out.bytes.len(),
        quantizers: rows,
    };
    emit_report(args.out.as_deref(), &report)
}

#[derive(Serialize)]
struct EncodeSummary {
    container_bytes: usize,
    values: usize,
    header_bits: u64,
    payload_bits: u64,
    model_entropy_bits: f64,
    saturated: usize,
}

fn run_encode(args: EncodeArgs) -> Result<()> {
    let spec: SensingSpec = read_json(&args.spec)?;
    let config: CodingConfig = read_json(&args.config)?;
    let x = args.signal.resolve(&spec)?;
    let out = coding::encode(&x, &spec, &config)?;
    std::fs::write(&args.out, &out.bytes)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let summary = EncodeSummary {
        container_bytes: out.bytes.len(),
        values: out.reconstruction.len(),
        header_bits: out.header_bits,
        payload_bits: out.payload_bits,
        model_entropy_bits: out.model_entropy_bits,
        saturated: out.saturated.iter().filter(|&&s| s).count(),
    };
    emit_report(None, &summary)
}

#[derive(Serialize)]
struct DecodeMeta {
    side_info: SideInfo,
    values: usize,
    saturated: usize,
    header_bits: u64,
    payload_bits: u64,
}

fn run_decode(args: DecodeArgs) -> Result<()> {
    let bytes =
        std::fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let back = coding::decode(&bytes)?;
    write_values(&args.out, &back.values)?;
    let meta = DecodeMeta {
        values: back.values.len(),
        saturated: back.saturated.iter().filter(|&&s| s).count(),
        header_bits: back.header_bits,
        payload_bits: back.payload_bits,
        side_info: back.side_info,
    };
    emit_report(args.json.as_deref(), &meta)
}

fn config_output(cfg: &ExperimentConfig) -> Option<PathBuf> {
    cfg.output.as_ref().map(PathBuf::from)
}

fn run_validate_moments(args: ValidateMomentsArgs) -> Result<()> {
    let cfg: ExperimentConfig = read_json(&args.config)?;
    let report = harness::mc_moments(&cfg)?;
    let out = args.out.or_else(|| config_output(&cfg));
    emit_report(out.as_deref(), &report)?;
    let worst = report.max_abs_z();
    if !(worst < args.max_z) {
        eprintln!("worst |z| = {worst} exceeds {}", args.max_z);
        std::process::exit(1);
    }
    Ok(())
}

fn run_validate_tails(args: ValidateTailsArgs) -> Result<()> {
    let cfg: ExperimentConfig = read_json(&args.config)?;
    let report = harness::mc_tails(&cfg)?;
    let out = args.out.or_else(|| config_output(&cfg));
    emit_report(out.as_deref(), &report)?;
    if !report.all_pass() {
        let failures = report.rows.iter().filter(|r| !r.pass).count();
        eprintln!("{failures} tail rows exceeded their bound plus slack");
        std::process::exit(1);
    }
    Ok(())
}

#[derive(Serialize)]
struct QqSummary {
    samples: usize,
    correlation: f64,
}

fn run_qq(args: QqArgs) -> Result<()> {
    let cfg: ExperimentConfig = read_json(&args.config)?;
    let report = harness::qq_data(&cfg)?;
    let mut csv = String::from("normal_q,sample_q\n");
    for (nq, sq) in report.normal_q.iter().zip(&report.sample_q) {
        csv.push_str(&format!("{nq},{sq}\n"));
    }
    let out = args.out.or_else(|| config_output(&cfg));
    emit_text(out.as_deref(), &csv)?;
    if out.is_some() {
        emit_report(
            None,
            &QqSummary {
                samples: report.samples,
                correlation: report.correlation,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ExactRatioReport {
    n: usize,
    m: usize,
    exact_ratio: f64,
}

fn run_replacement(args: ReplacementArgs) -> Result<()> {
    if args.trials == 0 {
        let report = ExactRatioReport {
            n: args.n,
            m: args.m,
            exact_ratio: harness::replacement_ratio(args.n, args.m)?,
        };
        emit_report(args.out.as_deref(), &report)
    } else {
        let report = harness::replacement_study(args.n, args.m, args.trials, args.seed)?;
        emit_report(args.out.as_deref(), &report)
    }
}
