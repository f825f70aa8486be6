//! `spiral`: analyze audio, synthesize source-filter signals, run validation
//! scenarios and cut CSV slices out of exported tensors.

mod audio;
mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spiral_core::export::{read_tensor, slice, write_tensor, Selection, SliceAxis, SliceSpec, TensorMeta};
use spiral_core::scattering::ScatteringMode;
use spiral_core::sourcefilter::{synthesize, SourceFilterSpec};
use spiral_core::validation::{run_scenario, Scenario};
use spiral_core::SpiralError;

use config::{analyze, load_json, PipelineConfig};

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "spiral", version, about = "Spiral scattering analysis of audio signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute x1, S1 and a second-order tensor from a WAV file.
    Analyze(AnalyzeArgs),
    /// Render a source-filter model to a 32-bit float WAV file.
    Synth(SynthArgs),
    /// Run a validation scenario and write its JSON report.
    Validate(ValidateArgs),
    /// Write a CSV slice of an exported tensor.
    PlotData(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Time,
    Joint,
    Spiral,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Input WAV (PCM 16/24-bit or 32-bit float).
    input: PathBuf,
    /// JSON pipeline configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Second-order transform.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// First-order filters per octave.
    #[arg(long = "q1")]
    q1: Option<usize>,
    /// Second-order filters per octave (1 or 2).
    #[arg(long = "q2")]
    q2: Option<u32>,
    /// Octaves spanned by the first-order bank.
    #[arg(long = "octaves", short = 'J')]
    octaves: Option<usize>,
    /// Averaging scale in seconds.
    #[arg(long = "averaging", short = 'T')]
    t: Option<f64>,
    /// Also average the second-order tensor.
    #[arg(long)]
    average: bool,
    /// Scalogram hop in samples.
    #[arg(long)]
    hop: Option<usize>,
    /// Frame decimation after the time stage.
    #[arg(long)]
    decimation: Option<usize>,
    /// Modulation range in Hz, as LO:HI.
    #[arg(long, value_parser = parse_range)]
    alpha_range: Option<(f64, f64)>,
    /// |β| range in cycles per octave, as LO:HI.
    #[arg(long, value_parser = parse_range)]
    beta_range: Option<(f64, f64)>,
    /// |γ| range in cycles per octave, as LO:HI.
    #[arg(long, value_parser = parse_range)]
    gamma_range: Option<(f64, f64)>,
    /// Output directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SynthArgs {
    /// JSON source-filter model.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Take the model of a built-in validation scenario.
    #[arg(long, value_parser = ["ridge_plane", "attack", "release"])]
    preset: Option<String>,
    /// Seconds.
    #[arg(long, default_value_t = 3.0)]
    duration: f64,
    #[arg(long, default_value_t = 22050.0)]
    sample_rate: f64,
    /// Output WAV path.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// JSON scenario document.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_parser = ["ridge_plane", "attack", "release"])]
    preset: Option<String>,
    /// Report path; standard output when absent.
    #[arg(long, short)]
    report: Option<PathBuf>,
}

#[derive(clap::Args)]
struct PlotArgs {
    /// Tensor file (`.f32` or `.meta.json`, or their common stem).
    tensor: PathBuf,
    /// Fixed coordinate, AXIS=VALUE. Axes: time, lambda1, alpha,
    /// alpha_period, beta, beta_period, gamma, gamma_period.
    #[arg(long = "fix", value_parser = parse_fixed)]
    fixed: Vec<(SliceAxis, f64)>,
    /// Inclusive range on a free axis, AXIS=LO:HI.
    #[arg(long = "range", value_parser = parse_axis_range)]
    ranges: Vec<(SliceAxis, (f64, f64))>,
    /// CSV path; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((num(lo)?, num(hi)?))
}

fn parse_axis(s: &str) -> Result<SliceAxis, String> {
    SliceAxis::parse(s).ok_or_else(|| format!("unknown axis {s:?}"))
}

fn parse_fixed(s: &str) -> Result<(SliceAxis, f64), String> {
    let (axis, v) = s.split_once('=').ok_or("expected AXIS=VALUE")?;
    Ok((parse_axis(axis)?, v.trim().parse().map_err(|e| format!("{v:?}: {e}"))?))
}

fn parse_axis_range(s: &str) -> Result<(SliceAxis, (f64, f64)), String> {
    let (axis, r) = s.split_once('=').ok_or("expected AXIS=LO:HI")?;
    Ok((parse_axis(axis)?, parse_range(r)?))
}

struct Failure {
    code: u8,
    message: String,
}

impl From<SpiralError> for Failure {
    fn from(e: SpiralError) -> Self {
        let code = match e {
            SpiralError::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn warn(lines: &[String]) {
    for w in lines {
        eprintln!("warning: {w}");
    }
}

fn run_analyze(args: AnalyzeArgs) -> Result<u8, Failure> {
    let mut cfg: PipelineConfig = match &args.config {
        Some(p) => load_json(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = match m {
            Mode::Time => ScatteringMode::Time,
            Mode::Joint => ScatteringMode::Joint,
            Mode::Spiral => ScatteringMode::Spiral,
        };
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = args.$field { cfg.$field = v; })* };
    }
    set!(q1, q2, octaves, t, hop, decimation, alpha_range, beta_range, gamma_range, output);
    cfg.average |= args.average;
    cfg.validate()?;

    let mut warnings = Vec::new();
    let signal = audio::read_wav(&args.input, &mut warnings)?;
    let result = analyze(&signal, &cfg)?;
    warnings.extend(result.x1.warnings().iter().cloned());
    warnings.extend(result.x2.warnings().iter().cloned());
    warn(&warnings);

    fs::create_dir_all(&cfg.output).map_err(|e| io_failure(&cfg.output, e))?;
    let out = |name: &str| cfg.output.join(name);
    write_tensor(&out("x1"), result.x1.values(), &TensorMeta::for_scalogram(&result.x1))?;
    write_tensor(&out("S1"), result.s1.grid.values(), &TensorMeta::for_averaged(&result.s1))?;
    let name = if cfg.average { "S2" } else { "x2" };
    write_tensor(&out(name), result.x2.values(), &TensorMeta::for_scattering(&result.x2))?;
    let json = serde_json::to_string_pretty(&cfg).expect("config serializes");
    fs::write(out("config.json"), json + "\n").map_err(|e| io_failure(&out("config.json"), e))?;
    Ok(0)
}

fn run_synth(args: SynthArgs) -> Result<u8, Failure> {
    let spec: SourceFilterSpec = match (&args.config, &args.preset) {
        (Some(p), _) => load_json(p)?,
        (None, Some(name)) => Scenario::preset(name).expect("preset names are checked by clap").spec,
        (None, None) => unreachable!("clap requires one of config and preset"),
    };
    let out = synthesize(&spec, args.duration, args.sample_rate)?;
    warn(&out.warnings);
    audio::write_wav(&args.output, &out.signal)?;
    Ok(0)
}

fn run_validate(args: ValidateArgs) -> Result<u8, Failure> {
    let scenario: Scenario = match (&args.config, &args.preset) {
        (Some(p), _) => load_json(p)?,
        (None, Some(name)) => Scenario::preset(name).expect("preset names are checked by clap"),
        (None, None) => unreachable!("clap requires one of config and preset"),
    };
    let report = run_scenario(&scenario)?;
    warn(&report.warnings);
    if let Some(e) = &report.fit_error {
        eprintln!("warning: {e}");
    }
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &args.report {
        Some(p) => fs::write(p, json).map_err(|e| io_failure(p, e))?,
        None => print!("{json}"),
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("failed: {} = {} (limit {})", c.name, c.value, c.limit);
    }
    Ok(if report.passed { 0 } else { EXIT_VALIDATION })
}

fn run_plot(args: PlotArgs) -> Result<u8, Failure> {
    let tensor = read_tensor(&args.tensor)?;
    let selections = args
        .fixed
        .iter()
        .map(|&(a, v)| (a, Selection::Fixed(v)))
        .chain(args.ranges.iter().map(|&(a, (lo, hi))| (a, Selection::Range(lo, hi))))
        .collect();
    let s = slice(&tensor, &SliceSpec { selections })?;
    warn(&s.warnings);

    let sink: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| io_failure(p, e))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let target = args.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&s.header).map_err(|e| io_failure(&target, e))?;
    for row in &s.rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| io_failure(&target, e))?;
    }
    w.flush().map_err(|e| io_failure(&target, e))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Synth(a) => run_synth(a),
        Command::Validate(a) => run_validate(a),
        Command::PlotData(a) => run_plot(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
