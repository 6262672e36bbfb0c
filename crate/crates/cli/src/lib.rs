//! `vlc-modem` command-line driver.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 on a runtime failure.

pub mod settings;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use vlc_core::harness::{
    run_sweep, run_transient, write_sweep_csv, write_transient_csv, DistanceSchedule,
};
use vlc_core::selftest;

pub use settings::Settings;

pub const SEED_ENV: &str = "VLC_MODEM_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "vlc-modem",
    version,
    about = "Simulate a PPM visible-light link with fixed or adaptive comparator thresholds",
    after_help = "Every flag may also be given as `key=value` in the --config file; flags win.\n\
                  Environment: VLC_MODEM_SEED overrides --seed when set."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the selected methods over the distance grid and write one CSV row per point.
    Sweep(RunArgs),
    /// Run one method while the distance follows --schedule; one CSV row per window.
    Transient(RunArgs),
    /// Check the library invariants and report pass/fail.
    Selftest,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Settings file of key=value lines
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Modulation: 2ppm, 4ppm or 4ippm [default: 2ppm]
    #[arg(long, value_name = "SCHEME")]
    modulation: Option<String>,
    /// Threshold method(s), comma separated: fixed, slot-count, level-avg [default: level-avg]
    #[arg(long, value_name = "LIST")]
    method: Option<String>,
    /// Fixed threshold in volts, or `near`/`far` to calibrate at the nearest/farthest distance [default: near]
    #[arg(long, value_name = "V|near|far")]
    fixed_threshold: Option<String>,
    /// Distance grid in cm, start:end:step or a single value [default: 10:90:10]
    #[arg(long, value_name = "A:B:STEP")]
    dist: Option<String>,
    /// Bits per point [default: 100000]
    #[arg(long, value_name = "N")]
    bits: Option<String>,
    /// Bit rate in bits/s [default: 4000]
    #[arg(long, value_name = "BPS")]
    rate: Option<String>,
    /// Samples per slot [default: 5]
    #[arg(long, value_name = "N")]
    spp: Option<String>,
    /// Signal-independent noise std in volts [default: 0.005]
    #[arg(long, value_name = "V")]
    sigma0: Option<String>,
    /// Noise std per volt of received signal [default: 0]
    #[arg(long, value_name = "X")]
    sigma1: Option<String>,
    /// Ambient light offset in volts [default: 0]
    #[arg(long, value_name = "V")]
    ambient: Option<String>,
    /// LED-on level at the reference distance in volts [default: 20]
    #[arg(long, value_name = "V")]
    tx_amplitude: Option<String>,
    /// LED-off level at the reference distance in volts [default: 0]
    #[arg(long, value_name = "V")]
    tx_low: Option<String>,
    /// Reference distance in cm [default: 10]
    #[arg(long, value_name = "CM")]
    ref_dist: Option<String>,
    /// Attenuation exponent [default: 2]
    #[arg(long, value_name = "X")]
    atten_exp: Option<String>,
    /// Receiver low-pass cutoff in Hz, or off [default: off]
    #[arg(long, value_name = "HZ|off")]
    lpf: Option<String>,
    /// ADC resolution 4..=16 bits, or off; full scale is 1.25x the strongest received level [default: off]
    #[arg(long, value_name = "N|off")]
    adc_bits: Option<String>,
    /// Slot-count threshold step in volts [default: 1% of the threshold range]
    #[arg(long, value_name = "V")]
    step: Option<String>,
    /// Adaptation window in symbols [default: 64]
    #[arg(long, value_name = "SYMBOLS")]
    window: Option<String>,
    /// Minimum level-avg threshold above the low level, volts [default: 0.1]
    #[arg(long, value_name = "V")]
    margin: Option<String>,
    /// Base seed for channel noise [default: 1]
    #[arg(long, value_name = "N")]
    seed: Option<String>,
    /// Transient distance schedule, time_s:distance_cm pairs [default: 0:10,1:40]
    #[arg(long, value_name = "T:D,...")]
    schedule: Option<String>,
    /// Output CSV path [default: sweep.csv or transient.csv]
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let flags = [
            ("modulation", &self.modulation),
            ("method", &self.method),
            ("fixed-threshold", &self.fixed_threshold),
            ("dist", &self.dist),
            ("bits", &self.bits),
            ("rate", &self.rate),
            ("spp", &self.spp),
            ("sigma0", &self.sigma0),
            ("sigma1", &self.sigma1),
            ("ambient", &self.ambient),
            ("tx-amplitude", &self.tx_amplitude),
            ("tx-low", &self.tx_low),
            ("ref-dist", &self.ref_dist),
            ("atten-exp", &self.atten_exp),
            ("lpf", &self.lpf),
            ("adc-bits", &self.adc_bits),
            ("step", &self.step),
            ("window", &self.window),
            ("margin", &self.margin),
            ("seed", &self.seed),
            ("schedule", &self.schedule),
            ("out", &self.out),
        ];
        flags
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Sweep,
    Transient,
    Selftest,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub subcommand: Action,
    pub config_path: Option<PathBuf>,
    pub settings: Settings,
    pub output_path: PathBuf,
}

/// Why parsing stopped.
#[derive(Debug)]
pub enum ParseOutcome {
    /// Help or version text was requested; print it and exit 0.
    Info(String),
    /// Bad flags or values; print and exit 1.
    Usage(String),
}

/// Parses argv (including the program name) into an invocation.
pub fn parse_args<I, T>(argv: I) -> Result<CliInvocation, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                ParseOutcome::Info(e.render().to_string())
            }
            _ => ParseOutcome::Usage(e.render().to_string()),
        }
    })?;
    let (subcommand, args) = match cli.command {
        Command::Selftest => {
            return Ok(CliInvocation {
                subcommand: Action::Selftest,
                config_path: None,
                settings: Settings::default(),
                output_path: PathBuf::new(),
            })
        }
        Command::Sweep(a) => (Action::Sweep, a),
        Command::Transient(a) => (Action::Transient, a),
    };

    let mut settings = Settings::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| {
            ParseOutcome::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        settings
            .apply_file(&text)
            .map_err(|e| ParseOutcome::Usage(format!("{}: {e}", path.display())))?;
    }
    for (key, value) in args.overrides() {
        settings
            .apply(key, value)
            .map_err(|e| ParseOutcome::Usage(format!("--{key}: {e}")))?;
    }
    if let Ok(seed) = std::env::var(SEED_ENV) {
        settings
            .apply("seed", &seed)
            .map_err(|e| ParseOutcome::Usage(format!("{SEED_ENV}: {e}")))?;
    }
    if subcommand == Action::Transient && settings.methods.len() != 1 {
        return Err(ParseOutcome::Usage(
            "transient runs take exactly one --method".into(),
        ));
    }
    let default_out = match subcommand {
        Action::Transient => "transient.csv",
        _ => "sweep.csv",
    };
    let output_path = settings
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_out));
    Ok(CliInvocation {
        subcommand,
        config_path: args.config,
        settings,
        output_path,
    })
}

/// Writes `bytes` next to `path` and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Runs an invocation, printing progress to `out` and diagnostics to `err`.
/// Returns the process exit status.
pub fn execute(inv: &CliInvocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run(inv, out) {
        Ok(status) => status,
        Err(RunError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(RunError::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

enum RunError {
    Usage(String),
    Runtime(String),
}

fn run(inv: &CliInvocation, out: &mut dyn Write) -> Result<i32, RunError> {
    let s = &inv.settings;
    let mut csv = Vec::new();
    match inv.subcommand {
        Action::Selftest => {
            let checks = selftest::run_all();
            for c in &checks {
                let verdict = if c.passed { "ok" } else { "FAILED" };
                let _ = writeln!(out, "{verdict:6} {}", c.name);
            }
            return Ok(if checks.iter().all(|c| c.passed) {
                0
            } else {
                2
            });
        }
        Action::Sweep => {
            let mut rows = Vec::new();
            for &method in &s.methods {
                let cfg = s.experiment(method, false).map_err(RunError::Usage)?;
                rows.extend(run_sweep(&cfg).map_err(|e| RunError::Runtime(e.to_string()))?);
            }
            for p in &rows {
                let _ = writeln!(
                    out,
                    "{:>7} cm  {:<10} {:<5}  ber={:<12e} throughput={:.1} bps  theta={:.6} V",
                    p.distance, p.method, p.scheme, p.ber, p.throughput, p.theta_final
                );
            }
            write_sweep_csv(&mut csv, &rows).map_err(|e| RunError::Runtime(e.to_string()))?;
        }
        Action::Transient => {
            let cfg = s.experiment(s.methods[0], true).map_err(RunError::Usage)?;
            let schedule = DistanceSchedule::new(s.schedule.clone())
                .map_err(|e| RunError::Usage(e.to_string()))?;
            let result =
                run_transient(&cfg, &schedule).map_err(|e| RunError::Runtime(e.to_string()))?;
            let _ = writeln!(
                out,
                "{} windows, {} of {} bits correct, throughput {:.1} bps",
                result.rows.len(),
                result.correct_bits,
                result.total_bits,
                result.throughput()
            );
            write_transient_csv(&mut csv, &result.rows)
                .map_err(|e| RunError::Runtime(e.to_string()))?;
        }
    }
    write_atomic(&inv.output_path, &csv).map_err(|e| {
        RunError::Runtime(format!("cannot write {}: {e}", inv.output_path.display()))
    })?;
    Ok(0)
}
