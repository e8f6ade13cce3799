//! The `stretch` command.

use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};
use crate::io::{read_wav, write_onsets_csv, write_wav, BitDepth, ConfigFile};
use crate::pipeline::{time_stretch_detailed, Mode, StretchConfig};

/// Time-stretch a WAV file without changing its pitch.
#[derive(Debug, Clone, Parser)]
#[command(name = "stretch", version)]
pub struct CliArgs {
    /// Input WAV (PCM16, PCM24 or float32; mono or stereo).
    pub input: PathBuf,
    /// Output WAV (mono).
    pub output: PathBuf,
    /// Stretching factor; 2 doubles the duration.
    #[arg(long, value_parser = parse_alpha, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Method: nm, ni, nd or an.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Seed of the noise excitation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// key = value settings file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for the component signals and their stretched versions.
    #[arg(long)]
    pub stems: Option<PathBuf>,
    /// CSV file receiving detected transient positions.
    #[arg(long)]
    pub onsets: Option<PathBuf>,
    /// Output encoding: 16, 24 or float32 (default: same as input).
    #[arg(long, value_parser = parse_bit_depth)]
    pub bit_depth: Option<BitDepth>,
    /// More log output; repeat for debug messages.
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be a positive finite number, got {s}"))
    }
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_bit_depth(s: &str) -> std::result::Result<BitDepth, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub input_len: usize,
    pub output_len: usize,
    pub alpha: f64,
    pub mode: Mode,
    pub seed: u64,
    pub wall_secs: f64,
}

impl RunSummary {
    /// The machine-readable `RESULT:` line.
    pub fn result_line(&self) -> String {
        format!(
            "RESULT: input_samples={} alpha={} output_samples={} mode={} seed={} wall_s={:.3}",
            self.input_len, self.alpha, self.output_len, self.mode, self.seed, self.wall_secs
        )
    }
}

/// Builds the run configuration: defaults for the input's rate, then the
/// config file, then flags.
pub fn resolve_config(args: &CliArgs, sample_rate: u32) -> Result<StretchConfig> {
    let mut config = StretchConfig::new(f64::NAN, Mode::default(), sample_rate);
    if let Some(path) = &args.config {
        ConfigFile::load(path)?.apply(&mut config, sample_rate)?;
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if config.alpha.is_nan() {
        return Err(Error::config(
            "--alpha is required (or set alpha in the config file)",
        ));
    }
    config
        .validate()
        .map_err(|e| match e {
            Error::Config(msg) if msg.starts_with("alpha") => Error::config(format!("--alpha: {msg}")),
            other => other,
        })?;
    Ok(config)
}

pub fn run(args: &CliArgs) -> Result<RunSummary> {
    let start = Instant::now();
    let input = read_wav(&args.input)?;
    let sr = input.audio.sample_rate();
    let config = resolve_config(args, sr)?;
    if sr != 44100 {
        log::info!("processing at {sr} Hz with rescaled defaults");
    }
    log::debug!("{config:?}");

    let result = time_stretch_detailed(&input.audio, &config)?;
    let bit_depth = args.bit_depth.unwrap_or(input.bit_depth);
    write_wav(&result.output, &args.output, bit_depth)?;

    match (&result.stems, &args.stems) {
        (Some(stems), Some(dir)) => {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
            let files: [(&str, &AudioBuffer); 6] = [
                ("sines.wav", &stems.components.sines),
                ("transients.wav", &stems.components.transients),
                ("noise.wav", &stems.components.noise),
                ("sines_stretched.wav", &stems.sines),
                ("transients_stretched.wav", &stems.transients),
                ("noise_stretched.wav", &stems.noise),
            ];
            for (name, audio) in files {
                write_wav(audio, &dir.join(name), BitDepth::Float32)?;
            }
        }
        (None, Some(_)) => log::warn!("mode {} has no components, --stems ignored", config.mode),
        _ => {}
    }
    if let Some(path) = &args.onsets {
        let events = result.stems.as_ref().map(|s| s.events.as_slice()).unwrap_or_default();
        if result.stems.is_none() {
            log::warn!("mode {} detects no transients, onset file is empty", config.mode);
        }
        write_onsets_csv(path, events, config.alpha)?;
    }

    Ok(RunSummary {
        input_len: input.audio.len(),
        output_len: result.output.len(),
        alpha: config.alpha,
        mode: config.mode,
        seed: config.seed,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

/// Parses the process arguments, runs, reports and returns the exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(args.verbose);
    match run(&args) {
        Ok(summary) => {
            println!("{}", summary.result_line());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}
