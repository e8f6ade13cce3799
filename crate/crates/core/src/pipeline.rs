//! End-to-end time stretching and the method variants.

use std::fmt;
use std::str::FromStr;

use crate::dsp::{stretched_len, AudioBuffer};
use crate::error::{Error, Result};
use crate::noise_morph::{stretch_noise, MorphVariant, NoiseMorphParams};
use crate::stn::{stn_decompose, StnComponents, StnConfig};
use crate::transients::{detect_events, reposition_events, TransientDetectParams, TransientEvent};
use crate::vocoder::{phase_vocoder, stretch_sines, PhaseMode, PvParams};

/// Stretching method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Decomposition, phase-locked sines, repositioned transients and
    /// multiplicative noise morphing.
    #[default]
    Nm,
    /// As `Nm` with magnitude replacement in the noise branch.
    Ni,
    /// Noise morphing of the whole signal, no decomposition.
    Nd,
    /// Plain per-bin phase vocoder on the whole signal.
    An,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Nm, Mode::Ni, Mode::Nd, Mode::An];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Nm => "nm",
            Mode::Ni => "ni",
            Mode::Nd => "nd",
            Mode::An => "an",
        }
    }

    /// Whether the mode runs the three-way decomposition.
    pub fn decomposes(self) -> bool {
        matches!(self, Mode::Nm | Mode::Ni)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nm" => Ok(Mode::Nm),
            "ni" => Ok(Mode::Ni),
            "nd" => Ok(Mode::Nd),
            "an" => Ok(Mode::An),
            other => Err(Error::config(format!(
                "unknown mode '{other}', expected nm, ni, nd or an"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StretchConfig {
    pub alpha: f64,
    pub mode: Mode,
    /// Excitation seed; overrides `noise.seed`.
    pub seed: u64,
    pub stn: StnConfig,
    pub noise: NoiseMorphParams,
    pub pv: PvParams,
    pub transient: TransientDetectParams,
}

impl StretchConfig {
    /// Defaults for `sample_rate` with the given factor and mode.
    pub fn new(alpha: f64, mode: Mode, sample_rate: u32) -> Self {
        Self {
            alpha,
            mode,
            seed: 0,
            stn: StnConfig::for_sample_rate(sample_rate),
            noise: NoiseMorphParams::for_sample_rate(sample_rate),
            pv: PvParams::for_sample_rate(sample_rate),
            transient: TransientDetectParams::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::config(format!(
                "alpha must be a positive finite number, got {}",
                self.alpha
            )));
        }
        self.noise.validate()?;
        self.pv.validate()?;
        if self.mode.decomposes() {
            self.stn.validate()?;
            self.transient.validate()?;
        }
        Ok(())
    }

    fn noise_params(&self) -> NoiseMorphParams {
        NoiseMorphParams {
            seed: self.seed,
            ..self.noise
        }
    }
}

/// Per-branch signals of a decomposing run.
#[derive(Debug, Clone)]
pub struct StretchStems {
    pub components: StnComponents,
    pub sines: AudioBuffer,
    pub transients: AudioBuffer,
    pub noise: AudioBuffer,
    pub events: Vec<TransientEvent>,
}

#[derive(Debug, Clone)]
pub struct StretchOutput {
    pub output: AudioBuffer,
    /// Present for the decomposing modes only.
    pub stems: Option<StretchStems>,
}

pub fn time_stretch(x: &AudioBuffer, config: &StretchConfig) -> Result<AudioBuffer> {
    Ok(time_stretch_detailed(x, config)?.output)
}

pub fn time_stretch_detailed(x: &AudioBuffer, config: &StretchConfig) -> Result<StretchOutput> {
    config.validate()?;
    if x.is_empty() {
        return Err(Error::config("input signal is empty"));
    }
    let alpha = config.alpha;
    let out_len = stretched_len(x.len(), alpha);
    match config.mode {
        Mode::Nd => {
            let output = stretch_noise(x, alpha, &config.noise_params(), MorphVariant::Multiply)?;
            Ok(StretchOutput {
                output: output.with_len(out_len),
                stems: None,
            })
        }
        Mode::An => Ok(StretchOutput {
            output: time_stretch_anchor(x, alpha, &config.pv)?,
            stems: None,
        }),
        Mode::Nm | Mode::Ni => {
            let variant = if config.mode == Mode::Nm {
                MorphVariant::Multiply
            } else {
                MorphVariant::Replace
            };
            let components = stn_decompose(x, &config.stn)?;
            let sines = stretch_sines(&components.sines, alpha, &config.pv)?.with_len(out_len);
            let events = detect_events(&components.transients, &config.transient)?;
            let transients =
                reposition_events(&events, alpha, out_len, x.sample_rate())?.with_len(out_len);
            let noise = stretch_noise(&components.noise, alpha, &config.noise_params(), variant)?
                .with_len(out_len);
            let mixed = sines
                .samples()
                .iter()
                .zip(transients.samples())
                .zip(noise.samples())
                .map(|((s, t), n)| s + t + n)
                .collect();
            Ok(StretchOutput {
                output: AudioBuffer::new(mixed, x.sample_rate())?,
                stems: Some(StretchStems {
                    components,
                    sines,
                    transients,
                    noise,
                    events,
                }),
            })
        }
    }
}

/// The plain phase vocoder used as the low anchor.
pub fn time_stretch_anchor(x: &AudioBuffer, alpha: f64, params: &PvParams) -> Result<AudioBuffer> {
    phase_vocoder(x, alpha, params, PhaseMode::PerBin)
}
