//! Noise morphing: time-stretching a noise signal by imposing its
//! time-interpolated log-magnitude spectra on the STFT of fresh white noise.
//!
//! The pipeline is
//!
//! 1. STFT of the input noise, `N = 10 log10 |X|` per bin.
//! 2. Linear interpolation of `N` along time to `round(alpha * M)` frames.
//! 3. Standard Gaussian excitation as long as the output, its STFT divided by
//!    `sqrt(sum w^2)` so the expected bin power is one.
//! 4. Bin-wise product of the excitation with `10^(N / 10)` ([`morph`]), or
//!    magnitude replacement keeping only the excitation phase
//!    ([`morph_replace`], the ablation variant).
//! 5. Inverse STFT with the same window and hop.
//!
//! Frames are centred (`window / 2` zero padding on the input), so output frame
//! `m` sits at time `m * hop` and maps to input frame position `m / alpha`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dsp::{
    stretched_len, window_energy, AudioBuffer, Complex64, ComplexSpectrogram, Framing, Stft,
    StftParams,
};
use crate::error::{Error, Result};

/// Frames x bins grid of `10 log10 |X|` values.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMagSpectrogram {
    values: Vec<f64>,
    num_frames: usize,
    framing: Framing,
}

impl LogMagSpectrogram {
    pub fn from_values(values: Vec<f64>, num_frames: usize, framing: Framing) -> Result<Self> {
        if values.len() != num_frames * framing.num_bins() {
            return Err(Error::config("log-magnitude values do not fill the grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("log-magnitude values must be finite"));
        }
        Ok(Self {
            values,
            num_frames,
            framing,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_bins(&self) -> usize {
        self.framing.num_bins()
    }

    pub fn framing(&self) -> Framing {
        self.framing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.values[m * self.num_bins() + k]
    }

    pub fn frame(&self, m: usize) -> &[f64] {
        let k = self.num_bins();
        &self.values[m * k..(m + 1) * k]
    }

    /// Linear magnitudes `10^(value / 10)`.
    pub fn to_magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| db_to_mag(*v)).collect()
    }

    /// Truncates, or repeats the final frame, to exactly `num_frames`.
    pub fn resize_frames(&mut self, num_frames: usize) {
        let k = self.num_bins();
        if num_frames > self.num_frames && self.num_frames > 0 {
            let last = self.frame(self.num_frames - 1).to_vec();
            for _ in self.num_frames..num_frames {
                self.values.extend_from_slice(&last);
            }
        } else {
            self.values.resize(num_frames * k, 0.0);
        }
        self.num_frames = num_frames;
    }
}

fn db_to_mag(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMorphParams {
    pub window_size: usize,
    pub hop_size: usize,
    /// Excitation generator seed.
    pub seed: u64,
    /// Level assigned to silent bins, in the same `10 log10` units.
    pub floor_db: f64,
}

impl NoiseMorphParams {
    /// 2048-sample Hann window with half overlap at 44.1 kHz, scaled for
    /// other rates.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        let w = crate::stn::scale_samples(2048, sample_rate, 2);
        Self {
            window_size: w,
            hop_size: w / 2,
            seed: 0,
            floor_db: -120.0,
        }
    }

    pub fn stft_params(&self) -> Result<StftParams> {
        StftParams::hann(self.window_size, self.hop_size)
    }

    pub fn validate(&self) -> Result<()> {
        self.stft_params()?;
        if !self.floor_db.is_finite() {
            return Err(Error::config("noise floor must be finite"));
        }
        Ok(())
    }
}

impl Default for NoiseMorphParams {
    fn default() -> Self {
        Self::for_sample_rate(44100)
    }
}

/// How the target magnitudes are imposed on the excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphVariant {
    /// Multiply the excitation bins by the target magnitude.
    Multiply,
    /// Replace the excitation magnitude, keeping its phase.
    Replace,
}

/// `10 log10(max(|X|, 10^(floor_db / 10)))` per bin.
pub fn log_magnitude(spec: &ComplexSpectrogram, floor_db: f64) -> LogMagSpectrogram {
    let floor = db_to_mag(floor_db);
    LogMagSpectrogram {
        values: spec
            .as_slice()
            .iter()
            .map(|c| 10.0 * c.norm().max(floor).log10())
            .collect(),
        num_frames: spec.num_frames(),
        framing: spec.framing(),
    }
}

/// Stretches a log-magnitude spectrogram along time to `round(alpha * M)`
/// frames. Output frame `m` reads input position `m / alpha`, clamped to the
/// last frame, interpolating linearly between its two neighbours.
pub fn lerp_frames(logmag: &LogMagSpectrogram, alpha: f64) -> Result<LogMagSpectrogram> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::config(format!("alpha must be positive, got {alpha}")));
    }
    let m_in = logmag.num_frames();
    let k = logmag.num_bins();
    if m_in == 0 {
        return Ok(LogMagSpectrogram {
            values: Vec::new(),
            num_frames: 0,
            framing: logmag.framing,
        });
    }
    let m_out = (alpha * m_in as f64).round() as usize;
    let last = (m_in - 1) as f64;
    let mut values = Vec::with_capacity(m_out * k);
    for m in 0..m_out {
        let tau = (m as f64 / alpha).min(last);
        let lo = tau.floor() as usize;
        let hi = (lo + 1).min(m_in - 1);
        let frac = tau - lo as f64;
        let (a, b) = (logmag.frame(lo), logmag.frame(hi));
        values.extend(a.iter().zip(b).map(|(x, y)| (1.0 - frac) * x + frac * y));
    }
    Ok(LogMagSpectrogram {
        values,
        num_frames: m_out,
        framing: logmag.framing,
    })
}

/// Standard Gaussian white noise from a ChaCha8 stream seeded with `seed`.
pub fn generate_excitation(length: usize, seed: u64, sample_rate: u32) -> Result<AudioBuffer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..length)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

fn check_shapes(interp: &LogMagSpectrogram, excitation: &ComplexSpectrogram) -> Result<()> {
    if interp.num_frames() != excitation.num_frames() || interp.num_bins() != excitation.num_bins()
    {
        return Err(Error::config(format!(
            "target is {}x{} but excitation is {}x{}",
            interp.num_frames(),
            interp.num_bins(),
            excitation.num_frames(),
            excitation.num_bins()
        )));
    }
    Ok(())
}

/// Bin-wise `E * 10^(N / 10)`. `excitation_spec` must already be normalised
/// by the window energy.
pub fn morph(
    interp: &LogMagSpectrogram,
    excitation_spec: &ComplexSpectrogram,
) -> Result<ComplexSpectrogram> {
    check_shapes(interp, excitation_spec)?;
    let mut out = excitation_spec.clone();
    for (c, db) in out.as_mut_slice().iter_mut().zip(interp.values()) {
        *c *= db_to_mag(*db);
    }
    Ok(out)
}

/// Bin-wise `10^(N / 10) * exp(i arg E)`. A zero excitation bin counts as
/// phase zero.
pub fn morph_replace(
    interp: &LogMagSpectrogram,
    excitation_spec: &ComplexSpectrogram,
) -> Result<ComplexSpectrogram> {
    check_shapes(interp, excitation_spec)?;
    let mut out = excitation_spec.clone();
    for (c, db) in out.as_mut_slice().iter_mut().zip(interp.values()) {
        let mag = db_to_mag(*db);
        let norm = c.norm();
        *c = if norm > 0.0 {
            *c * (mag / norm)
        } else {
            Complex64::new(mag, 0.0)
        };
    }
    Ok(out)
}

/// Intermediate products of [`stretch_noise`], for inspection and tests.
#[derive(Debug, Clone)]
pub struct MorphTrace {
    /// Interpolated target, aligned to the excitation frame count.
    pub target: LogMagSpectrogram,
    /// Normalised excitation STFT.
    pub excitation: ComplexSpectrogram,
    /// Spectrogram passed to the inverse STFT.
    pub morphed: ComplexSpectrogram,
    pub output: AudioBuffer,
}

/// Stretches `noise` by `alpha`; the output has exactly
/// `round(alpha * len)` samples.
pub fn stretch_noise(
    noise: &AudioBuffer,
    alpha: f64,
    params: &NoiseMorphParams,
    variant: MorphVariant,
) -> Result<AudioBuffer> {
    Ok(stretch_noise_traced(noise, alpha, params, variant)?.output)
}

pub fn stretch_noise_traced(
    noise: &AudioBuffer,
    alpha: f64,
    params: &NoiseMorphParams,
    variant: MorphVariant,
) -> Result<MorphTrace> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::config(format!("alpha must be positive, got {alpha}")));
    }
    params.validate()?;
    let sr = noise.sample_rate();
    let stft_params = params.stft_params()?;
    let stft = Stft::new(stft_params)?;
    let out_len = stretched_len(noise.len(), alpha);

    let analysis = stft.forward_centered(noise.samples(), sr);
    let mut target = lerp_frames(&log_magnitude(&analysis, params.floor_db), alpha)?;

    // The excitation spans the output plus half a window on either side, so
    // the outermost frames see noise rather than zero padding.
    let excitation = if out_len == 0 {
        ComplexSpectrogram::zeros(0, stft_params.framing(sr))
    } else {
        let noise_len = out_len + stft_params.window_size;
        let eps = generate_excitation(noise_len, params.seed, sr)?;
        let mut spec = stft.forward(eps.samples(), sr);
        let norm = 1.0 / window_energy(&stft_params);
        spec.as_mut_slice().iter_mut().for_each(|c| *c *= norm);
        spec
    };
    debug_assert_eq!(excitation.num_frames(), stft.num_frames_centered(out_len));
    target.resize_frames(excitation.num_frames());

    let morphed = match variant {
        MorphVariant::Multiply => morph(&target, &excitation)?,
        MorphVariant::Replace => morph_replace(&target, &excitation)?,
    };
    let output = AudioBuffer::new(stft.inverse_centered(&morphed, out_len)?, sr)?;
    Ok(MorphTrace {
        target,
        excitation,
        morphed,
        output,
    })
}
