//! Synthetic test signals with known ground truth.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use realfft::RealFftPlanner;

use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    /// Sine of amplitude 0.5.
    Sine { freq: f64 },
    /// Two sines of amplitude 0.25 each.
    TwoTone { f1: f64, f2: f64 },
    /// Unit impulses every `period` seconds starting at 0.
    ClickTrain { period: f64 },
    /// Gaussian noise whose power spectrum falls by `slope_db_per_octave`
    /// (negative values tilt downwards), RMS 0.1.
    ShapedNoise { slope_db_per_octave: f64 },
    /// Low-level hiss with exponentially decaying noise bursts, see
    /// [`click_plus_hiss_onsets`].
    ClickPlusHiss,
}

impl SignalKind {
    pub fn name(&self) -> String {
        match self {
            SignalKind::Sine { freq } => format!("sine_{freq}"),
            SignalKind::TwoTone { f1, f2 } => format!("two_tone_{f1}_{f2}"),
            SignalKind::ClickTrain { period } => format!("click_train_{period}"),
            SignalKind::ShapedNoise { slope_db_per_octave } => {
                format!("shaped_noise_{slope_db_per_octave}")
            }
            SignalKind::ClickPlusHiss => "click_plus_hiss".to_string(),
        }
    }
}

/// Hiss RMS level in [`SignalKind::ClickPlusHiss`].
pub const HISS_RMS: f64 = 0.01;
/// Burst peak amplitude and decay constant in [`SignalKind::ClickPlusHiss`].
pub const BURST_AMPLITUDE: f64 = 0.5;
pub const BURST_DECAY_SECS: f64 = 0.002;
const BURST_LEN_SECS: f64 = 0.02;
/// Burst positions as fractions of the duration.
const BURST_FRACTIONS: [f64; 4] = [0.15, 0.4, 0.65, 0.8];

/// Burst start samples of a click-plus-hiss signal.
pub fn click_plus_hiss_onsets(duration: f64, sample_rate: u32) -> Vec<usize> {
    let n = (duration * sample_rate as f64).round();
    BURST_FRACTIONS.iter().map(|f| (f * n).round() as usize).collect()
}

/// Click positions of a click train.
pub fn click_train_onsets(period: f64, duration: f64, sample_rate: u32) -> Vec<usize> {
    let n = (duration * sample_rate as f64).round() as usize;
    let step = period * sample_rate as f64;
    (0..)
        .map(|k| (k as f64 * step).round() as usize)
        .take_while(|&p| p < n)
        .collect()
}

/// Generates `duration` seconds of `kind`. Deterministic for a given seed.
pub fn gen_signal(kind: SignalKind, duration: f64, sample_rate: u32, seed: u64) -> Result<AudioBuffer> {
    if sample_rate == 0 || !(duration.is_finite() && duration > 0.0) {
        return Err(Error::config("duration and sample rate must be positive"));
    }
    let sr = sample_rate as f64;
    let nyquist = sr / 2.0;
    let n = (duration * sr).round() as usize;
    let check_freq = |f: f64| {
        if f.is_finite() && f > 0.0 && f < nyquist {
            Ok(())
        } else {
            Err(Error::config(format!(
                "frequency {f} Hz must lie in (0, {nyquist}) Hz"
            )))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = match kind {
        SignalKind::Sine { freq } => {
            check_freq(freq)?;
            (0..n).map(|i| 0.5 * (2.0 * PI * freq * i as f64 / sr).sin()).collect()
        }
        SignalKind::TwoTone { f1, f2 } => {
            check_freq(f1)?;
            check_freq(f2)?;
            (0..n)
                .map(|i| {
                    let t = i as f64 / sr;
                    0.25 * (2.0 * PI * f1 * t).sin() + 0.25 * (2.0 * PI * f2 * t).sin()
                })
                .collect()
        }
        SignalKind::ClickTrain { period } => {
            if !(period.is_finite() && period > 0.0) {
                return Err(Error::config("click period must be positive"));
            }
            let mut v = vec![0.0; n];
            for p in click_train_onsets(period, duration, sample_rate) {
                v[p] = 1.0;
            }
            v
        }
        SignalKind::ShapedNoise { slope_db_per_octave } => {
            if !slope_db_per_octave.is_finite() {
                return Err(Error::config("spectral slope must be finite"));
            }
            shaped_noise(n, sr, slope_db_per_octave, &mut rng)
        }
        SignalKind::ClickPlusHiss => {
            let mut v: Vec<f64> = (0..n)
                .map(|_| HISS_RMS * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let burst_len = (BURST_LEN_SECS * sr).round() as usize;
            let decay = BURST_DECAY_SECS * sr;
            for start in click_plus_hiss_onsets(duration, sample_rate) {
                for (j, s) in v[start..].iter_mut().take(burst_len).enumerate() {
                    let g: f64 = rng.sample(StandardNormal);
                    let env = (-(j as f64) / decay).exp();
                    // first sample fixed at full level for a crisp onset
                    let g = if j == 0 { 1.0 } else { g.clamp(-3.0, 3.0) / 3.0 };
                    *s += BURST_AMPLITUDE * env * g;
                }
            }
            v
        }
    };
    AudioBuffer::new(samples, sample_rate)
}

fn shaped_noise(n: usize, sr: f64, slope: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut spec = fwd.make_output_vec();
    fwd.process(&mut x, &mut spec).expect("buffer sizes match the plan");
    // power ~ f^(slope / 10log10(2)), amplitude is its square root
    let exponent = slope / (20.0 * 2f64.log10());
    let f_min = 20.0;
    for (k, c) in spec.iter_mut().enumerate() {
        let f = (k as f64 * sr / n as f64).max(f_min);
        *c *= if k == 0 { 0.0 } else { (f / 1000.0).powf(exponent) };
    }
    spec[0].im = 0.0;
    if n.is_multiple_of(2) {
        spec[n / 2].im = 0.0;
    }
    let mut y = inv.make_output_vec();
    inv.process(&mut spec, &mut y).expect("buffer sizes match the plan");
    let rms = (y.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let scale = if rms > 0.0 { 0.1 / rms } else { 0.0 };
    y.iter().map(|v| v * scale).collect()
}
