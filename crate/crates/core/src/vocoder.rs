//! Phase vocoder time stretching.
//!
//! Analysis frames are read at fractional positions `m * hop_s / alpha`
//! (rounded to the nearest sample) and written every `hop_s` samples. Phases
//! are advanced from the instantaneous frequency measured between consecutive
//! analysis frames, using the actual integer analysis step so rounding does
//! not bias the estimate. With identity phase locking only spectral peaks are
//! advanced; every other bin keeps its analysis phase offset relative to the
//! peak whose region it falls in.

use std::f64::consts::PI;

use crate::dsp::{stretched_len, AudioBuffer, Complex64, Stft, StftParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PvParams {
    pub window_size: usize,
    pub synthesis_hop: usize,
}

impl PvParams {
    /// 4096-sample window and a quarter-window hop at 44.1 kHz.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        let w = crate::stn::scale_samples(4096, sample_rate, 4);
        Self {
            window_size: w,
            synthesis_hop: w / 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        StftParams::hann(self.window_size, self.synthesis_hop).map(|_| ())
    }
}

impl Default for PvParams {
    fn default() -> Self {
        Self::for_sample_rate(44100)
    }
}

/// Per-frame phase propagation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Peaks propagate, their regions follow rigidly.
    IdentityLocking,
    /// Every bin propagates independently (the plain phase vocoder).
    PerBin,
}

/// A spectral peak and its half-open region of influence `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeakRegion {
    pub peak: usize,
    pub start: usize,
    pub end: usize,
}

/// Peaks are bins strictly above their two neighbours on each side (fewer at
/// the spectrum edges). Region boundaries sit at the smallest magnitude
/// between adjacent peaks, the lowest such bin on ties, and the boundary bin
/// starts the upper region. The regions tile `[0, len)`.
pub fn find_peaks(mag: &[f64]) -> Vec<PeakRegion> {
    let k = mag.len();
    let peaks: Vec<usize> = (0..k)
        .filter(|&i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(k);
            (lo..hi).all(|j| j == i || mag[i] > mag[j])
        })
        .collect();
    let mut regions = Vec::with_capacity(peaks.len());
    let mut start = 0;
    for (n, &p) in peaks.iter().enumerate() {
        let end = match peaks.get(n + 1) {
            Some(&next) => {
                let mut best = p + 1;
                for j in p + 1..next {
                    if mag[j] < mag[best] {
                        best = j;
                    }
                }
                best
            }
            None => k,
        };
        regions.push(PeakRegion {
            peak: p,
            start,
            end,
        });
        start = end;
    }
    regions
}

fn princarg(phase: f64) -> f64 {
    phase - 2.0 * PI * ((phase + PI) / (2.0 * PI)).floor()
}

/// Stretches tonal material with an identity-phase-locked vocoder.
pub fn stretch_sines(sines: &AudioBuffer, alpha: f64, params: &PvParams) -> Result<AudioBuffer> {
    phase_vocoder(sines, alpha, params, PhaseMode::IdentityLocking)
}

/// Output length is exactly `round(alpha * len)`.
pub fn phase_vocoder(
    x: &AudioBuffer,
    alpha: f64,
    params: &PvParams,
    mode: PhaseMode,
) -> Result<AudioBuffer> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::config(format!("alpha must be positive, got {alpha}")));
    }
    params.validate()?;
    let sr = x.sample_rate();
    let out_len = stretched_len(x.len(), alpha);
    if out_len == 0 || x.is_empty() {
        return AudioBuffer::silence(out_len, sr);
    }
    let w = params.window_size;
    let hop_s = params.synthesis_hop;
    let half = w / 2;
    let stft = Stft::new(StftParams::hann(w, hop_s)?)?;
    let k = w / 2 + 1;

    // Analysis frame m starts at padded index round(m * hop_s / alpha), i.e.
    // is centred on that input sample.
    let num_frames = out_len.div_ceil(hop_s) + 1;
    let positions: Vec<usize> = (0..num_frames)
        .map(|m| (m as f64 * hop_s as f64 / alpha).round() as usize)
        .collect();
    let last_start = *positions.last().expect("at least one frame");
    let mut padded = vec![0.0; (last_start + w).max(x.len() + 2 * half)];
    padded[half..half + x.len()].copy_from_slice(x.samples());

    let bin_omega: Vec<f64> = (0..k).map(|b| 2.0 * PI * b as f64 / w as f64).collect();
    let window = stft.window().to_vec();
    let mut out = vec![0.0; (num_frames - 1) * hop_s + w];
    let mut wsum = vec![0.0; out.len()];

    let mut spectrum = vec![Complex64::new(0.0, 0.0); k];
    let mut prev_phase = vec![0.0; k];
    let mut synth_phase = vec![0.0; k];
    let mut omega = vec![0.0; k];
    let mut mag = vec![0.0; k];
    let mut phase = vec![0.0; k];
    let mut frame = vec![0.0; w];

    for (m, &pos) in positions.iter().enumerate() {
        stft.frame_spectrum(&padded[pos..pos + w], &mut spectrum);
        for b in 0..k {
            mag[b] = spectrum[b].norm();
            phase[b] = spectrum[b].arg();
        }
        if m == 0 {
            synth_phase.copy_from_slice(&phase);
        } else {
            let step = pos - positions[m - 1];
            for b in 0..k {
                omega[b] = if step == 0 {
                    bin_omega[b]
                } else {
                    let expected = bin_omega[b] * step as f64;
                    bin_omega[b] + princarg(phase[b] - prev_phase[b] - expected) / step as f64
                };
            }
            let advance = |b: usize, prev: f64| princarg(prev + hop_s as f64 * omega[b]);
            let regions = match mode {
                PhaseMode::IdentityLocking => find_peaks(&mag),
                PhaseMode::PerBin => Vec::new(),
            };
            if regions.is_empty() {
                for (b, p) in synth_phase.iter_mut().enumerate().take(k) {
                    *p = advance(b, *p);
                }
            } else {
                for r in &regions {
                    let peak_phase = advance(r.peak, synth_phase[r.peak]);
                    let rotation = peak_phase - phase[r.peak];
                    for b in r.start..r.end {
                        synth_phase[b] = princarg(phase[b] + rotation);
                    }
                }
            }
        }
        prev_phase.copy_from_slice(&phase);

        for b in 0..k {
            spectrum[b] = Complex64::from_polar(mag[b], synth_phase[b]);
        }
        stft.frame_signal(&spectrum, &mut frame);
        let start = m * hop_s;
        for n in 0..w {
            out[start + n] += window[n] * frame[n];
            wsum[start + n] += window[n] * window[n];
        }
    }

    let samples: Vec<f64> = out[half..half + out_len]
        .iter()
        .zip(&wsum[half..half + out_len])
        .map(|(y, s)| if *s > 1e-10 { y / s } else { 0.0 })
        .collect();
    AudioBuffer::new(samples, sr)
}
