use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use super::buffer::AudioBuffer;
use super::spectrogram::{ComplexSpectrogram, Framing};
use super::window::WindowKind;
use crate::error::{Error, Result};

/// Window/hop configuration of a short-time Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    pub window_size: usize,
    pub hop_size: usize,
    pub window_kind: WindowKind,
}

impl StftParams {
    pub fn new(window_size: usize, hop_size: usize, window_kind: WindowKind) -> Result<Self> {
        let p = Self {
            window_size,
            hop_size,
            window_kind,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn hann(window_size: usize, hop_size: usize) -> Result<Self> {
        Self::new(window_size, hop_size, WindowKind::Hann)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size < 2 || !self.window_size.is_multiple_of(2) {
            return Err(Error::config(format!(
                "window size must be even and >= 2, got {}",
                self.window_size
            )));
        }
        if self.hop_size == 0 || self.hop_size > self.window_size {
            return Err(Error::config(format!(
                "hop size must be in 1..={}, got {}",
                self.window_size, self.hop_size
            )));
        }
        if self.window_kind == WindowKind::Hann && self.hop_size > self.window_size / 2 {
            // Hann windows vanish at the frame edge; beyond half-overlap some
            // samples would receive no window weight at all.
            return Err(Error::config(format!(
                "Hann window of {} needs hop <= {}, got {}",
                self.window_size,
                self.window_size / 2,
                self.hop_size
            )));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.window_size / 2 + 1
    }

    pub fn window(&self) -> Vec<f64> {
        self.window_kind.coefficients(self.window_size)
    }

    pub fn framing(&self, sample_rate: u32) -> Framing {
        Framing {
            window_size: self.window_size,
            hop_size: self.hop_size,
            sample_rate,
        }
    }

    /// Frame count for a signal of `len` samples with the tail zero-padded:
    /// `1 + ceil(max(0, len - window) / hop)`, or 0 for an empty signal.
    pub fn num_frames(&self, len: usize) -> usize {
        if len == 0 {
            0
        } else {
            1 + len.saturating_sub(self.window_size).div_ceil(self.hop_size)
        }
    }
}

/// Square root of the window's energy, `sqrt(sum w[n]^2)`.
///
/// Dividing the STFT of unit-variance white noise by this constant gives bins
/// with unit expected power.
pub fn window_energy(params: &StftParams) -> f64 {
    params.window().iter().map(|w| w * w).sum::<f64>().sqrt()
}

/// Requested output length of an inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetLength {
    /// `(frames - 1) * hop + window`.
    Auto,
    Exact(usize),
}

/// Planned forward/inverse transforms for one [`StftParams`].
pub struct Stft {
    params: StftParams,
    window: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft").field("params", &self.params).finish()
    }
}

impl Stft {
    pub fn new(params: StftParams) -> Result<Self> {
        params.validate()?;
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self {
            window: params.window(),
            forward: planner.plan_fft_forward(params.window_size),
            inverse: planner.plan_fft_inverse(params.window_size),
            params,
        })
    }

    pub fn params(&self) -> &StftParams {
        &self.params
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Windowed spectrum of one frame. `frame` may be shorter than the window,
    /// in which case it is zero-padded.
    pub fn frame_spectrum(&self, frame: &[f64], out: &mut [Complex64]) {
        let w = self.params.window_size;
        let mut buf = vec![0.0; w];
        for (b, (x, win)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
            *b = x * win;
        }
        self.forward
            .process(&mut buf, out)
            .expect("buffer sizes match the plan");
    }

    /// Inverse real FFT of one one-sided spectrum, scaled by 1/N. The
    /// imaginary parts of the DC and Nyquist bins are discarded.
    pub fn frame_signal(&self, spectrum: &[Complex64], out: &mut [f64]) {
        let w = self.params.window_size;
        let mut spec = spectrum.to_vec();
        spec[0].im = 0.0;
        let last = spec.len() - 1;
        spec[last].im = 0.0;
        self.inverse
            .process(&mut spec, out)
            .expect("buffer sizes match the plan");
        let scale = 1.0 / w as f64;
        out.iter_mut().for_each(|x| *x *= scale);
    }

    pub fn forward(&self, samples: &[f64], sample_rate: u32) -> ComplexSpectrogram {
        let p = &self.params;
        let num_frames = p.num_frames(samples.len());
        let mut spec = ComplexSpectrogram::zeros(num_frames, p.framing(sample_rate));
        for m in 0..num_frames {
            let start = m * p.hop_size;
            let end = (start + p.window_size).min(samples.len());
            self.frame_spectrum(&samples[start..end], spec.frame_mut(m));
        }
        spec
    }

    /// Weighted overlap-add with window-sum normalisation.
    pub fn inverse(&self, spec: &ComplexSpectrogram, target: TargetLength) -> Result<Vec<f64>> {
        let p = &self.params;
        let f = spec.framing();
        if f.window_size != p.window_size || f.hop_size != p.hop_size {
            return Err(Error::config(format!(
                "spectrogram framing {}/{} does not match params {}/{}",
                f.window_size, f.hop_size, p.window_size, p.hop_size
            )));
        }
        let m = spec.num_frames();
        let full_len = if m == 0 {
            0
        } else {
            (m - 1) * p.hop_size + p.window_size
        };
        let mut out = vec![0.0; full_len];
        let mut wsum = vec![0.0; full_len];
        let mut frame = vec![0.0; p.window_size];
        for (i, bins) in spec.frames().take(m).enumerate() {
            self.frame_signal(bins, &mut frame);
            let start = i * p.hop_size;
            for n in 0..p.window_size {
                out[start + n] += self.window[n] * frame[n];
                wsum[start + n] += self.window[n] * self.window[n];
            }
        }
        for (y, s) in out.iter_mut().zip(&wsum) {
            if *s > WSUM_FLOOR {
                *y /= s;
            } else {
                *y = 0.0;
            }
        }
        if let TargetLength::Exact(len) = target {
            out.resize(len, 0.0);
        }
        Ok(out)
    }

    /// Forward transform of the signal padded with `window/2` zeros on each
    /// side, so frame `m` is centred on sample `m * hop`.
    pub fn forward_centered(&self, samples: &[f64], sample_rate: u32) -> ComplexSpectrogram {
        if samples.is_empty() {
            return ComplexSpectrogram::zeros(0, self.params.framing(sample_rate));
        }
        let half = self.params.window_size / 2;
        let mut padded = vec![0.0; samples.len() + 2 * half];
        padded[half..half + samples.len()].copy_from_slice(samples);
        self.forward(&padded, sample_rate)
    }

    /// Inverse of [`Stft::forward_centered`], returning exactly `len` samples.
    pub fn inverse_centered(&self, spec: &ComplexSpectrogram, len: usize) -> Result<Vec<f64>> {
        let half = self.params.window_size / 2;
        let mut out = self.inverse(spec, TargetLength::Exact(len + 2 * half))?;
        out.drain(..half);
        out.truncate(len);
        Ok(out)
    }

    /// Frame count produced by [`Stft::forward_centered`] for `len` samples.
    pub fn num_frames_centered(&self, len: usize) -> usize {
        if len == 0 {
            0
        } else {
            self.params.num_frames(len + self.params.window_size)
        }
    }
}

/// Samples whose accumulated squared window weight is below this receive no
/// normalisation and are set to zero.
const WSUM_FLOOR: f64 = 1e-10;

pub fn stft(signal: &AudioBuffer, params: &StftParams) -> Result<ComplexSpectrogram> {
    Ok(Stft::new(*params)?.forward(signal.samples(), signal.sample_rate()))
}

pub fn istft(
    spec: &ComplexSpectrogram,
    params: &StftParams,
    target: TargetLength,
) -> Result<AudioBuffer> {
    let samples = Stft::new(*params)?.inverse(spec, target)?;
    AudioBuffer::new(samples, spec.framing().sample_rate)
}
