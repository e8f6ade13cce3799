use realfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Framing metadata shared by every spectrogram flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Framing {
    pub window_size: usize,
    pub hop_size: usize,
    pub sample_rate: u32,
}

impl Framing {
    /// One-sided bin count, `window_size / 2 + 1`.
    pub fn num_bins(&self) -> usize {
        self.window_size / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.window_size as f64
    }

    pub fn hop_secs(&self) -> f64 {
        self.hop_size as f64 / self.sample_rate as f64
    }
}

/// Frames x bins grid of complex STFT values, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    data: Vec<Complex64>,
    num_frames: usize,
    framing: Framing,
}

impl ComplexSpectrogram {
    pub fn zeros(num_frames: usize, framing: Framing) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); num_frames * framing.num_bins()],
            num_frames,
            framing,
        }
    }

    pub fn from_frames(frames: Vec<Vec<Complex64>>, framing: Framing) -> Result<Self> {
        let k = framing.num_bins();
        let num_frames = frames.len();
        let mut data = Vec::with_capacity(num_frames * k);
        for (m, f) in frames.into_iter().enumerate() {
            if f.len() != k {
                return Err(Error::config(format!(
                    "frame {m} has {} bins, expected {k}",
                    f.len()
                )));
            }
            data.extend(f);
        }
        Ok(Self {
            data,
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

    pub fn frame(&self, m: usize) -> &[Complex64] {
        let k = self.num_bins();
        &self.data[m * k..(m + 1) * k]
    }

    pub fn frame_mut(&mut self, m: usize) -> &mut [Complex64] {
        let k = self.num_bins();
        &mut self.data[m * k..(m + 1) * k]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.num_bins().max(1))
    }

    pub fn get(&self, m: usize, k: usize) -> Complex64 {
        self.data[m * self.num_bins() + k]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn magnitude(&self) -> MagnitudeSpectrogram {
        MagnitudeSpectrogram {
            values: self.data.iter().map(|c| c.norm()).collect(),
            num_frames: self.num_frames,
            framing: self.framing,
        }
    }

    /// Element-wise product with a real gain grid of the same shape.
    pub fn apply_mask(&self, mask: &[f64]) -> Result<Self> {
        if mask.len() != self.data.len() {
            return Err(Error::config(format!(
                "mask has {} entries, spectrogram has {}",
                mask.len(),
                self.data.len()
            )));
        }
        Ok(Self {
            data: self.data.iter().zip(mask).map(|(c, g)| c * g).collect(),
            num_frames: self.num_frames,
            framing: self.framing,
        })
    }

    /// Truncates or extends with zero frames to exactly `num_frames`.
    pub fn resize_frames(&mut self, num_frames: usize) {
        self.data
            .resize(num_frames * self.num_bins(), Complex64::new(0.0, 0.0));
        self.num_frames = num_frames;
    }
}

/// Frames x bins grid of non-negative reals.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrogram {
    values: Vec<f64>,
    num_frames: usize,
    framing: Framing,
}

impl MagnitudeSpectrogram {
    pub fn from_values(values: Vec<f64>, num_frames: usize, framing: Framing) -> Result<Self> {
        if values.len() != num_frames * framing.num_bins() {
            return Err(Error::config(format!(
                "{} values do not fill {num_frames} x {} grid",
                values.len(),
                framing.num_bins()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config("magnitudes must be finite and non-negative"));
        }
        Ok(Self {
            values,
            num_frames,
            framing,
        })
    }

    /// Builds a grid from row vectors, one per frame. Convenience for tests and
    /// small hand-made inputs.
    pub fn from_rows(rows: &[Vec<f64>], framing: Framing) -> Result<Self> {
        let values = rows.iter().flatten().copied().collect();
        Self::from_values(values, rows.len(), framing)
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

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.values[m * self.num_bins() + k]
    }

    pub fn frame(&self, m: usize) -> &[f64] {
        let k = self.num_bins();
        &self.values[m * k..(m + 1) * k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn from_parts_unchecked(
        values: Vec<f64>,
        num_frames: usize,
        framing: Framing,
    ) -> Self {
        debug_assert_eq!(values.len(), num_frames * framing.num_bins());
        Self {
            values,
            num_frames,
            framing,
        }
    }
}
