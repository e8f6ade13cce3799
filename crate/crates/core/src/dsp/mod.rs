//! STFT analysis/synthesis, windows and spectrogram median filtering.

mod buffer;
mod median;
mod spectrogram;
mod stft;
mod window;

pub use buffer::{stretched_len, AudioBuffer};
pub use median::{median_filter_axis, Axis};
pub use spectrogram::{ComplexSpectrogram, Framing, MagnitudeSpectrogram};
pub use stft::{istft, stft, window_energy, Stft, StftParams, TargetLength};
pub use window::WindowKind;

pub use realfft::num_complex::Complex64;
