//! Objective measurements used by the acceptance suite.
//!
//! Everything here has its own framing and FFT code so that a bug in the
//! library's STFT cannot hide itself in the measurements.

use std::f64::consts::PI;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{RealFftPlanner, RealToComplex};

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Windowed power spectra of fixed-length frames.
struct FramePower {
    window: Vec<f64>,
    fft: Arc<dyn RealToComplex<f64>>,
    buf: Vec<f64>,
    out: Vec<Complex<f64>>,
}

impl FramePower {
    fn new(len: usize) -> Self {
        let fft = RealFftPlanner::<f64>::new().plan_fft_forward(len);
        let out = fft.make_output_vec();
        Self {
            window: hann(len),
            fft,
            buf: vec![0.0; len],
            out,
        }
    }

    /// |X_k|² of the frame starting at `start`; samples past the end are zero.
    fn power(&mut self, x: &[f64], start: usize) -> Vec<f64> {
        for (i, b) in self.buf.iter_mut().enumerate() {
            *b = x.get(start + i).copied().unwrap_or(0.0) * self.window[i];
        }
        self.fft
            .process(&mut self.buf, &mut self.out)
            .expect("buffer sizes match the plan");
        self.out.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Frequency of the strongest spectral peak: Hann-windowed FFT zero-padded to
/// at least 4x the signal length, refined by a parabola through the log
/// magnitudes around the maximum.
pub fn dominant_freq(x: &[f64], sample_rate: u32) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = (4 * x.len()).next_power_of_two();
    let w = hann(x.len());
    let mut buf = vec![0.0; n];
    for (i, (b, v)) in buf.iter_mut().zip(x).enumerate() {
        *b = v * w[i];
    }
    let fft = RealFftPlanner::<f64>::new().plan_fft_forward(n);
    let mut spec = fft.make_output_vec();
    fft.process(&mut buf, &mut spec).expect("buffer sizes match the plan");
    let mag: Vec<f64> = spec.iter().map(|c| c.norm()).collect();
    let k = (1..mag.len() - 1)
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .unwrap_or(1);
    let (a, b, c) = (mag[k - 1].ln(), mag[k].ln(), mag[k + 1].ln());
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    (k as f64 + delta) * sample_rate as f64 / n as f64
}

/// Squared signal smoothed by a normalized 2 ms Hann kernel, one value per
/// sample and aligned with the input (zero-phase).
pub fn energy_envelope(x: &[f64], sample_rate: u32) -> Vec<f64> {
    let len = ((0.002 * sample_rate as f64).round() as usize).max(1) | 1;
    let mut kernel: Vec<f64> = (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * (i as f64 + 1.0) / (len as f64 + 1.0)).cos())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= sum);
    let half = len / 2;
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    (0..x.len())
        .map(|n| {
            kernel
                .iter()
                .enumerate()
                .filter_map(|(j, k)| {
                    let idx = (n + j).checked_sub(half)?;
                    sq.get(idx).map(|s| s * k)
                })
                .sum()
        })
        .collect()
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// One event found in an energy envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeEvent {
    /// First sample of the rising edge at 10% of the event's height above
    /// the background.
    pub onset: usize,
    pub peak: usize,
    /// Time from 10% to 90% of the height, seconds.
    pub rise_time: f64,
}

/// Rising-edge analysis of the envelope peak inside `lo..hi`.
fn event_at(env: &[f64], background: f64, lo: usize, hi: usize, sample_rate: u32) -> Option<EnvelopeEvent> {
    let hi = hi.min(env.len());
    if lo >= hi {
        return None;
    }
    let peak = (lo..hi).max_by(|&a, &b| env[a].total_cmp(&env[b]))?;
    let height = env[peak] - background;
    if height <= 0.0 {
        return None;
    }
    let level = |i: usize| (env[i] - background) / height;
    let max_back = (0.1 * sample_rate as f64) as usize;
    let floor = peak.saturating_sub(max_back);
    let mut i10 = peak;
    while i10 > floor && level(i10 - 1) >= 0.1 {
        i10 -= 1;
    }
    let i90 = (i10..=peak).find(|&i| level(i) >= 0.9).unwrap_or(peak);
    Some(EnvelopeEvent {
        onset: i10,
        peak,
        rise_time: (i90 - i10) as f64 / sample_rate as f64,
    })
}

/// Events whose energy rises well above the median background: at least
/// `10x` the median and 5% of the strongest peak's height. Regions closer
/// than 20 ms are merged.
pub fn detect_envelope_events(x: &[f64], sample_rate: u32) -> Vec<EnvelopeEvent> {
    let env = energy_envelope(x, sample_rate);
    let background = median(&env);
    let max = env.iter().cloned().fold(0.0, f64::max);
    let threshold = (background * 10.0).max(background + 0.05 * (max - background));
    if max <= threshold {
        return Vec::new();
    }
    let merge = (0.02 * sample_rate as f64) as usize;
    let mut regions: Vec<(usize, usize)> = Vec::new();
    for (i, &e) in env.iter().enumerate() {
        if e < threshold {
            continue;
        }
        match regions.last_mut() {
            Some((_, end)) if i <= *end + merge => *end = i + 1,
            _ => regions.push((i, i + 1)),
        }
    }
    regions
        .into_iter()
        .filter_map(|(lo, hi)| event_at(&env, background, lo, hi, sample_rate))
        .collect()
}

/// Onset samples of [`detect_envelope_events`].
pub fn onset_positions(x: &[f64], sample_rate: u32) -> Vec<usize> {
    detect_envelope_events(x, sample_rate)
        .iter()
        .map(|e| e.onset)
        .collect()
}

/// 10-90% rise time (seconds) of the strongest envelope peak within
/// `center - before .. center + after` seconds. The 10% point is the first
/// sample of the window reaching 10% of the peak height, so pre-echoes
/// count as part of the rise; the 90% point is the first sample after it
/// reaching 90%. Heights are measured above the median envelope of the
/// whole signal.
pub fn rise_time_near(x: &[f64], sample_rate: u32, center: usize, before: f64, after: f64) -> Option<f64> {
    let env = energy_envelope(x, sample_rate);
    let background = median(&env);
    let sr = sample_rate as f64;
    let lo = center.saturating_sub((before * sr) as usize);
    let hi = (center + (after * sr) as usize).min(env.len());
    if lo >= hi {
        return None;
    }
    let peak = (lo..hi).max_by(|&a, &b| env[a].total_cmp(&env[b]))?;
    let height = env[peak] - background;
    if height <= 0.0 {
        return None;
    }
    let level = |i: usize| (env[i] - background) / height;
    let i10 = (lo..=peak).find(|&i| level(i) >= 0.1)?;
    let i90 = (i10..=peak).find(|&i| level(i) >= 0.9)?;
    Some((i90 - i10) as f64 / sr)
}

/// Welch power spectral density: Hann segments of `segment` samples with 50%
/// overlap, averaged periodograms. Returns (frequencies, density).
pub fn welch_psd(x: &[f64], sample_rate: u32, segment: usize) -> (Vec<f64>, Vec<f64>) {
    let hop = (segment / 2).max(1);
    let mut fp = FramePower::new(segment);
    let w2: f64 = fp.window.iter().map(|w| w * w).sum();
    let bins = segment / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut count = 0usize;
    let mut start = 0;
    while start + segment <= x.len() || (count == 0 && start == 0) {
        for (a, p) in acc.iter_mut().zip(fp.power(x, start)) {
            *a += p;
        }
        count += 1;
        start += hop;
    }
    let scale = 1.0 / (count as f64 * w2 * sample_rate as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || k == bins - 1 { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let freqs = (0..bins)
        .map(|k| k as f64 * sample_rate as f64 / segment as f64)
        .collect();
    (freqs, psd)
}

/// Power in fractional-octave bands around `centers`, in dB. A band spans
/// `c * 2^(-fraction/2) .. c * 2^(fraction/2)`.
pub fn band_levels_db(freqs: &[f64], psd: &[f64], centers: &[f64], fraction: f64) -> Vec<f64> {
    let edge = 2f64.powf(fraction / 2.0);
    centers
        .iter()
        .map(|&c| {
            let p: f64 = freqs
                .iter()
                .zip(psd)
                .filter(|(f, _)| **f >= c / edge && **f < c * edge)
                .map(|(_, p)| p)
                .sum();
            10.0 * p.max(1e-30).log10()
        })
        .collect()
}

/// Octave-band centres from 63 Hz to 16 kHz.
pub const OCTAVE_CENTERS: [f64; 9] = [62.5, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0, 16000.0];

/// Least-squares slope of the PSD in dB per octave between `f_lo` and `f_hi`.
pub fn spectral_slope_db_per_octave(freqs: &[f64], psd: &[f64], f_lo: f64, f_hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = freqs
        .iter()
        .zip(psd)
        .filter(|(f, p)| **f >= f_lo && **f <= f_hi && **p > 0.0)
        .map(|(f, p)| (f.log2(), 10.0 * p.log10()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Per-frame power spectra of frames centred at `m * hop`, for every `m`
/// whose frame lies entirely inside the signal.
pub fn centered_frame_powers(x: &[f64], window: usize, hop: usize) -> Vec<(usize, Vec<f64>)> {
    let mut fp = FramePower::new(window);
    let half = window / 2;
    (0..)
        .map(|m| m * hop)
        .take_while(|c| c + half <= x.len())
        .filter(|&c| c >= half)
        .map(|c| (c, fp.power(x, c - half)))
        .collect()
}

/// Groups FFT bins into third-octave bands from the lowest bin above 40 Hz
/// to Nyquist, each band at least one bin wide. Returns bin ranges.
pub fn third_octave_bins(window: usize, sample_rate: u32) -> Vec<std::ops::Range<usize>> {
    let bins = window / 2 + 1;
    let mut lo = ((40.0 * window as f64 / sample_rate as f64).ceil() as usize).max(1);
    let mut out = Vec::new();
    while lo < bins {
        let hi = ((lo as f64 * 2f64.powf(1.0 / 3.0)).ceil() as usize)
            .max(lo + 1)
            .min(bins);
        out.push(lo..hi);
        lo = hi;
    }
    out
}

/// Band powers of one power spectrum.
pub fn band_powers(power: &[f64], bands: &[std::ops::Range<usize>]) -> Vec<f64> {
    bands.iter().map(|r| power[r.clone()].iter().sum()).collect()
}

/// Hop-rate modulation of the amplitude envelope: `|y|` of every signal is
/// folded modulo `hop` over `skip..len-skip`, the folds are summed, and the
/// ratio of the fold's first Fourier coefficient to its mean is returned in
/// dB. This is the modulation-spectrum line at the hop rate relative to the
/// DC line; a sinusoidal modulation of peak depth `d` reads `d/2`.
pub fn hop_modulation_db(signals: &[&[f64]], hop: usize, skip: usize) -> f64 {
    let mut fold = vec![0.0; hop];
    for y in signals {
        if y.len() <= 2 * skip {
            continue;
        }
        let n = (y.len() - 2 * skip) / hop * hop;
        for (i, v) in y[skip..skip + n].iter().enumerate() {
            // index by absolute position so all signals share the grid
            fold[(skip + i) % hop] += v.abs();
        }
    }
    let c0 = fold.iter().sum::<f64>() / hop as f64;
    let (re, im) = fold.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, v)| {
        let a = 2.0 * PI * i as f64 / hop as f64;
        (re + v * a.cos(), im - v * a.sin())
    });
    let c1 = (re * re + im * im).sqrt() / hop as f64;
    20.0 * (c1 / c0).log10()
}

/// Mean absolute difference in dB between two equally shaped level tables
/// after removing their mean offset, over entries whose `reference` level
/// is within `range_db` of its maximum.
pub fn shape_deviation_db(measured_db: &[f64], reference_db: &[f64], range_db: f64) -> f64 {
    let max = reference_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let diffs: Vec<f64> = measured_db
        .iter()
        .zip(reference_db)
        .filter(|(_, r)| **r >= max - range_db)
        .map(|(m, r)| m - r)
        .collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    diffs.iter().map(|d| (d - mean).abs()).sum::<f64>() / diffs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::signals::{gen_signal, SignalKind};

    #[test]
    fn dominant_freq_of_sine() {
        for f in [440.0, 1000.0, 5123.4] {
            let x = gen_signal(SignalKind::Sine { freq: f }, 1.0, 44100, 0).unwrap();
            let est = dominant_freq(x.samples(), 44100);
            assert!((est - f).abs() < 0.5, "{f}: {est}");
        }
    }

    #[test]
    fn shaped_noise_slope() {
        for slope in [-6.0, -3.0, 0.0] {
            let x = gen_signal(SignalKind::ShapedNoise { slope_db_per_octave: slope }, 2.0, 44100, 4)
                .unwrap();
            let (f, p) = welch_psd(x.samples(), 44100, 4096);
            let est = spectral_slope_db_per_octave(&f, &p, 100.0, 10_000.0);
            assert!((est - slope).abs() < 1.0, "{slope}: {est}");
        }
    }

    #[test]
    fn welch_of_white_noise_integrates_to_variance() {
        let x = gen_signal(SignalKind::ShapedNoise { slope_db_per_octave: 0.0 }, 2.0, 44100, 1).unwrap();
        let (f, p) = welch_psd(x.samples(), 44100, 1024);
        let df = f[1] - f[0];
        let total: f64 = p.iter().sum::<f64>() * df;
        let var = x.rms().powi(2);
        assert!((total / var - 1.0).abs() < 0.05, "{total} {var}");
    }

    #[test]
    fn click_train_onsets_found() {
        let x = gen_signal(SignalKind::ClickTrain { period: 0.25 }, 2.0, 44100, 0).unwrap();
        let on = onset_positions(x.samples(), 44100);
        assert_eq!(on.len(), 8);
        for (k, o) in on.iter().enumerate() {
            assert!((*o as i64 - (k * 11025) as i64).abs() <= 44, "{k}: {o}");
        }
    }

    #[test]
    fn rise_time_of_ramp() {
        let sr = 44100;
        // energy ramps linearly over 10 ms: 10-90% takes 8 ms
        let mut x = vec![0.0; 44100];
        for i in 0..441 {
            x[20000 + i] = (i as f64 / 441.0).sqrt();
        }
        for v in &mut x[20441..21000] {
            *v = 1.0;
        }
        let r = rise_time_near(&x, sr, 20000, 0.01, 0.03).unwrap();
        assert!((r - 0.008).abs() < 0.0005, "{r}");
    }

    #[test]
    fn pure_tone_envelope_has_no_hop_modulation() {
        let x = gen_signal(SignalKind::Sine { freq: 441.0 * 7.0 / 3.0 }, 1.0, 44100, 0).unwrap();
        assert!(hop_modulation_db(&[x.samples()], 1024, 4096) < -60.0);
        let am: Vec<f64> = (0..44100)
            .map(|n| {
                let g = 1.0 + 0.02 * (2.0 * PI * n as f64 / 1024.0).cos();
                g * (2.0 * PI * 3000.0 * n as f64 / 44100.0).sin()
            })
            .collect();
        let db = hop_modulation_db(&[&am], 1024, 4096);
        assert!((db - 20.0 * 0.01f64.log10()).abs() < 0.5, "{db}");
    }

    #[test]
    fn shape_deviation_ignores_offset() {
        let r = [0.0, -10.0, -20.0, -100.0];
        let m = [3.0, -7.0, -16.0, 0.0];
        let d = shape_deviation_db(&m, &r, 60.0);
        assert!((d - 4.0 / 9.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn third_octave_bands_cover_spectrum() {
        let b = third_octave_bins(2048, 44100);
        assert_eq!(b.first().unwrap().start, 2);
        assert_eq!(b.last().unwrap().end, 1025);
        assert!(b.windows(2).all(|w| w[0].end == w[1].start));
    }
}
