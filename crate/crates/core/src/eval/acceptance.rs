//! The acceptance criteria as runnable checks.

use std::time::Instant;

use crate::dsp::{stretched_len, AudioBuffer};
use crate::error::Result;
use crate::eval::measure::{
    band_levels_db, band_powers, centered_frame_powers, detect_envelope_events, dominant_freq,
    hop_modulation_db, rise_time_near, shape_deviation_db, third_octave_bins, welch_psd,
    OCTAVE_CENTERS,
};
use crate::eval::report::MetricReport;
use crate::eval::signals::{click_plus_hiss_onsets, gen_signal, SignalKind};
use crate::noise_morph::{generate_excitation, stretch_noise, stretch_noise_traced, MorphVariant, NoiseMorphParams};
use crate::pipeline::{time_stretch, time_stretch_detailed, Mode, StretchConfig};
use crate::stn::{saturating_mask, stn_analyze, stn_decompose, StnConfig, StnThresholds};

pub const SAMPLE_RATE: u32 = 44100;
/// Duration of every corpus signal, seconds.
pub const CORPUS_SECS: f64 = 2.0;

/// One numbered criterion.
#[derive(Debug, Clone, Copy)]
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub run: fn() -> Result<Vec<MetricReport>>,
}

/// Result of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub reports: Vec<MetricReport>,
    pub secs: f64,
}

impl CriterionOutcome {
    pub fn pass(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(|r| r.pass)
    }

    /// `criterion N name: PASS|FAIL (k/n metrics, t s)`.
    pub fn summary_line(&self) -> String {
        let passed = self.reports.iter().filter(|r| r.pass).count();
        format!(
            "criterion {:>2} {}: {} ({}/{} metrics, {:.1} s)",
            self.id,
            self.name,
            if self.pass() { "PASS" } else { "FAIL" },
            passed,
            self.reports.len(),
            self.secs
        )
    }
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, name: "perfect_reconstruction", run: perfect_reconstruction },
        Criterion { id: 2, name: "mask_partition", run: mask_partition },
        Criterion { id: 3, name: "saturating_function", run: saturating_function },
        Criterion { id: 4, name: "length_contract", run: length_contract },
        Criterion { id: 5, name: "pitch_preservation", run: pitch_preservation },
        Criterion { id: 6, name: "transient_preservation", run: transient_preservation },
        Criterion { id: 7, name: "noise_spectral_fidelity", run: noise_spectral_fidelity },
        Criterion { id: 8, name: "frame_smoothness", run: frame_smoothness },
        Criterion { id: 9, name: "ablation_separation", run: ablation_separation },
        Criterion { id: 10, name: "determinism", run: determinism },
        Criterion { id: 11, name: "excitation_statistics", run: excitation_statistics },
    ]
}

/// Runs every criterion whose name contains `filter` (or whose number equals
/// it), in order.
pub fn run_acceptance(filter: Option<&str>) -> Result<Vec<CriterionOutcome>> {
    criteria()
        .into_iter()
        .filter(|c| filter.is_none_or(|f| c.name.contains(f) || c.id.to_string() == f))
        .map(run_criterion)
        .collect()
}

pub fn run_criterion(c: Criterion) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let reports = (c.run)()?;
    Ok(CriterionOutcome {
        id: c.id,
        name: c.name,
        reports,
        secs: start.elapsed().as_secs_f64(),
    })
}

/// The five synthetic corpus signals.
pub fn corpus() -> Result<Vec<(String, AudioBuffer)>> {
    let kinds = [
        SignalKind::Sine { freq: 440.0 },
        SignalKind::TwoTone { f1: 440.0, f2: 1250.0 },
        SignalKind::ClickTrain { period: 0.25 },
        SignalKind::ShapedNoise { slope_db_per_octave: -3.0 },
        SignalKind::ClickPlusHiss,
    ];
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| Ok((k.name(), gen_signal(*k, CORPUS_SECS, SAMPLE_RATE, 100 + i as u64)?)))
        .collect()
}

fn stationary_noise(seed: u64) -> Result<AudioBuffer> {
    gen_signal(
        SignalKind::ShapedNoise { slope_db_per_octave: -3.0 },
        CORPUS_SECS,
        SAMPLE_RATE,
        seed,
    )
}

fn config(alpha: f64, mode: Mode) -> StretchConfig {
    StretchConfig::new(alpha, mode, SAMPLE_RATE)
}

fn perfect_reconstruction() -> Result<Vec<MetricReport>> {
    let start = Instant::now();
    let mut out = Vec::new();
    for (name, x) in corpus()? {
        let c = stn_decompose(&x, &StnConfig::default())?;
        let sum = c.sum();
        let err = x
            .samples()
            .iter()
            .zip(&sum)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.push(
            MetricReport::at_most(name, "max_error_rel_peak", err / x.peak(), 1e-4)
                .with_note("|x-(s+t+n)|inf / |x|inf"),
        );
    }
    out.push(MetricReport::at_most(
        "all",
        "runtime_s",
        start.elapsed().as_secs_f64(),
        10.0,
    ));
    Ok(out)
}

fn mask_partition() -> Result<Vec<MetricReport>> {
    let mut out = Vec::new();
    for (name, x) in corpus()? {
        let a = stn_analyze(&x, &StnConfig::default())?;
        for (stage, m) in [("stage1", &a.stage1_masks), ("stage2", &a.stage2_masks)] {
            let (s, t, n) = (m.sines.values(), m.transients.values(), m.noise.values());
            let mut sum_err = 0.0f64;
            let mut range_err = 0.0f64;
            for i in 0..s.len() {
                sum_err = sum_err.max((s[i] + t[i] + n[i] - 1.0).abs());
                for v in [s[i], t[i], n[i]] {
                    range_err = range_err.max(-v).max(v - 1.0);
                }
            }
            out.push(MetricReport::at_most(format!("{name}/{stage}"), "max_sum_error", sum_err, 1e-12));
            out.push(MetricReport::at_most(
                format!("{name}/{stage}"),
                "max_range_violation",
                range_err,
                0.0,
            ));
        }
    }
    Ok(out)
}

fn saturating_function() -> Result<Vec<MetricReport>> {
    let mut out = Vec::new();
    for (label, t) in [("stage1", StnThresholds::STAGE1), ("stage2", StnThresholds::STAGE2)] {
        let mid = 0.5 * (t.beta_lower + t.beta_upper);
        out.push(MetricReport::within(label, "f(beta_lower)", saturating_mask(t.beta_lower, &t), 0.0, 1e-12));
        out.push(MetricReport::within(label, "f(beta_upper)", saturating_mask(t.beta_upper, &t), 1.0, 1e-12));
        out.push(MetricReport::within(label, "f(midpoint)", saturating_mask(mid, &t), 0.5, 1e-12));
        let grid: Vec<f64> = (0..1000)
            .map(|i| saturating_mask(i as f64 / 999.0, &t))
            .collect();
        let decreases = grid.windows(2).filter(|w| w[1] < w[0]).count();
        out.push(
            MetricReport::at_most(label, "grid_decreases", decreases as f64, 0.0)
                .with_note("1000-point grid on [0, 1]"),
        );
    }
    Ok(out)
}

fn length_contract() -> Result<Vec<MetricReport>> {
    let mut out = Vec::new();
    let corpus = corpus()?;
    for mode in Mode::ALL {
        for alpha in [1.0, 2.0, 3.0, 4.0, 8.0] {
            for (name, x) in &corpus {
                let y = time_stretch(x, &config(alpha, mode))?;
                let diff = y.len() as f64 - stretched_len(x.len(), alpha) as f64;
                out.push(MetricReport::within(
                    format!("{name}/{mode}/a{alpha}"),
                    "length_diff",
                    diff,
                    0.0,
                    0.0,
                ));
            }
        }
    }
    Ok(out)
}

fn pitch_preservation() -> Result<Vec<MetricReport>> {
    let mut out = Vec::new();
    for freq in [440.0, 1000.0] {
        let x = gen_signal(SignalKind::Sine { freq }, CORPUS_SECS, SAMPLE_RATE, 0)?;
        for alpha in [2.0, 4.0, 8.0] {
            let y = time_stretch(&x, &config(alpha, Mode::Nm))?;
            let f = dominant_freq(y.samples(), SAMPLE_RATE);
            out.push(MetricReport::within(format!("sine_{freq}/a{alpha}"), "dominant_hz", f, freq, 1.0));
        }
    }
    Ok(out)
}

/// Rise-time search window around each expected click.
pub const RISE_BEFORE_SECS: f64 = 0.15;
pub const RISE_AFTER_SECS: f64 = 0.1;

fn transient_preservation() -> Result<Vec<MetricReport>> {
    let alpha = 3.0;
    let sr = SAMPLE_RATE as f64;
    let x = gen_signal(SignalKind::ClickPlusHiss, CORPUS_SECS, SAMPLE_RATE, 7)?;
    let onsets = click_plus_hiss_onsets(CORPUS_SECS, SAMPLE_RATE);
    let nm = time_stretch(&x, &config(alpha, Mode::Nm))?;
    let nd = time_stretch(&x, &config(alpha, Mode::Nd))?;
    let an = time_stretch(&x, &config(alpha, Mode::An))?;
    let detected: Vec<usize> = detect_envelope_events(nm.samples(), SAMPLE_RATE)
        .iter()
        .map(|e| e.onset)
        .collect();

    let mut out = Vec::new();
    for (i, &o) in onsets.iter().enumerate() {
        let case = format!("click{i}");
        let expected = (alpha * o as f64).round();
        let nearest = detected
            .iter()
            .map(|&d| (d as f64 - expected).abs())
            .fold(f64::INFINITY, f64::min);
        out.push(
            MetricReport::at_most(&case, "nm_onset_error_ms", 1000.0 * nearest / sr, 10.0)
                .with_note("nearest detected onset vs 3x original"),
        );
        let target = expected as usize;
        let rise = |y: &AudioBuffer, c: usize| {
            rise_time_near(y.samples(), SAMPLE_RATE, c, RISE_BEFORE_SECS, RISE_AFTER_SECS)
                .unwrap_or(f64::NAN)
        };
        let r_orig = rise(&x, o);
        let r_nm = rise(&nm, target);
        let r_nd = rise(&nd, target);
        let r_an = rise(&an, target);
        out.push(
            MetricReport::at_most(&case, "nm_rise_over_original", r_nm / r_orig, 2.0)
                .with_note(format!("rise times {:.2} ms / {:.2} ms", 1e3 * r_nm, 1e3 * r_orig)),
        );
        out.push(
            MetricReport::at_least(&case, "nd_rise_over_nm", r_nd / r_nm, 2.0)
                .with_note(format!("nd rise {:.2} ms", 1e3 * r_nd)),
        );
        out.push(
            MetricReport::at_least(&case, "an_rise_over_nm", r_an / r_nm, 2.0)
                .with_note(format!("an rise {:.2} ms", 1e3 * r_an)),
        );
    }
    Ok(out)
}

/// Number of excitation seeds averaged for the frame-envelope comparison.
const ENVELOPE_SEEDS: u64 = 50;

fn noise_spectral_fidelity() -> Result<Vec<MetricReport>> {
    let alpha = 4.0;
    let x = stationary_noise(11)?;
    let cfg = config(alpha, Mode::Nm);
    let first = time_stretch_detailed(&x, &cfg)?;
    let stems = first.stems.as_ref().expect("nm keeps its stems");

    let mut out = Vec::new();
    let (fx, px) = welch_psd(x.samples(), SAMPLE_RATE, 4096);
    let (fy, py) = welch_psd(first.output.samples(), SAMPLE_RATE, 4096);
    let lx = band_levels_db(&fx, &px, &OCTAVE_CENTERS, 1.0);
    let ly = band_levels_db(&fy, &py, &OCTAVE_CENTERS, 1.0);
    for (c, (a, b)) in OCTAVE_CENTERS.iter().zip(lx.iter().zip(&ly)) {
        out.push(MetricReport::within(format!("octave_{c}"), "welch_level_diff_db", b - a, 0.0, 2.0));
    }

    // Only the noise branch depends on the seed, so the other branches of
    // the first run are reused for the remaining seeds.
    let window = cfg.noise.window_size;
    let hop = cfg.noise.hop_size;
    let bands = third_octave_bins(window, SAMPLE_RATE);
    let mut mean_power: Vec<(usize, Vec<f64>)> = Vec::new();
    for seed in 0..ENVELOPE_SEEDS {
        let y = if seed == cfg.seed {
            first.output.clone()
        } else {
            let params = NoiseMorphParams { seed, ..cfg.noise };
            let n = stretch_noise(&stems.components.noise, alpha, &params, MorphVariant::Multiply)?
                .with_len(first.output.len());
            let v = n
                .samples()
                .iter()
                .zip(stems.sines.samples())
                .zip(stems.transients.samples())
                .map(|((n, s), t)| s + t + n)
                .collect();
            AudioBuffer::new(v, SAMPLE_RATE)?
        };
        let frames = centered_frame_powers(y.samples(), window, hop);
        if mean_power.is_empty() {
            mean_power = frames
                .into_iter()
                .map(|(c, p)| (c, p.iter().map(|v| v / ENVELOPE_SEEDS as f64).collect()))
                .collect();
        } else {
            for ((_, acc), (_, p)) in mean_power.iter_mut().zip(frames) {
                acc.iter_mut().zip(p).for_each(|(a, v)| *a += v / ENVELOPE_SEEDS as f64);
            }
        }
    }

    // target: per-bin dB magnitudes of the input, interpolated at c / alpha
    let input_frames = centered_frame_powers(x.samples(), window, hop);
    let first_center = input_frames[0].0;
    let log_mag: Vec<Vec<f64>> = input_frames
        .iter()
        .map(|(_, p)| p.iter().map(|v| 10.0 * v.max(1e-24).log10()).collect())
        .collect();
    let mut measured_db = Vec::new();
    let mut target_db = Vec::new();
    for (c, power) in &mean_power {
        let tau = (*c as f64 / alpha - first_center as f64) / hop as f64;
        if tau < 0.0 || tau > (log_mag.len() - 1) as f64 {
            continue;
        }
        let j = tau.floor() as usize;
        let frac = tau - j as f64;
        let k = (j + 1).min(log_mag.len() - 1);
        let target: Vec<f64> = log_mag[j]
            .iter()
            .zip(&log_mag[k])
            .map(|(a, b)| 10f64.powf(((1.0 - frac) * a + frac * b) / 10.0))
            .collect();
        for (m, t) in band_powers(power, &bands).iter().zip(band_powers(&target, &bands)) {
            measured_db.push(10.0 * m.max(1e-30).log10());
            target_db.push(10.0 * t.max(1e-30).log10());
        }
    }
    let dev = shape_deviation_db(&measured_db, &target_db, 60.0);
    out.push(
        MetricReport::at_most("frame_envelope", "mean_abs_shape_dev_db", dev, 1.0).with_note(format!(
            "{ENVELOPE_SEEDS}-seed mean, third-octave bands per frame, offset removed"
        )),
    );
    Ok(out)
}

/// Seeds and edge margin of the hop-rate modulation estimate.
const MODULATION_SEEDS: u64 = 20;
const MODULATION_SKIP: usize = 4096;

fn frame_smoothness() -> Result<Vec<MetricReport>> {
    let params = NoiseMorphParams::for_sample_rate(SAMPLE_RATE);
    let mut out = Vec::new();
    for alpha in [1.0, 4.0] {
        let mut outputs = Vec::new();
        for seed in 0..MODULATION_SEEDS {
            let x = stationary_noise(1000 + seed)?;
            let p = NoiseMorphParams { seed, ..params };
            outputs.push(stretch_noise(&x, alpha, &p, MorphVariant::Multiply)?.into_samples());
        }
        let views: Vec<&[f64]> = outputs.iter().map(|v| v.as_slice()).collect();
        let db = hop_modulation_db(&views, params.hop_size, MODULATION_SKIP);
        out.push(
            MetricReport::at_most(format!("a{alpha}"), "hop_modulation_db", db, -40.0)
                .with_note("amplitude envelope, hop-rate line vs DC line"),
        );
    }
    Ok(out)
}

fn ablation_separation() -> Result<Vec<MetricReport>> {
    let alpha = 3.0;
    let x = stationary_noise(21)?;
    let nm = time_stretch(&x, &config(alpha, Mode::Nm))?;
    let ni = time_stretch(&x, &config(alpha, Mode::Ni))?;
    let differing = nm
        .samples()
        .iter()
        .zip(ni.samples())
        .filter(|(a, b)| a != b)
        .count();
    let mut out = vec![MetricReport::at_least("nm_vs_ni", "differing_samples", differing as f64, 1.0)];

    let params = NoiseMorphParams::for_sample_rate(SAMPLE_RATE);
    let replace = stretch_noise_traced(&x, alpha, &params, MorphVariant::Replace)?;
    let multiply = stretch_noise_traced(&x, alpha, &params, MorphVariant::Multiply)?;
    let target = replace.target.to_magnitudes();
    let ni_err = replace
        .morphed
        .as_slice()
        .iter()
        .zip(&target)
        .map(|(c, t)| (c.norm() - t).abs() / t)
        .fold(0.0, f64::max);
    out.push(MetricReport::at_most("ni", "max_rel_magnitude_error", ni_err, 1e-9));

    let ratios: Vec<f64> = multiply
        .morphed
        .as_slice()
        .iter()
        .zip(&target)
        .map(|(c, t)| (c.norm() / t).ln())
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64;
    out.push(
        MetricReport::at_least("nm", "log_magnitude_ratio_variance", var, 0.01)
            .with_note("variance of ln(|morphed| / target)"),
    );
    Ok(out)
}

fn determinism() -> Result<Vec<MetricReport>> {
    let x = gen_signal(SignalKind::ClickPlusHiss, CORPUS_SECS, SAMPLE_RATE, 3)?;
    let mut out = Vec::new();
    for mode in Mode::ALL {
        let cfg = config(2.0, mode).with_seed(17);
        let a = time_stretch(&x, &cfg)?;
        let b = time_stretch(&x, &cfg)?;
        let mismatches = if a.len() == b.len() {
            a.samples()
                .iter()
                .zip(b.samples())
                .filter(|(p, q)| p.to_bits() != q.to_bits())
                .count()
        } else {
            a.len().max(b.len())
        };
        out.push(MetricReport::at_most(mode.as_str(), "bit_mismatches", mismatches as f64, 0.0));
    }
    Ok(out)
}

fn excitation_statistics() -> Result<Vec<MetricReport>> {
    let e = generate_excitation(1_000_000, 0, SAMPLE_RATE)?;
    let n = e.len() as f64;
    let mean = e.samples().iter().sum::<f64>() / n;
    let var = e.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(vec![
        MetricReport::at_most("excitation", "abs_mean", mean.abs(), 0.005),
        MetricReport::within("excitation", "variance", var, 1.0, 0.01),
    ])
}
