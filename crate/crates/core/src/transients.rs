//! Transient events: detection on the transient component and repositioning
//! at scaled times without stretching the events themselves.

use std::f64::consts::PI;

use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};

/// Detection constants, all in seconds except the thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientDetectParams {
    /// Energy envelope frame length.
    pub frame_secs: f64,
    pub hop_secs: f64,
    /// Segment start relative to the onset.
    pub pre_roll_secs: f64,
    pub max_event_secs: f64,
    /// Raised-cosine fade at both segment edges.
    pub fade_secs: f64,
    pub min_gap_secs: f64,
    /// Onset threshold as a multiple of the envelope median.
    pub threshold_factor: f64,
    /// Absolute lower bound on the onset threshold (mean-square).
    pub threshold_floor: f64,
}

impl Default for TransientDetectParams {
    fn default() -> Self {
        Self {
            frame_secs: 0.010,
            hop_secs: 0.001,
            pre_roll_secs: 0.005,
            max_event_secs: 0.100,
            fade_secs: 0.005,
            min_gap_secs: 0.020,
            threshold_factor: 4.0,
            threshold_floor: 1e-7,
        }
    }
}

impl TransientDetectParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frame_secs", self.frame_secs),
            ("hop_secs", self.hop_secs),
            ("max_event_secs", self.max_event_secs),
            ("threshold_factor", self.threshold_factor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("pre_roll_secs", self.pre_roll_secs),
            ("fade_secs", self.fade_secs),
            ("min_gap_secs", self.min_gap_secs),
            ("threshold_floor", self.threshold_floor),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// One extracted event.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientEvent {
    /// Onset sample in the input.
    pub onset: usize,
    /// First input sample covered by `segment`.
    pub start: usize,
    /// Faded copy of the input over the event span.
    pub segment: Vec<f64>,
    /// Offset of the onset inside `segment`.
    pub anchor: usize,
}

impl TransientEvent {
    /// Where the onset lands in a signal stretched by `alpha`.
    pub fn stretched_onset(&self, alpha: f64) -> usize {
        (alpha * self.onset as f64).round() as usize
    }

    pub fn end(&self) -> usize {
        self.start + self.segment.len()
    }
}

fn secs_to_samples(secs: f64, sample_rate: u32) -> usize {
    (secs * sample_rate as f64).round() as usize
}

/// Mean-square envelope on frames centred at `j * hop`.
fn energy_envelope(x: &[f64], frame: usize, hop: usize) -> Vec<f64> {
    let half = frame / 2;
    (0..x.len().div_ceil(hop))
        .map(|j| {
            let c = j * hop;
            let lo = c.saturating_sub(half);
            let hi = (c + frame - half).min(x.len());
            x[lo..hi].iter().map(|v| v * v).sum::<f64>() / frame as f64
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Finds events in the transient component.
///
/// An onset is an upward crossing of `max(median * factor, floor)` by the
/// energy envelope, refined to the first sample reaching a tenth of the local
/// peak amplitude. The event lasts until the envelope drops below half the
/// onset threshold or `max_event_secs` pass.
pub fn detect_events(
    transient: &AudioBuffer,
    params: &TransientDetectParams,
) -> Result<Vec<TransientEvent>> {
    params.validate()?;
    let x = transient.samples();
    let sr = transient.sample_rate();
    if x.is_empty() {
        return Ok(Vec::new());
    }
    let frame = secs_to_samples(params.frame_secs, sr).max(1);
    let hop = secs_to_samples(params.hop_secs, sr).max(1);
    let pre_roll = secs_to_samples(params.pre_roll_secs, sr);
    let max_len = secs_to_samples(params.max_event_secs, sr).max(1);
    let fade = secs_to_samples(params.fade_secs, sr);
    let min_gap = secs_to_samples(params.min_gap_secs, sr);

    let env = energy_envelope(x, frame, hop);
    let on = (median(&env) * params.threshold_factor).max(params.threshold_floor);
    let off = on / 2.0;

    let mut events: Vec<TransientEvent> = Vec::new();
    let mut j = 0;
    let mut below = true;
    while j < env.len() {
        if env[j] <= on {
            below = true;
            j += 1;
            continue;
        }
        if !below {
            j += 1;
            continue;
        }
        below = false;
        let onset = refine_onset(x, j * hop, frame);
        let prev_end = events.last().map_or(0, |e| e.end());
        let too_close = events
            .last()
            .is_some_and(|e| onset < e.onset + min_gap || onset < prev_end);
        // Find where the envelope decays regardless, so the scan resumes past
        // this burst.
        let mut k = j + 1;
        while k < env.len() && env[k] >= off && k * hop < onset + max_len {
            k += 1;
        }
        if !too_close {
            let start = onset.saturating_sub(pre_roll).max(prev_end);
            let end = (k * hop + frame / 2).min(onset + max_len).min(x.len()).max(onset + 1);
            let mut segment = x[start..end].to_vec();
            apply_fades(&mut segment, fade);
            events.push(TransientEvent {
                onset,
                start,
                segment,
                anchor: onset - start,
            });
        }
        j = k;
    }
    Ok(events)
}

fn refine_onset(x: &[f64], centre: usize, frame: usize) -> usize {
    let lo = centre.saturating_sub(frame / 2);
    let hi = (centre + frame + frame / 2).min(x.len());
    let peak = x[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x[lo..hi]
        .iter()
        .position(|v| v.abs() >= 0.1 * peak)
        .map_or(centre.min(x.len() - 1), |p| lo + p)
}

fn apply_fades(segment: &mut [f64], fade: usize) {
    let n = segment.len();
    let fade = fade.min(n / 2);
    for i in 0..fade {
        let g = 0.5 - 0.5 * (PI * (i as f64 + 0.5) / fade as f64).cos();
        segment[i] *= g;
        segment[n - 1 - i] *= g;
    }
}

/// Sums every event into a zero buffer so its onset lands on
/// `round(alpha * onset)`. The buffer grows past `out_length` if an event
/// would otherwise be cut off.
pub fn reposition_events(
    events: &[TransientEvent],
    alpha: f64,
    out_length: usize,
    sample_rate: u32,
) -> Result<AudioBuffer> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::config(format!("alpha must be positive, got {alpha}")));
    }
    let place = |e: &TransientEvent| e.stretched_onset(alpha);
    let needed = events
        .iter()
        .map(|e| place(e).saturating_sub(e.anchor) + e.segment.len())
        .max()
        .unwrap_or(0);
    let mut out = vec![0.0; out_length.max(needed)];
    for e in events {
        let target = place(e);
        // an anchor larger than the target clips the head of the segment
        let skip = e.anchor.saturating_sub(target);
        let dest = target + skip - e.anchor;
        for (o, s) in out[dest..].iter_mut().zip(&e.segment[skip..]) {
            *o += s;
        }
    }
    AudioBuffer::new(out, sample_rate)
}
