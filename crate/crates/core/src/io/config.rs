//! Flat `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Recognised keys:
//!
//! ```text
//! alpha, mode, seed
//! stn.stage1.window, stn.stage1.hop, stn.stage1.beta_upper, stn.stage1.beta_lower,
//! stn.stage1.time_median, stn.stage1.freq_median   (same for stn.stage2)
//! noise.window, noise.hop, noise.floor_db
//! pv.window, pv.hop
//! transient.frame_secs, transient.hop_secs, transient.pre_roll_secs,
//! transient.max_event_secs, transient.fade_secs, transient.min_gap_secs,
//! transient.threshold_factor, transient.threshold_floor
//! ```
//!
//! Window sizes are in samples at the file's own rate. Changing a stage's
//! window or hop recomputes its median lengths unless those are set too.

use std::path::Path;
use std::str::FromStr;

use crate::dsp::StftParams;
use crate::error::{Error, Result};
use crate::pipeline::StretchConfig;
use crate::stn::StageConfig;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    entries: Vec<(String, String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "line {}: expected key = value, got '{line}'",
                    i + 1
                )));
            };
            entries.push((k.trim().to_string(), v.trim().to_string(), i + 1));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Value of `key`, the last one winning if repeated.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    /// Overrides fields of `config`. Unknown keys are an error.
    pub fn apply(&self, config: &mut StretchConfig, sample_rate: u32) -> Result<()> {
        let mut stage_touched = [false; 2];
        let mut median_set = [[false; 2]; 2];
        for (key, value, line) in &self.entries {
            let at = |e: Error| match e {
                Error::Config(msg) => Error::config(format!("line {line}: {key}: {msg}")),
                other => other,
            };
            let t = &mut config.transient;
            match key.as_str() {
                "alpha" => config.alpha = parse(value).map_err(at)?,
                "mode" => config.mode = value.parse().map_err(at)?,
                "seed" => config.seed = parse(value).map_err(at)?,
                "noise.window" => config.noise.window_size = parse(value).map_err(at)?,
                "noise.hop" => config.noise.hop_size = parse(value).map_err(at)?,
                "noise.floor_db" => config.noise.floor_db = parse(value).map_err(at)?,
                "pv.window" => config.pv.window_size = parse(value).map_err(at)?,
                "pv.hop" => config.pv.synthesis_hop = parse(value).map_err(at)?,
                "transient.frame_secs" => t.frame_secs = parse(value).map_err(at)?,
                "transient.hop_secs" => t.hop_secs = parse(value).map_err(at)?,
                "transient.pre_roll_secs" => t.pre_roll_secs = parse(value).map_err(at)?,
                "transient.max_event_secs" => t.max_event_secs = parse(value).map_err(at)?,
                "transient.fade_secs" => t.fade_secs = parse(value).map_err(at)?,
                "transient.min_gap_secs" => t.min_gap_secs = parse(value).map_err(at)?,
                "transient.threshold_factor" => t.threshold_factor = parse(value).map_err(at)?,
                "transient.threshold_floor" => t.threshold_floor = parse(value).map_err(at)?,
                other => {
                    let Some((idx, field)) = stage_key(other) else {
                        return Err(Error::config(format!("line {line}: unknown key '{other}'")));
                    };
                    let stage = if idx == 0 {
                        &mut config.stn.stage1
                    } else {
                        &mut config.stn.stage2
                    };
                    match field {
                        "window" => {
                            stage.stft.window_size = parse(value).map_err(at)?;
                            stage_touched[idx] = true;
                        }
                        "hop" => {
                            stage.stft.hop_size = parse(value).map_err(at)?;
                            stage_touched[idx] = true;
                        }
                        "beta_upper" => stage.thresholds.beta_upper = parse(value).map_err(at)?,
                        "beta_lower" => stage.thresholds.beta_lower = parse(value).map_err(at)?,
                        "time_median" => {
                            stage.time_median_len = parse(value).map_err(at)?;
                            median_set[idx][0] = true;
                        }
                        "freq_median" => {
                            stage.freq_median_len = parse(value).map_err(at)?;
                            median_set[idx][1] = true;
                        }
                        _ => {
                            return Err(Error::config(format!(
                                "line {line}: unknown key '{other}'"
                            )))
                        }
                    }
                }
            }
        }
        for (idx, stage) in [&mut config.stn.stage1, &mut config.stn.stage2]
            .into_iter()
            .enumerate()
        {
            if !stage_touched[idx] {
                continue;
            }
            let stft = StftParams::new(stage.stft.window_size, stage.stft.hop_size, stage.stft.window_kind)?;
            let spans = StageConfig::with_spans(stft, stage.thresholds, sample_rate);
            if !median_set[idx][0] {
                stage.time_median_len = spans.time_median_len;
            }
            if !median_set[idx][1] {
                stage.freq_median_len = spans.freq_median_len;
            }
        }
        Ok(())
    }
}

fn stage_key(key: &str) -> Option<(usize, &str)> {
    if let Some(f) = key.strip_prefix("stn.stage1.") {
        Some((0, f))
    } else {
        key.strip_prefix("stn.stage2.").map(|f| (1, f))
    }
}

fn parse<T: FromStr>(value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value '{value}'")))
}
