//! File formats: WAV audio, key-value configuration and onset tables.

mod config;
mod wav;

use std::io::Write;
use std::path::Path;

pub use config::ConfigFile;
pub use wav::{read_wav, write_wav, BitDepth, WavInput};

use crate::error::{Error, Result};
use crate::transients::TransientEvent;

/// Writes `input_sample,output_sample` rows, one per event.
pub fn write_onsets_csv(path: &Path, events: &[TransientEvent], alpha: f64) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "input_sample,output_sample").map_err(io)?;
    for e in events {
        writeln!(f, "{},{}", e.onset, e.stretched_onset(alpha)).map_err(io)?;
    }
    f.flush().map_err(io)
}
