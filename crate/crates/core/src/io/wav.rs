//! WAV reading and writing.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};

/// Output sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Pcm16,
    Pcm24,
    Float32,
}

impl BitDepth {
    fn spec(self, sample_rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            BitDepth::Pcm16 => (16, SampleFormat::Int),
            BitDepth::Pcm24 => (24, SampleFormat::Int),
            BitDepth::Float32 => (32, SampleFormat::Float),
        };
        WavSpec {
            channels: 1,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }

    fn full_scale(self) -> f64 {
        match self {
            BitDepth::Pcm16 => 32768.0,
            BitDepth::Pcm24 => 8_388_608.0,
            BitDepth::Float32 => 1.0,
        }
    }
}

impl std::str::FromStr for BitDepth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "16" => Ok(BitDepth::Pcm16),
            "24" => Ok(BitDepth::Pcm24),
            "32f" | "float" | "float32" => Ok(BitDepth::Float32),
            other => Err(Error::config(format!(
                "unsupported bit depth '{other}', expected 16, 24 or float32"
            ))),
        }
    }
}

/// A decoded file and the encoding it was stored in.
#[derive(Debug, Clone)]
pub struct WavInput {
    pub audio: AudioBuffer,
    pub bit_depth: BitDepth,
    /// Channel count of the file before downmixing.
    pub channels: u16,
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn hound_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => format_err(path, other.to_string()),
    }
}

/// Failures after the file was opened are decoding problems (truncation,
/// bad headers) rather than I/O faults.
fn decode_err(path: &Path, e: hound::Error) -> Error {
    format_err(path, e.to_string())
}

/// Reads a mono or stereo PCM16/PCM24/float32 file. Stereo is averaged to mono.
pub fn read_wav(path: &Path) -> Result<WavInput> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = WavReader::new(std::io::BufReader::new(file)).map_err(|e| decode_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels;
    if !(1..=2).contains(&channels) {
        return Err(format_err(
            path,
            format!("{channels} channels, only mono and stereo are supported"),
        ));
    }
    let bit_depth = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => BitDepth::Pcm16,
        (SampleFormat::Int, 24) => BitDepth::Pcm24,
        (SampleFormat::Float, 32) => BitDepth::Float32,
        (fmt, bits) => {
            return Err(format_err(
                path,
                format!("{bits}-bit {fmt:?} samples, expected PCM16, PCM24 or float32"),
            ))
        }
    };
    let interleaved: Vec<f64> = match bit_depth {
        BitDepth::Float32 => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        _ => {
            let scale = bit_depth.full_scale();
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| decode_err(path, e))?;
    if interleaved.iter().any(|v| !v.is_finite()) {
        return Err(format_err(path, "non-finite sample values"));
    }

    let samples = if channels == 2 {
        log::warn!("{}: stereo input downmixed to mono", path.display());
        interleaved
            .chunks_exact(2)
            .map(|lr| 0.5 * (lr[0] + lr[1]))
            .collect()
    } else {
        interleaved
    };
    let audio = AudioBuffer::new(samples, spec.sample_rate)
        .map_err(|e| format_err(path, e.to_string()))?;
    Ok(WavInput {
        audio,
        bit_depth,
        channels,
    })
}

/// Writes a mono file and returns how many samples were clipped to ±1.
pub fn write_wav(audio: &AudioBuffer, path: &Path, bit_depth: BitDepth) -> Result<usize> {
    let spec = bit_depth.spec(audio.sample_rate());
    let mut writer = WavWriter::create(path, spec).map_err(|e| hound_err(path, e))?;
    let mut clipped = 0usize;
    for &v in audio.samples() {
        let result = match bit_depth {
            BitDepth::Float32 => writer.write_sample(v as f32),
            _ => {
                if v.abs() > 1.0 {
                    clipped += 1;
                }
                let scale = bit_depth.full_scale();
                let q = (v.clamp(-1.0, 1.0) * scale).round().clamp(-scale, scale - 1.0);
                writer.write_sample(q as i32)
            }
        };
        result.map_err(|e| hound_err(path, e))?;
    }
    writer.finalize().map_err(|e| hound_err(path, e))?;
    if clipped > 0 {
        log::warn!("{}: {clipped} samples clipped", path.display());
    }
    Ok(clipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, spec: WavSpec, samples: &[i32]) {
        let mut w = WavWriter::create(path, spec).unwrap();
        for &s in samples {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn pcm16_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_raw(&p, BitDepth::Pcm16.spec(44100), &[32767, -32768, 0, 16384]);
        let r = read_wav(&p).unwrap();
        assert_eq!(r.bit_depth, BitDepth::Pcm16);
        assert_eq!(r.audio.samples(), &[32767.0 / 32768.0, -1.0, 0.0, 0.5]);
    }

    #[test]
    fn pcm24_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_raw(&p, BitDepth::Pcm24.spec(48000), &[8_388_607, -4_194_304]);
        let r = read_wav(&p).unwrap();
        assert_eq!(r.audio.sample_rate(), 48000);
        assert_eq!(r.audio.samples(), &[8_388_607.0 / 8_388_608.0, -0.5]);
    }

    #[test]
    fn stereo_downmix() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = WavSpec {
            channels: 2,
            ..BitDepth::Pcm16.spec(44100)
        };
        write_raw(&p, spec, &[100, 100, -200, -200, 300, 100]);
        let r = read_wav(&p).unwrap();
        assert_eq!(r.channels, 2);
        let s = 1.0 / 32768.0;
        assert_eq!(r.audio.samples(), &[100.0 * s, -200.0 * s, 200.0 * s]);
    }

    #[test]
    fn float_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let v: Vec<f64> = (0..1000).map(|i| ((i as f64 * 0.37).sin() * 1.3) as f32 as f64).collect();
        let a = AudioBuffer::new(v, 22050).unwrap();
        assert_eq!(write_wav(&a, &p, BitDepth::Float32).unwrap(), 0);
        let r = read_wav(&p).unwrap();
        assert_eq!(r.audio, a);
        assert_eq!(r.bit_depth, BitDepth::Float32);
    }

    #[test]
    fn integer_write_clips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.wav");
        let a = AudioBuffer::new(vec![1.5, -2.0, 0.25, 1.0], 44100).unwrap();
        assert_eq!(write_wav(&a, &p, BitDepth::Pcm16).unwrap(), 2);
        let raw: Vec<i16> = WavReader::open(&p).unwrap().into_samples().map(|s| s.unwrap()).collect();
        assert_eq!(raw, vec![32767, -32768, 8192, 32767]);
    }

    #[test]
    fn empty_buffer_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.wav");
        let a = AudioBuffer::silence(0, 44100).unwrap();
        write_wav(&a, &p, BitDepth::Pcm24).unwrap();
        assert!(read_wav(&p).unwrap().audio.is_empty());
    }

    #[test]
    fn malformed_inputs_are_structured_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.wav");
        assert!(matches!(read_wav(&missing), Err(Error::Io { .. })));
        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"RIFF1234WAVEnot really").unwrap();
        assert!(matches!(read_wav(&junk), Err(Error::Format { .. })));
        let p8 = dir.path().join("u8.wav");
        let spec = WavSpec {
            bits_per_sample: 8,
            ..BitDepth::Pcm16.spec(8000)
        };
        let mut w = WavWriter::create(&p8, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        let err = read_wav(&p8).unwrap_err();
        assert!(err.to_string().contains("8-bit"), "{err}");
    }
}
