//! WAV input/output for the 16 kHz mono 16-bit PCM subset this toolkit
//! accepts. Backed by `hound`; anything outside the subset is rejected,
//! never resampled or converted.

use std::path::Path;

use crate::dsp::{AudioSignal, CANONICAL_SAMPLE_RATE};
use crate::error::{Error, Result};

fn wav_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Wav {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

/// Read a 16 kHz mono 16-bit PCM WAV file into an [`AudioSignal`].
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(wav_err(
            path,
            format!("expected mono, got {} channels", spec.channels),
        ));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(wav_err(
            path,
            format!(
                "expected 16-bit signed PCM, got {:?} at {} bits",
                spec.sample_format, spec.bits_per_sample
            ),
        ));
    }
    if spec.sample_rate != CANONICAL_SAMPLE_RATE {
        return Err(Error::SampleRate {
            got: spec.sample_rate,
            expected: CANONICAL_SAMPLE_RATE,
        });
    }
    let samples: std::result::Result<Vec<i16>, _> = reader.samples::<i16>().collect();
    let samples = samples.map_err(|e| wav_err(path, e.to_string()))?;
    AudioSignal::new(
        samples.into_iter().map(|s| s as f64 / 32768.0).collect(),
        CANONICAL_SAMPLE_RATE,
    )
}

/// Write samples (clamped to [-1, 1]) as a 16 kHz mono 16-bit PCM WAV.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: CANONICAL_SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer =
        hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e.to_string()))?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer
            .write_sample(v)
            .map_err(|e| wav_err(path, e.to_string()))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e.to_string()))
}
