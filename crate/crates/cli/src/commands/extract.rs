//! `nsdid extract` — one FMX file per utterance plus `index.jsonl`.
//!
//! Extraction is idempotent: the index records a SHA-256 over the source
//! bytes and the feature kind, and utterances whose hash and output file
//! are already in place are skipped on re-runs.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nsdid_core::corpus::{parse_manifest, UtteranceRecord};
use nsdid_core::dsp::FeatureKind;
use nsdid_core::{dsp, fmx, prosody, wav, Error};

use crate::{CmdResult, StageExt};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexEntry {
    pub utt_id: String,
    pub file: String,
    pub feature_kind: FeatureKind,
    pub rows: usize,
    pub cols: usize,
    pub source_hash: String,
}

pub fn read_index(path: &Path) -> Result<Vec<IndexEntry>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(line).map_err(|e| Error::Manifest {
            line: idx + 1,
            msg: format!("feature index: {e}"),
        })?);
    }
    Ok(entries)
}

fn write_index(path: &Path, entries: &[IndexEntry]) -> Result<(), Error> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn safe_file_stem(utt_id: &str) -> String {
    utt_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn source_hash(bytes: &[u8], kind: FeatureKind) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.update(kind.as_str().as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn extract_one(
    record: &UtteranceRecord,
    kind: FeatureKind,
    out_dir: &Path,
    existing: &HashMap<String, IndexEntry>,
) -> Result<(IndexEntry, bool), Error> {
    let source_is_fmx = record.is_feature_backed();
    match kind {
        FeatureKind::Embedding => {
            if !source_is_fmx {
                return Err(Error::InvalidParam(format!(
                    "utt_id `{}`: EMBEDDING extraction needs a feature-backed record, got audio source `{}`",
                    record.utt_id, record.source
                )));
            }
        }
        _ => {
            if source_is_fmx {
                return Err(Error::InvalidParam(format!(
                    "utt_id `{}`: {kind} extraction needs an audio source, got feature file `{}`",
                    record.utt_id, record.source
                )));
            }
        }
    }
    let bytes = std::fs::read(&record.source).map_err(|e| Error::Wav {
        path: record.source.clone(),
        msg: e.to_string(),
    })?;
    let hash = source_hash(&bytes, kind);
    let file = format!("{}.fmx", safe_file_stem(&record.utt_id));
    let out_path = out_dir.join(&file);
    if let Some(entry) = existing.get(&record.utt_id) {
        if entry.source_hash == hash && entry.feature_kind == kind && out_path.exists() {
            return Ok((entry.clone(), false));
        }
    }
    let matrix = match kind {
        FeatureKind::Embedding => fmx::read_fmx(&mut bytes.as_slice(), FeatureKind::Embedding)?,
        FeatureKind::Fb40 => dsp::log_mel_fb(&wav::read_wav(&record.source)?)?,
        FeatureKind::Mfcc39 => dsp::mfcc39(&wav::read_wav(&record.source)?)?,
        FeatureKind::Mfcc13 => dsp::mfcc(&wav::read_wav(&record.source)?)?,
        FeatureKind::Prosody => prosody::prosodic_lld(&wav::read_wav(&record.source)?)?,
    };
    fmx::write_fmx_file(&out_path, &matrix)?;
    Ok((
        IndexEntry {
            utt_id: record.utt_id.clone(),
            file,
            feature_kind: kind,
            rows: matrix.n_frames(),
            cols: matrix.dims(),
            source_hash: hash,
        },
        true,
    ))
}

pub fn run(manifest_path: &Path, kind: FeatureKind, out_dir: &Path) -> CmdResult<()> {
    let text = std::fs::read_to_string(manifest_path).stage("load_manifest")?;
    let records = parse_manifest(&text).stage("load_manifest")?;
    std::fs::create_dir_all(out_dir).stage("extract")?;
    let index_path = out_dir.join("index.jsonl");
    let existing: HashMap<String, IndexEntry> = if index_path.exists() {
        read_index(&index_path)
            .stage("extract")?
            .into_iter()
            .map(|e| (e.utt_id.clone(), e))
            .collect()
    } else {
        HashMap::new()
    };
    let results: Vec<Result<(IndexEntry, bool), Error>> = super::worker_pool().install(|| {
        records
            .par_iter()
            .map(|r| extract_one(r, kind, out_dir, &existing))
            .collect()
    });
    let mut entries = Vec::with_capacity(results.len());
    let mut written = 0usize;
    let mut skipped = 0usize;
    for result in results {
        let (entry, was_written) = result.stage("extract")?;
        if was_written {
            written += 1;
        } else {
            skipped += 1;
        }
        entries.push(entry);
    }
    write_index(&index_path, &entries).stage("extract")?;
    println!(
        "extract: kind {kind}, wrote {written}, skipped {skipped}, index {}",
        index_path.display()
    );
    Ok(())
}
