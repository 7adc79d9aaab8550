//! Utterance-level pooling and per-speaker normalization.
//!
//! Pooling collapses a frames × dims matrix to one fixed-length vector:
//! column-wise mean, population standard deviation, or their concatenation
//! (mean first). Population statistics are used everywhere in this crate.
//!
//! Speaker z-scoring removes per-speaker shift and scale:
//! `x' = (x − μ_speaker)/(σ_speaker + 1e-8)` per dimension. By default the
//! statistics are computed over all of a speaker's utterances; a train-only
//! mode restricts the statistics to a chosen utterance subset. Whether a
//! feature kind gets normalized at all is decided by
//! [`normalization_policy`]: on for filter banks and prosodic features,
//! off for MFCCs and external embeddings, which are fed to the classifier
//! as-is.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};
use crate::fmx;

const ZSCORE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMode {
    Mean,
    Std,
    MeanStd,
}

impl PoolingMode {
    pub const ALL: [PoolingMode; 3] = [PoolingMode::Mean, PoolingMode::Std, PoolingMode::MeanStd];

    pub fn as_str(self) -> &'static str {
        match self {
            PoolingMode::Mean => "mean",
            PoolingMode::Std => "std",
            PoolingMode::MeanStd => "meanstd",
        }
    }
}

impl fmt::Display for PoolingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PoolingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(PoolingMode::Mean),
            "std" => Ok(PoolingMode::Std),
            "meanstd" => Ok(PoolingMode::MeanStd),
            other => Err(Error::InvalidParam(format!(
                "unknown pooling mode `{other}` (expected mean, std, or meanstd)"
            ))),
        }
    }
}

/// A pooled fixed-length utterance vector with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceVector {
    pub utt_id: String,
    pub values: Vec<f64>,
    pub pooling: PoolingMode,
    pub feature_kind: FeatureKind,
}

impl UtteranceVector {
    pub fn dims(&self) -> usize {
        self.values.len()
    }
}

/// Pool a feature matrix into one utterance vector. MEANSTD is the mean
/// vector followed by the std vector (dims doubled).
pub fn pool(matrix: &FeatureMatrix, mode: PoolingMode, utt_id: &str) -> Result<UtteranceVector> {
    let n = matrix.n_frames();
    if n == 0 {
        return Err(Error::InvalidParam(format!(
            "cannot pool empty feature matrix for `{utt_id}`"
        )));
    }
    let dims = matrix.dims();
    let mut mean = vec![0.0; dims];
    for row in matrix.rows_iter() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let compute_std = |mean: &[f64]| -> Vec<f64> {
        let mut var = vec![0.0; dims];
        for row in matrix.rows_iter() {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.into_iter().map(|s| (s / n as f64).sqrt()).collect()
    };
    let values = match mode {
        PoolingMode::Mean => mean,
        PoolingMode::Std => compute_std(&mean),
        PoolingMode::MeanStd => {
            let std = compute_std(&mean);
            let mut v = mean;
            v.extend(std);
            v
        }
    };
    Ok(UtteranceVector {
        utt_id: utt_id.to_string(),
        values,
        pooling: mode,
        feature_kind: matrix.kind,
    })
}

/// Whether a feature kind is speaker-normalized before classification.
pub fn normalization_policy(kind: FeatureKind) -> bool {
    match kind {
        FeatureKind::Fb40 | FeatureKind::Prosody => true,
        FeatureKind::Mfcc13 | FeatureKind::Mfcc39 | FeatureKind::Embedding => false,
    }
}

/// Per-speaker z-score normalization.
///
/// `speaker_of` maps utt_id → speaker_id and must cover every vector.
/// With `stats_subset` set, speaker statistics are computed only over that
/// utterance subset (train-only mode); a speaker with no subset utterances
/// falls back to statistics over all of their utterances. Speakers whose
/// per-dimension σ is 0 (single utterance, or identical vectors) map to
/// the zero vector in those dimensions.
pub fn speaker_zscore(
    vectors: &[UtteranceVector],
    speaker_of: &HashMap<String, String>,
    stats_subset: Option<&HashSet<String>>,
) -> Result<Vec<UtteranceVector>> {
    // group vector indices per speaker
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, v) in vectors.iter().enumerate() {
        let speaker = speaker_of.get(&v.utt_id).ok_or_else(|| {
            Error::InvalidParam(format!("no speaker mapping for utt_id `{}`", v.utt_id))
        })?;
        groups.entry(speaker).or_default().push(i);
    }
    let mut out: Vec<Option<UtteranceVector>> = vec![None; vectors.len()];
    for (speaker, members) in groups {
        let dims = vectors[members[0]].dims();
        for &i in &members {
            if vectors[i].dims() != dims {
                return Err(Error::DimMismatch(format!(
                    "speaker `{speaker}`: vector dims differ ({} vs {dims})",
                    vectors[i].dims()
                )));
            }
        }
        let stat_members: Vec<usize> = match stats_subset {
            Some(subset) => {
                let selected: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&i| subset.contains(&vectors[i].utt_id))
                    .collect();
                if selected.is_empty() {
                    members.clone()
                } else {
                    selected
                }
            }
            None => members.clone(),
        };
        let mut mean = vec![0.0; dims];
        for &i in &stat_members {
            for (m, &v) in mean.iter_mut().zip(&vectors[i].values) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= stat_members.len() as f64;
        }
        let mut var = vec![0.0; dims];
        for &i in &stat_members {
            for ((s, &v), &m) in var.iter_mut().zip(&vectors[i].values).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var
            .into_iter()
            .map(|s| (s / stat_members.len() as f64).sqrt())
            .collect();
        for &i in &members {
            let values: Vec<f64> = vectors[i]
                .values
                .iter()
                .zip(&mean)
                .zip(&std)
                .map(|((&x, &m), &s)| (x - m) / (s + ZSCORE_EPS))
                .collect();
            out[i] = Some(UtteranceVector {
                values,
                ..vectors[i].clone()
            });
        }
    }
    Ok(out.into_iter().map(|v| v.expect("all filled")).collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct PooledIndexEntry {
    utt_id: String,
    file: String,
    pooling: PoolingMode,
    feature_kind: FeatureKind,
}

fn safe_file_stem(utt_id: &str) -> String {
    utt_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Store pooled vectors as 1 × dims FMX files plus an `index.jsonl`
/// mapping utt_id → file, pooling mode, and feature kind.
pub fn write_pooled_set(dir: impl AsRef<Path>, vectors: &[UtteranceVector]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut index = String::new();
    let mut used = HashSet::new();
    for v in vectors {
        let stem = safe_file_stem(&v.utt_id);
        if !used.insert(stem.clone()) {
            return Err(Error::InvalidParam(format!(
                "utt_id `{}` collides with another id after filename sanitization",
                v.utt_id
            )));
        }
        let file = format!("{stem}.fmx");
        let matrix = FeatureMatrix::new(
            1,
            v.dims(),
            v.values.clone(),
            v.feature_kind,
            fmx::DEFAULT_FRAME_SHIFT_S,
        )?;
        fmx::write_fmx_file(dir.join(&file), &matrix)?;
        index.push_str(&serde_json::to_string(&PooledIndexEntry {
            utt_id: v.utt_id.clone(),
            file,
            pooling: v.pooling,
            feature_kind: v.feature_kind,
        })?);
        index.push('\n');
    }
    std::fs::write(dir.join("index.jsonl"), index)?;
    Ok(())
}

/// Load a pooled set written by [`write_pooled_set`], in index order.
pub fn read_pooled_set(dir: impl AsRef<Path>) -> Result<Vec<UtteranceVector>> {
    let dir = dir.as_ref();
    let index = std::fs::read_to_string(dir.join("index.jsonl"))?;
    let mut out = Vec::new();
    for (lineno, line) in index.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: PooledIndexEntry = serde_json::from_str(line).map_err(|e| Error::Manifest {
            line: lineno + 1,
            msg: format!("pooled index: {e}"),
        })?;
        let matrix = fmx::read_fmx_file(dir.join(&entry.file), entry.feature_kind)?;
        if matrix.n_frames() != 1 {
            return Err(Error::DimMismatch(format!(
                "pooled vector `{}` has {} rows, expected 1",
                entry.utt_id,
                matrix.n_frames()
            )));
        }
        out.push(UtteranceVector {
            utt_id: entry.utt_id,
            values: matrix.values().to_vec(),
            pooling: entry.pooling,
            feature_kind: entry.feature_kind,
        });
    }
    Ok(out)
}
