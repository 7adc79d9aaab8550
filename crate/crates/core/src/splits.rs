//! Deterministic speaker-dependent (SD) and speaker-independent (SI)
//! split generation.
//!
//! SD: a seeded uniform shuffle of all utterances, 80% train pool / 20%
//! test. SI: 3 uniformly sampled held-out speakers per dialect present in
//! the corpus; all of their utterances form the test set. Validation is a
//! seeded 90/10 carve of the train pool in both modes.
//!
//! Every random choice goes through the pinned generator in [`crate::rng`],
//! so identical `(records, seed, mode)` inputs give byte-identical
//! serialized splits. Serialized splits keep their id arrays sorted, which
//! makes the JSON canonical and diffable. Default experiment seeds are
//! [`DEFAULT_SEEDS`]; the seed is recorded in the split and in every
//! downstream report.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Dialect, UtteranceRecord};
use crate::error::{Error, Result};
use crate::rng::Xoshiro256pp;

/// Seeds used when an experiment does not specify its own.
pub const DEFAULT_SEEDS: [u64; 3] = [11, 22, 33];

pub const DEFAULT_HOLDOUT_PER_DIALECT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitMode {
    SD,
    SI,
}

impl std::fmt::Display for SplitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitMode::SD => "SD",
            SplitMode::SI => "SI",
        })
    }
}

impl std::str::FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SD" | "sd" => Ok(SplitMode::SD),
            "SI" | "si" => Ok(SplitMode::SI),
            other => Err(Error::InvalidParam(format!(
                "unknown split mode `{other}` (expected SD or SI)"
            ))),
        }
    }
}

/// A deterministic partition of the manifest into train/validation/test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub name: String,
    pub seed: u64,
    pub mode: SplitMode,
    /// Sorted utt_ids.
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Sorted speaker ids; empty for SD splits.
    pub held_out_speakers: Vec<String>,
}

impl SplitSpec {
    /// Canonical JSON form: sorted id arrays, stable field order, pretty
    /// printed for diffing.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Check the structural invariants against the manifest the split was
    /// generated from: pairwise disjointness, full coverage, and (for SI)
    /// speaker disjointness of test vs train ∪ val.
    pub fn validate_against(&self, records: &[UtteranceRecord]) -> Result<()> {
        let all: HashSet<&str> = records.iter().map(|r| r.utt_id.as_str()).collect();
        let train: HashSet<&str> = self.train_ids.iter().map(|s| s.as_str()).collect();
        let val: HashSet<&str> = self.val_ids.iter().map(|s| s.as_str()).collect();
        let test: HashSet<&str> = self.test_ids.iter().map(|s| s.as_str()).collect();
        for (a, b, what) in [
            (&train, &val, "train/val"),
            (&train, &test, "train/test"),
            (&val, &test, "val/test"),
        ] {
            if a.intersection(b).next().is_some() {
                return Err(Error::InvalidParam(format!("{what} sets overlap")));
            }
        }
        let covered = train.len() + val.len() + test.len();
        if covered != all.len()
            || !train.is_subset(&all)
            || !val.is_subset(&all)
            || !test.is_subset(&all)
        {
            return Err(Error::InvalidParam(
                "split does not exactly cover the manifest".into(),
            ));
        }
        if self.mode == SplitMode::SI {
            let speaker_of: HashMap<&str, &str> = records
                .iter()
                .map(|r| (r.utt_id.as_str(), r.speaker_id.as_str()))
                .collect();
            let test_speakers: HashSet<&str> =
                test.iter().map(|u| speaker_of[u]).collect();
            for u in train.iter().chain(val.iter()) {
                if test_speakers.contains(speaker_of[u]) {
                    return Err(Error::InvalidParam(format!(
                        "speaker `{}` appears in both test and train/val",
                        speaker_of[u]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn sorted(mut ids: Vec<String>) -> Vec<String> {
    ids.sort_unstable();
    ids
}

/// Speaker-dependent split: seeded uniform shuffle, first 80% of the
/// utterances form the train pool (returned in `train_ids`, validation
/// empty), the rest the test set.
pub fn make_sd_split(records: &[UtteranceRecord], seed: u64) -> Result<SplitSpec> {
    if records.len() < 5 {
        return Err(Error::TooFewRecords {
            got: records.len(),
            needed: 5,
        });
    }
    let mut ids: Vec<String> = records.iter().map(|r| r.utt_id.clone()).collect();
    Xoshiro256pp::seed_from_u64(seed).shuffle(&mut ids);
    let n_train = records.len() * 8 / 10;
    let test = ids.split_off(n_train);
    Ok(SplitSpec {
        name: format!("sd_seed{seed}"),
        seed,
        mode: SplitMode::SD,
        train_ids: sorted(ids),
        val_ids: Vec::new(),
        test_ids: sorted(test),
        held_out_speakers: Vec::new(),
    })
}

/// Speaker-independent split: uniformly sample `holdout_per_dialect`
/// speakers from each dialect present in the corpus (seeded); all of their
/// utterances form the test set, everything else the train pool
/// (validation empty). A dialect without enough speakers is an error
/// naming the dialect.
pub fn make_si_split(
    records: &[UtteranceRecord],
    seed: u64,
    holdout_per_dialect: usize,
) -> Result<SplitSpec> {
    if holdout_per_dialect == 0 {
        return Err(Error::InvalidParam("holdout_per_dialect must be ≥ 1".into()));
    }
    let mut by_dialect: BTreeMap<Dialect, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        by_dialect
            .entry(r.dialect)
            .or_default()
            .insert(r.speaker_id.as_str());
    }
    let mut rng = Xoshiro256pp::seed_from_u64(seed);
    let mut held_out: BTreeSet<String> = BTreeSet::new();
    // fixed dialect order so the sampling sequence is reproducible
    for &dialect in &Dialect::ALL {
        let Some(speakers) = by_dialect.get(&dialect) else {
            continue;
        };
        if speakers.len() <= holdout_per_dialect {
            return Err(Error::TooFewSpeakers {
                dialect: dialect.to_string(),
                speakers: speakers.len(),
                needed: holdout_per_dialect,
            });
        }
        let mut pool: Vec<&str> = speakers.iter().copied().collect();
        rng.shuffle(&mut pool);
        for s in &pool[..holdout_per_dialect] {
            held_out.insert(s.to_string());
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in records {
        if held_out.contains(&r.speaker_id) {
            test.push(r.utt_id.clone());
        } else {
            train.push(r.utt_id.clone());
        }
    }
    Ok(SplitSpec {
        name: format!("si_seed{seed}"),
        seed,
        mode: SplitMode::SI,
        train_ids: sorted(train),
        val_ids: Vec::new(),
        test_ids: sorted(test),
        held_out_speakers: held_out.into_iter().collect(),
    })
}

/// Seeded 90/10 partition of a train pool into train and validation ids.
pub fn make_val_split(train_pool: &[String], seed: u64) -> Result<(Vec<String>, Vec<String>)> {
    if train_pool.len() < 10 {
        return Err(Error::TooFewRecords {
            got: train_pool.len(),
            needed: 10,
        });
    }
    let mut ids: Vec<String> = train_pool.to_vec();
    Xoshiro256pp::seed_from_u64(seed).shuffle(&mut ids);
    let n_train = train_pool.len() * 9 / 10;
    let val = ids.split_off(n_train);
    Ok((sorted(ids), sorted(val)))
}

/// SD or SI split with the validation carve applied: the complete
/// train/val/test partition an experiment trains on.
pub fn build_split(records: &[UtteranceRecord], seed: u64, mode: SplitMode) -> Result<SplitSpec> {
    let mut split = match mode {
        SplitMode::SD => make_sd_split(records, seed)?,
        SplitMode::SI => make_si_split(records, seed, DEFAULT_HOLDOUT_PER_DIALECT)?,
    };
    let (train, val) = make_val_split(&split.train_ids, seed)?;
    split.train_ids = train;
    split.val_ids = val;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Gender, MajorityLanguage, Style};

    fn record(utt: &str, speaker: &str, dialect: Dialect) -> UtteranceRecord {
        UtteranceRecord {
            utt_id: utt.to_string(),
            source: format!("{utt}.wav"),
            speaker_id: speaker.to_string(),
            dialect,
            majority_language: MajorityLanguage::No,
            gender: Gender::F,
            dataset_name: "synth".to_string(),
            style: Style::Read,
            duration_s: 1.0,
        }
    }

    /// n speakers per dialect, m utterances per speaker.
    fn manifest(speakers_per_dialect: usize, utts_per_speaker: usize) -> Vec<UtteranceRecord> {
        let mut records = Vec::new();
        for &d in &Dialect::ALL {
            for s in 0..speakers_per_dialect {
                let speaker = format!("spk_{d}_{s:02}");
                for u in 0..utts_per_speaker {
                    records.push(record(&format!("{d}_{s:02}_{u:03}"), &speaker, d));
                }
            }
        }
        records
    }

    #[test]
    fn sd_split_is_80_20_on_10_records() {
        let records = manifest(1, 3)[..10].to_vec();
        let split = make_sd_split(&records, 1).unwrap();
        assert_eq!(split.train_ids.len(), 8);
        assert_eq!(split.test_ids.len(), 2);
        split.validate_against(&records).unwrap();
    }

    #[test]
    fn sd_split_respects_ratio_within_one_utterance() {
        for n in [5usize, 11, 37, 100, 997] {
            let records: Vec<UtteranceRecord> = (0..n)
                .map(|i| record(&format!("u{i}"), &format!("s{}", i % 7), Dialect::WF))
                .collect();
            let split = make_sd_split(&records, 3).unwrap();
            let test_n = split.test_ids.len() as f64;
            assert!(
                (test_n - 0.2 * n as f64).abs() <= 1.0,
                "n={n} gave test {test_n}"
            );
            assert_eq!(split.train_ids.len() + split.test_ids.len(), n);
        }
    }

    #[test]
    fn sd_split_below_minimum_is_rejected() {
        let records = manifest(1, 1);
        assert!(make_sd_split(&records[..4], 1).is_err());
    }

    #[test]
    fn identical_seed_gives_byte_identical_split() {
        let records = manifest(5, 10);
        let a = build_split(&records, 22, SplitMode::SI).unwrap();
        let b = build_split(&records, 22, SplitMode::SI).unwrap();
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        let c = make_sd_split(&records, 7).unwrap();
        let d = make_sd_split(&records, 7).unwrap();
        assert_eq!(c.to_canonical_json(), d.to_canonical_json());
    }

    #[test]
    fn different_seeds_give_substantially_different_test_sets() {
        let records: Vec<UtteranceRecord> = (0..1000)
            .map(|i| record(&format!("u{i:04}"), &format!("s{}", i % 50), Dialect::EF))
            .collect();
        let splits: Vec<SplitSpec> = [1u64, 2, 3]
            .iter()
            .map(|&s| make_sd_split(&records, s).unwrap())
            .collect();
        for i in 0..splits.len() {
            for j in i + 1..splits.len() {
                let a: HashSet<&String> = splits[i].test_ids.iter().collect();
                let b: HashSet<&String> = splits[j].test_ids.iter().collect();
                let inter = a.intersection(&b).count() as f64;
                let union = a.union(&b).count() as f64;
                assert!(inter / union < 0.5, "seeds too similar: {}", inter / union);
            }
        }
    }

    #[test]
    fn si_split_holds_out_exactly_three_speakers_per_dialect() {
        let records = manifest(5, 4);
        let split = make_si_split(&records, 11, 3).unwrap();
        assert_eq!(split.held_out_speakers.len(), 12);
        for &d in &Dialect::ALL {
            let count = split
                .held_out_speakers
                .iter()
                .filter(|s| s.contains(&format!("_{d}_")))
                .count();
            assert_eq!(count, 3, "dialect {d}");
        }
        split.validate_against(&records).unwrap();
    }

    #[test]
    fn si_split_test_set_is_exactly_the_heldout_utterances() {
        let records = manifest(6, 5);
        let split = make_si_split(&records, 33, 3).unwrap();
        let held: HashSet<&String> = split.held_out_speakers.iter().collect();
        let test: HashSet<&String> = split.test_ids.iter().collect();
        for r in &records {
            let in_test = test.contains(&r.utt_id);
            let is_held = held.contains(&r.speaker_id);
            assert_eq!(in_test, is_held, "utt {}", r.utt_id);
        }
        assert_eq!(split.test_ids.len(), 12 * 5);
    }

    #[test]
    fn si_split_with_too_few_speakers_names_the_dialect() {
        let mut records = manifest(5, 2);
        records.retain(|r| r.dialect != Dialect::SS || r.speaker_id.ends_with("00"));
        // SS now has a single speaker
        match make_si_split(&records, 1, 3) {
            Err(Error::TooFewSpeakers { dialect, .. }) => assert_eq!(dialect, "SS"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn si_split_with_exactly_three_speakers_is_rejected() {
        let records = manifest(3, 2);
        assert!(make_si_split(&records, 1, 3).is_err());
    }

    #[test]
    fn si_split_skips_absent_dialects() {
        let records: Vec<UtteranceRecord> = manifest(5, 2)
            .into_iter()
            .filter(|r| r.dialect == Dialect::WF || r.dialect == Dialect::EF)
            .collect();
        let split = make_si_split(&records, 2, 3).unwrap();
        assert_eq!(split.held_out_speakers.len(), 6);
    }

    #[test]
    fn val_split_is_90_10() {
        let pool: Vec<String> = (0..100).map(|i| format!("u{i}")).collect();
        let (train, val) = make_val_split(&pool, 5).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(val.len(), 10);
        let (train2, val2) = make_val_split(&pool, 5).unwrap();
        assert_eq!(train, train2);
        assert_eq!(val, val2);
    }

    #[test]
    fn val_split_partitions_the_pool() {
        let mut rng = Xoshiro256pp::seed_from_u64(60);
        for _ in 0..20 {
            let n = 10 + rng.below(200);
            let pool: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
            let (train, val) = make_val_split(&pool, rng.next_u64()).unwrap();
            let mut union: Vec<String> = train.iter().chain(val.iter()).cloned().collect();
            union.sort_unstable();
            let mut expected = pool.clone();
            expected.sort_unstable();
            assert_eq!(union, expected);
            let train_set: HashSet<&String> = train.iter().collect();
            assert!(val.iter().all(|v| !train_set.contains(v)));
        }
    }

    #[test]
    fn val_split_rejects_tiny_pools() {
        let pool: Vec<String> = (0..9).map(|i| format!("u{i}")).collect();
        assert!(make_val_split(&pool, 1).is_err());
    }

    #[test]
    fn build_split_covers_the_manifest_in_both_modes() {
        let records = manifest(5, 6);
        for mode in [SplitMode::SD, SplitMode::SI] {
            let split = build_split(&records, 11, mode).unwrap();
            split.validate_against(&records).unwrap();
            assert!(!split.val_ids.is_empty());
            assert_eq!(
                split.train_ids.len() + split.val_ids.len() + split.test_ids.len(),
                records.len()
            );
        }
    }

    #[test]
    fn canonical_json_round_trips() {
        let records = manifest(4, 3);
        let split = build_split(&records, 22, SplitMode::SD).unwrap();
        let json = split.to_canonical_json();
        let back = SplitSpec::from_json(&json).unwrap();
        assert_eq!(split, back);
        assert_eq!(json, back.to_canonical_json());
    }
}
