//! Corpus manifest schema, parsing, and dataset statistics.
//!
//! A manifest is a JSON-Lines file, one utterance per line. The combined
//! corpus is assembled from several heterogeneous datasets, so a
//! line-oriented format that can be streamed and concatenated is used
//! throughout. Field names are part of the external interface:
//! `utt_id`, `source`, `speaker_id`, `dialect`, `majority_language`,
//! `gender`, `dataset_name`, `style`, `duration_s`.
//!
//! `source` points either at a 16 kHz mono PCM WAV file or at a precomputed
//! `.fmx` feature file; downstream stages dispatch on the extension.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four North Sámi dialect groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dialect {
    /// Western Finnmark
    WF,
    /// Eastern Finnmark
    EF,
    /// Sea Sámi
    SS,
    /// Torne Sámi
    TS,
}

impl Dialect {
    pub const ALL: [Dialect; 4] = [Dialect::WF, Dialect::EF, Dialect::SS, Dialect::TS];

    pub fn index(self) -> usize {
        match self {
            Dialect::WF => 0,
            Dialect::EF => 1,
            Dialect::SS => 2,
            Dialect::TS => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Dialect> {
        Dialect::ALL.get(i).copied()
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dialect::WF => "WF",
            Dialect::EF => "EF",
            Dialect::SS => "SS",
            Dialect::TS => "TS",
        };
        f.write_str(s)
    }
}

/// Majority state language of the speaker's region (their country of origin;
/// the two notions coincide in this corpus).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MajorityLanguage {
    Fi,
    No,
    Sv,
}

impl MajorityLanguage {
    pub const ALL: [MajorityLanguage; 3] = [
        MajorityLanguage::Fi,
        MajorityLanguage::No,
        MajorityLanguage::Sv,
    ];

    pub fn index(self) -> usize {
        match self {
            MajorityLanguage::Fi => 0,
            MajorityLanguage::No => 1,
            MajorityLanguage::Sv => 2,
        }
    }

    /// ISO-639-1 code, as used in LID rankings.
    pub fn code(self) -> &'static str {
        match self {
            MajorityLanguage::Fi => "fi",
            MajorityLanguage::No => "no",
            MajorityLanguage::Sv => "sv",
        }
    }

    /// Full language name, for table rendering.
    pub fn name(self) -> &'static str {
        match self {
            MajorityLanguage::Fi => "Finnish",
            MajorityLanguage::No => "Norwegian",
            MajorityLanguage::Sv => "Swedish",
        }
    }
}

impl fmt::Display for MajorityLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    F,
    M,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::F, Gender::M];

    pub fn index(self) -> usize {
        match self {
            Gender::F => 0,
            Gender::M => 1,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::F => "f",
            Gender::M => "m",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Spontaneous,
    Read,
}

/// One audio or feature item with its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub utt_id: String,
    pub source: String,
    pub speaker_id: String,
    pub dialect: Dialect,
    pub majority_language: MajorityLanguage,
    pub gender: Gender,
    pub dataset_name: String,
    pub style: Style,
    pub duration_s: f64,
}

impl UtteranceRecord {
    /// Whether `source` names a precomputed feature file rather than audio.
    pub fn is_feature_backed(&self) -> bool {
        self.source.to_ascii_lowercase().ends_with(".fmx")
    }
}

/// Parse a JSON-Lines manifest. Empty lines are skipped; records are
/// returned in file order. Errors carry the 1-based line number.
pub fn parse_manifest(text: &str) -> Result<Vec<UtteranceRecord>> {
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut de = serde_json::Deserializer::from_str(line);
        let record: UtteranceRecord =
            serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Manifest {
                line: line_no,
                msg: format!("{}: {}", e.path(), e.inner()),
            })?;
        if !record.duration_s.is_finite() || record.duration_s < 0.0 {
            return Err(Error::Manifest {
                line: line_no,
                msg: format!(
                    "duration_s: must be a nonnegative real, got {}",
                    record.duration_s
                ),
            });
        }
        if seen.insert(record.utt_id.clone(), line_no).is_some() {
            return Err(Error::DuplicateUttId {
                utt_id: record.utt_id,
                line: line_no,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Serialize records to JSON-Lines, one object per line, in input order.
pub fn serialize_manifest(records: &[UtteranceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Utterance counts per (dialect, majority language, gender) cell.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    counts: [[[u64; 2]; 3]; 4],
}

/// Tally records into a [`CorpusStats`] grid.
pub fn corpus_stats(records: &[UtteranceRecord]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for r in records {
        stats.counts[r.dialect.index()][r.majority_language.index()][r.gender.index()] += 1;
    }
    stats
}

impl CorpusStats {
    pub fn cell(&self, dialect: Dialect, language: MajorityLanguage, gender: Gender) -> u64 {
        self.counts[dialect.index()][language.index()][gender.index()]
    }

    pub fn dialect_total(&self, dialect: Dialect) -> u64 {
        self.counts[dialect.index()].iter().flatten().sum()
    }

    pub fn language_total(&self, language: MajorityLanguage) -> u64 {
        Dialect::ALL
            .iter()
            .map(|&d| {
                self.counts[d.index()][language.index()]
                    .iter()
                    .sum::<u64>()
            })
            .sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().flatten().flatten().sum()
    }

    /// Render the dialect × language × gender grid with totals as aligned
    /// text.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}{:>10}\n",
            "dialect", "fi/f", "fi/m", "no/f", "no/m", "sv/f", "sv/m", "total"
        ));
        for &d in &Dialect::ALL {
            out.push_str(&format!("{:<8}", d.to_string()));
            for &l in &MajorityLanguage::ALL {
                for &g in &Gender::ALL {
                    out.push_str(&format!("{:>9}", self.cell(d, l, g)));
                }
            }
            out.push_str(&format!("{:>10}\n", self.dialect_total(d)));
        }
        out.push_str(&format!("{:<8}", "total"));
        for &l in &MajorityLanguage::ALL {
            let by_gender: Vec<u64> = Gender::ALL
                .iter()
                .map(|&g| {
                    Dialect::ALL
                        .iter()
                        .map(|&d| self.cell(d, l, g))
                        .sum::<u64>()
                })
                .collect();
            for v in by_gender {
                out.push_str(&format!("{:>9}", v));
            }
        }
        out.push_str(&format!("{:>10}\n", self.grand_total()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256pp;

    fn sample_line(utt: &str, speaker: &str, dialect: &str) -> String {
        format!(
            r#"{{"utt_id":"{utt}","source":"audio/{utt}.wav","speaker_id":"{speaker}","dialect":"{dialect}","majority_language":"no","gender":"f","dataset_name":"demo","style":"spontaneous","duration_s":2.5}}"#
        )
    }

    #[test]
    fn empty_manifest_gives_empty_list() {
        assert!(parse_manifest("").unwrap().is_empty());
        assert!(parse_manifest("\n\n  \n").unwrap().is_empty());
    }

    #[test]
    fn valid_lines_parse_in_order() {
        let text = format!(
            "{}\n{}\n{}\n",
            sample_line("u1", "spk_a", "WF"),
            sample_line("u2", "spk_a", "EF"),
            sample_line("u3", "spk_b", "TS"),
        );
        let records = parse_manifest(&text).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].utt_id, "u1");
        assert_eq!(records[0].source, "audio/u1.wav");
        assert_eq!(records[0].speaker_id, "spk_a");
        assert_eq!(records[0].dialect, Dialect::WF);
        assert_eq!(records[0].majority_language, MajorityLanguage::No);
        assert_eq!(records[0].gender, Gender::F);
        assert_eq!(records[0].dataset_name, "demo");
        assert_eq!(records[0].style, Style::Spontaneous);
        assert_eq!(records[0].duration_s, 2.5);
        assert_eq!(records[1].dialect, Dialect::EF);
        assert_eq!(records[2].utt_id, "u3");
    }

    #[test]
    fn unknown_dialect_names_field_and_value() {
        let text = sample_line("u1", "s", "XX");
        let err = parse_manifest(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
        assert!(msg.contains("dialect"), "{msg}");
        assert!(msg.contains("XX"), "{msg}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{}\nnot json at all\n", sample_line("u1", "s", "WF"));
        let err = parse_manifest(&text).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn duplicate_utt_id_is_rejected_by_name() {
        let text = format!(
            "{}\n{}\n",
            sample_line("dup", "s", "WF"),
            sample_line("dup", "s", "EF")
        );
        let err = parse_manifest(&text).unwrap_err();
        match err {
            Error::DuplicateUttId { ref utt_id, line } => {
                assert_eq!(utt_id, "dup");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_duration_is_rejected() {
        let line = sample_line("u1", "s", "WF").replace("2.5", "-1.0");
        assert!(parse_manifest(&line).is_err());
    }

    #[test]
    fn serialize_then_parse_is_identity() {
        let text = format!(
            "{}\n{}\n{}\n",
            sample_line("u1", "a", "WF"),
            sample_line("u2", "b", "SS"),
            sample_line("u3", "c", "TS"),
        );
        let records = parse_manifest(&text).unwrap();
        let round = parse_manifest(&serialize_manifest(&records)).unwrap();
        assert_eq!(records, round);
    }

    #[test]
    fn stats_of_empty_list_is_all_zero() {
        let stats = corpus_stats(&[]);
        assert_eq!(stats.grand_total(), 0);
        for &d in &Dialect::ALL {
            assert_eq!(stats.dialect_total(d), 0);
        }
    }

    fn record(
        utt: &str,
        dialect: Dialect,
        language: MajorityLanguage,
        gender: Gender,
    ) -> UtteranceRecord {
        UtteranceRecord {
            utt_id: utt.to_string(),
            source: format!("{utt}.wav"),
            speaker_id: "spk".to_string(),
            dialect,
            majority_language: language,
            gender,
            dataset_name: "demo".to_string(),
            style: Style::Read,
            duration_s: 1.0,
        }
    }

    #[test]
    fn stats_match_hand_tally_on_12_records() {
        use Dialect::*;
        use Gender::*;
        use MajorityLanguage::*;
        let cells = [
            (WF, No, F),
            (WF, No, F),
            (WF, No, M),
            (WF, Fi, F),
            (EF, Fi, M),
            (EF, Fi, M),
            (EF, No, M),
            (SS, No, F),
            (SS, No, F),
            (SS, No, F),
            (TS, Sv, M),
            (TS, Sv, F),
        ];
        let records: Vec<_> = cells
            .iter()
            .enumerate()
            .map(|(i, &(d, l, g))| record(&format!("u{i}"), d, l, g))
            .collect();
        let stats = corpus_stats(&records);
        assert_eq!(stats.cell(WF, No, F), 2);
        assert_eq!(stats.cell(WF, No, M), 1);
        assert_eq!(stats.cell(WF, Fi, F), 1);
        assert_eq!(stats.cell(EF, Fi, M), 2);
        assert_eq!(stats.cell(EF, No, M), 1);
        assert_eq!(stats.cell(SS, No, F), 3);
        assert_eq!(stats.cell(TS, Sv, M), 1);
        assert_eq!(stats.cell(TS, Sv, F), 1);
        assert_eq!(stats.cell(TS, Fi, F), 0);
        assert_eq!(stats.dialect_total(WF), 4);
        assert_eq!(stats.dialect_total(EF), 3);
        assert_eq!(stats.dialect_total(SS), 3);
        assert_eq!(stats.dialect_total(TS), 2);
        assert_eq!(stats.language_total(No), 7);
        assert_eq!(stats.grand_total(), 12);
    }

    /// Cell counts of the published combined North Sámi corpus. The corpus
    /// itself is license-restricted; regenerating records at these counts
    /// exercises the tally at full scale and pins the reference totals.
    #[test]
    fn stats_reproduce_published_corpus_counts() {
        use Dialect::*;
        use Gender::*;
        use MajorityLanguage::*;
        let published: [(Dialect, [[u64; 2]; 3]); 4] = [
            (WF, [[21, 38], [4564, 4943], [0, 0]]),
            (EF, [[1861, 2864], [835, 3644], [0, 0]]),
            (SS, [[102, 212], [1398, 2201], [0, 0]]),
            (TS, [[363, 639], [624, 1602], [63, 166]]),
        ];
        let mut records = Vec::new();
        for &(d, by_lang) in &published {
            for (li, by_gender) in by_lang.iter().enumerate() {
                for (gi, &n) in by_gender.iter().enumerate() {
                    for k in 0..n {
                        records.push(record(
                            &format!("{d}_{li}_{gi}_{k}"),
                            d,
                            MajorityLanguage::ALL[li],
                            Gender::ALL[gi],
                        ));
                    }
                }
            }
        }
        let stats = corpus_stats(&records);
        assert_eq!(stats.cell(WF, No, F), 4564);
        assert_eq!(stats.dialect_total(WF), 9566);
        assert_eq!(stats.dialect_total(EF), 9204);
        assert_eq!(stats.dialect_total(SS), 3913);
        assert_eq!(stats.dialect_total(TS), 3457);
        assert_eq!(stats.grand_total(), 26140);
    }

    #[test]
    fn cell_sum_equals_record_count() {
        let mut rng = Xoshiro256pp::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.below(200);
            let records: Vec<_> = (0..n)
                .map(|i| {
                    record(
                        &format!("u{i}"),
                        Dialect::ALL[rng.below(4)],
                        MajorityLanguage::ALL[rng.below(3)],
                        Gender::ALL[rng.below(2)],
                    )
                })
                .collect();
            let stats = corpus_stats(&records);
            assert_eq!(stats.grand_total(), n as u64);
            let cell_sum: u64 = Dialect::ALL
                .iter()
                .map(|&d| stats.dialect_total(d))
                .sum();
            assert_eq!(cell_sum, n as u64);
        }
    }

    #[test]
    fn table_rendering_contains_totals() {
        let records = vec![
            record("a", Dialect::WF, MajorityLanguage::No, Gender::F),
            record("b", Dialect::TS, MajorityLanguage::Sv, Gender::M),
        ];
        let table = corpus_stats(&records).render_table();
        assert!(table.contains("WF"));
        assert!(table.lines().last().unwrap().ends_with('2'));
    }
}
