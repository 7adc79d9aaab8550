//! Majority-language influence analysis over external LID output.
//!
//! The language-identification system itself is external; its per-utterance
//! posteriors enter as a JSON-Lines file, one object per line:
//!
//! ```text
//! {"utt_id": "u1", "ranking": [["fi", 0.83], ["et", 0.09], ["no", 0.04]]}
//! ```
//!
//! The aggregation asks: for each majority-language group g and probe
//! language l, in what percentage of g's utterances does l appear among the
//! top-n hypotheses? A merge map (e.g. Estonian → Finnish, two phonetically
//! close languages of one family) relabels ranking entries before the
//! top-n membership test, without double counting, so merging can only
//! increase a rate. Rankings shorter than n contribute their available
//! prefix.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{MajorityLanguage, UtteranceRecord};
use crate::error::{Error, Result};

/// Ranked language hypotheses for one utterance, scores non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidPosterior {
    pub utt_id: String,
    pub ranking: Vec<(String, f64)>,
}

/// Parse and validate a JSON-Lines posterior file. Rankings are re-sorted
/// by descending score where needed (stable, so ties keep file order).
pub fn parse_lid_file(text: &str) -> Result<Vec<LidPosterior>> {
    let mut out: Vec<LidPosterior> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut posterior: LidPosterior =
            serde_json::from_str(line).map_err(|e| Error::Lid {
                line: line_no,
                msg: e.to_string(),
            })?;
        if posterior.ranking.is_empty() {
            return Err(Error::Lid {
                line: line_no,
                msg: format!("empty ranking for utt_id `{}`", posterior.utt_id),
            });
        }
        let mut langs = HashSet::new();
        for (lang, score) in &posterior.ranking {
            if !langs.insert(lang.as_str()) {
                return Err(Error::Lid {
                    line: line_no,
                    msg: format!("duplicate language `{lang}` in ranking"),
                });
            }
            if !score.is_finite() {
                return Err(Error::Lid {
                    line: line_no,
                    msg: format!("non-finite score for language `{lang}`"),
                });
            }
        }
        if !seen.insert(posterior.utt_id.clone()) {
            return Err(Error::Lid {
                line: line_no,
                msg: format!("duplicate utt_id `{}`", posterior.utt_id),
            });
        }
        posterior
            .ranking
            .sort_by(|a, b| b.1.partial_cmp(&a.1).expect("scores are finite"));
        out.push(posterior);
    }
    Ok(out)
}

/// n-best hit rates per (majority-language group, probe language, n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBestTable {
    pub n_values: Vec<usize>,
    /// Utterances per group, [fi, no, sv] order.
    pub group_counts: [usize; 3],
    /// rates[group][probe][n_idx]; None when the group is empty.
    rates: Vec<Vec<Vec<Option<f64>>>>,
}

impl NBestTable {
    /// Rate in percent; None when group `g` has no utterances. Panics if
    /// `n` was not requested when the table was built.
    pub fn rate(&self, group: MajorityLanguage, probe: MajorityLanguage, n: usize) -> Option<f64> {
        let n_idx = self
            .n_values
            .iter()
            .position(|&v| v == n)
            .unwrap_or_else(|| panic!("n = {n} not in table"));
        self.rates[group.index()][probe.index()][n_idx]
    }

    /// Aligned text layout: one row per group, probe-language columns
    /// grouped by n. Rates are rendered with one decimal; empty groups
    /// show "-".
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<18}", "majority language"));
        for &n in &self.n_values {
            for probe in MajorityLanguage::ALL {
                out.push_str(&format!("{:>9}", format!("{n}-{probe}")));
            }
        }
        out.push('\n');
        for group in MajorityLanguage::ALL {
            out.push_str(&format!("{:<18}", group.name()));
            for &n in &self.n_values {
                for probe in MajorityLanguage::ALL {
                    match self.rate(group, probe, n) {
                        Some(v) => out.push_str(&format!("{:>9}", format!("{v:.1}"))),
                        None => out.push_str(&format!("{:>9}", "-")),
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("majority_language,n_utterances");
        for &n in &self.n_values {
            for probe in MajorityLanguage::ALL {
                out.push_str(&format!(",{n}_best_{probe}"));
            }
        }
        out.push('\n');
        for group in MajorityLanguage::ALL {
            out.push_str(&format!(
                "{},{}",
                group.name(),
                self.group_counts[group.index()]
            ));
            for &n in &self.n_values {
                for probe in MajorityLanguage::ALL {
                    match self.rate(group, probe, n) {
                        Some(v) => out.push_str(&format!(",{v:.1}")),
                        None => out.push(','),
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Compute n-best rates: `rate(g, l, n) = 100·|{u ∈ g : l ∈ top-n(u)}|/|g|`.
///
/// Every record must have a posterior and every posterior must reference a
/// record. With a merge map, each ranked language is relabeled through the
/// map before the membership test.
pub fn nbest_rates(
    posteriors: &[LidPosterior],
    records: &[UtteranceRecord],
    n_values: &[usize],
    merge: Option<&BTreeMap<String, String>>,
) -> Result<NBestTable> {
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(Error::InvalidParam(
            "n-best values must be a nonempty list of positive n".into(),
        ));
    }
    let record_ids: HashSet<&str> = records.iter().map(|r| r.utt_id.as_str()).collect();
    let mut by_utt: HashMap<&str, &LidPosterior> = HashMap::with_capacity(posteriors.len());
    for p in posteriors {
        if !record_ids.contains(p.utt_id.as_str()) {
            return Err(Error::UnknownUttId(p.utt_id.clone()));
        }
        if by_utt.insert(p.utt_id.as_str(), p).is_some() {
            return Err(Error::InvalidParam(format!(
                "duplicate posterior for utt_id `{}`",
                p.utt_id
            )));
        }
    }
    let mut group_counts = [0usize; 3];
    let mut hits = vec![vec![vec![0usize; n_values.len()]; 3]; 3];
    for record in records {
        let posterior = by_utt
            .get(record.utt_id.as_str())
            .ok_or_else(|| Error::MissingPosterior(record.utt_id.clone()))?;
        let g = record.majority_language.index();
        group_counts[g] += 1;
        for (n_idx, &n) in n_values.iter().enumerate() {
            let top: HashSet<&str> = posterior.ranking[..n.min(posterior.ranking.len())]
                .iter()
                .map(|(lang, _)| {
                    merge
                        .and_then(|m| m.get(lang).map(|s| s.as_str()))
                        .unwrap_or(lang.as_str())
                })
                .collect();
            for probe in MajorityLanguage::ALL {
                if top.contains(probe.code()) {
                    hits[g][probe.index()][n_idx] += 1;
                }
            }
        }
    }
    let rates = (0..3)
        .map(|g| {
            (0..3)
                .map(|l| {
                    (0..n_values.len())
                        .map(|n_idx| {
                            if group_counts[g] == 0 {
                                None
                            } else {
                                Some(100.0 * hits[g][l][n_idx] as f64 / group_counts[g] as f64)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(NBestTable {
        n_values: n_values.to_vec(),
        group_counts,
        rates,
    })
}

/// The Finnic merge map: Estonian hits count as Finnish.
pub fn finnic_merge_map() -> BTreeMap<String, String> {
    BTreeMap::from([("et".to_string(), "fi".to_string())])
}

/// [`nbest_rates`] with Estonian merged into Finnish.
pub fn merged_finnic_rates(
    posteriors: &[LidPosterior],
    records: &[UtteranceRecord],
    n_values: &[usize],
) -> Result<NBestTable> {
    nbest_rates(posteriors, records, n_values, Some(&finnic_merge_map()))
}
