//! `nsdid stats` — utterance counts per dialect × majority language ×
//! gender, with totals.

use std::path::Path;

use nsdid_core::corpus::{corpus_stats, parse_manifest};

use crate::{CmdResult, StageExt};

pub fn run(manifest_path: &Path) -> CmdResult<()> {
    let text = std::fs::read_to_string(manifest_path).stage("load_manifest")?;
    let records = parse_manifest(&text).stage("load_manifest")?;
    let stats = corpus_stats(&records);
    print!("{}", stats.render_table());
    println!("grand total: {}", stats.grand_total());
    Ok(())
}
