//! `nsdid split` — write canonical split files for a list of seeds.

use std::path::Path;

use nsdid_core::corpus::parse_manifest;
use nsdid_core::splits::{build_split, SplitMode};

use crate::{CmdResult, StageExt};

pub fn run(manifest_path: &Path, mode: SplitMode, seeds: &[u64], out_dir: &Path) -> CmdResult<()> {
    let text = std::fs::read_to_string(manifest_path).stage("load_manifest")?;
    let records = parse_manifest(&text).stage("load_manifest")?;
    std::fs::create_dir_all(out_dir).stage("split")?;
    for &seed in seeds {
        let split = build_split(&records, seed, mode).stage_seed("split", seed)?;
        split
            .validate_against(&records)
            .stage_seed("split", seed)?;
        let path = out_dir.join(format!("split_{mode}_seed{seed}.json"));
        std::fs::write(&path, split.to_canonical_json()).stage_seed("split", seed)?;
        println!(
            "split {}: train {}, val {}, test {} -> {}",
            split.name,
            split.train_ids.len(),
            split.val_ids.len(),
            split.test_ids.len(),
            path.display()
        );
    }
    Ok(())
}
