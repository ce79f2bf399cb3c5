//! MFCC cluster-distance experiment: per-note 12-coefficient cepstra,
//! grouped by instrument, instrument+pitch, and instrument+nuance, each
//! summarized by its pairwise squared-distance quantiles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;

use timbre_dsp::mel::mfcc_note_summary;
use timbre_dsp::{cluster_distances, load_audio};
use timbre_train::DatasetManifest;

use crate::rundir::RunDir;

#[derive(Args)]
pub struct DistancesArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: DistancesArgs) -> anyhow::Result<()> {
    let manifest = DatasetManifest::read_csv(&args.manifest)?;
    if manifest.entries.iter().any(|e| e.pitch.is_none() || e.nuance.is_none()) {
        bail!("manifest is missing the pitch/nuance metadata columns");
    }

    let mut vectors = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let audio = load_audio(&entry.path)
            .with_context(|| format!("loading {}", entry.path.display()))?;
        vectors.push(mfcc_note_summary(&audio, 12)?);
    }

    // grouping name -> group id -> member vectors
    let mut groups: BTreeMap<&str, BTreeMap<String, Vec<Vec<f64>>>> = BTreeMap::new();
    for (entry, vector) in manifest.entries.iter().zip(&vectors) {
        let pitch = entry.pitch.as_deref().unwrap();
        let nuance = entry.nuance.as_deref().unwrap();
        for (grouping, id) in [
            ("instrument", entry.label.clone()),
            ("instrument+pitch", format!("{}/p{}", entry.label, pitch)),
            ("instrument+nuance", format!("{}/n{}", entry.label, nuance)),
        ] {
            groups
                .entry(grouping)
                .or_default()
                .entry(id)
                .or_default()
                .push(vector.clone());
        }
    }

    let mut csv = String::from("grouping,group_id,decile10,q25,median,q75,decile90,n_pairs\n");
    for (grouping, by_id) in &groups {
        let labeled: Vec<(String, Vec<Vec<f64>>)> = by_id
            .iter()
            .map(|(id, vs)| (id.clone(), vs.clone()))
            .collect();
        let result = cluster_distances(&labeled);
        for skipped in &result.skipped {
            eprintln!("warning: {grouping} group `{skipped}` has a single note, skipped");
        }
        for s in &result.summaries {
            writeln!(
                csv,
                "{grouping},{},{},{},{},{},{},{}",
                s.group, s.decile10, s.q25, s.median, s.q75, s.decile90, s.n_pairs
            )?;
        }
    }

    let dir = RunDir::create(&args.out)?;
    dir.write("mfcc_distances.csv", csv.as_bytes())?;
    dir.finish(
        "mfcc-distances",
        serde_json::json!({
            "manifest": args.manifest.display().to_string(),
            "notes": manifest.entries.len(),
        }),
    )?;
    println!("wrote mfcc_distances.csv to {}", args.out.display());
    Ok(())
}
