//! Parameter budget reporting.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use timbre_net::{by_name, canonical_names, count_params};

use crate::rundir::RunDir;

#[derive(Args)]
pub struct CountParamsArgs {
    /// Architecture name; omit to list totals for every registered one.
    #[arg(long)]
    pub arch: Option<String>,
    /// Optional directory for a CSV copy of the table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: CountParamsArgs) -> anyhow::Result<()> {
    let mut csv = String::new();
    match &args.arch {
        Some(name) => {
            let spec = by_name(name)?;
            let count = count_params(&spec)?;
            println!("{:<10} {:<3} {:<18} {:>12} {:>10}", "section", "#", "kind", "output", "params");
            csv.push_str("section,layer,kind,output,params\n");
            for row in &count.rows {
                println!(
                    "{:<10} {:<3} {:<18} {:>12} {:>10}",
                    row.section, row.layer, row.kind, row.output, row.params
                );
                writeln!(csv, "{},{},{},{},{}", row.section, row.layer, row.kind, row.output, row.params)?;
            }
            println!("{:<10} {:<3} {:<18} {:>12} {:>10}", "total", "", "", "", count.total);
            writeln!(csv, "total,,,,{}", count.total)?;
        }
        None => {
            println!("{:<12} {:>10}", "architecture", "params");
            csv.push_str("architecture,params\n");
            for name in canonical_names() {
                let total = count_params(&by_name(name)?)?.total;
                println!("{name:<12} {total:>10}");
                writeln!(csv, "{name},{total}")?;
            }
        }
    }
    if let Some(out) = &args.out {
        let dir = RunDir::create(out)?;
        dir.write("params.csv", csv.as_bytes())?;
        dir.finish(
            "count-params",
            serde_json::json!({ "arch": args.arch }),
        )?;
    }
    Ok(())
}
