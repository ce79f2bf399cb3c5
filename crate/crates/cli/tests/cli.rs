//! End-to-end subcommand behavior through the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_timbre"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn timbre");
    assert!(
        out.status.success(),
        "timbre {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Small corpus shared by the tests: 8 classes x 4 pitches x 2 nuances.
fn corpus() -> &'static Path {
    static CORPUS: OnceLock<TempDir> = OnceLock::new();
    CORPUS
        .get_or_init(|| {
            let dir = TempDir::with_prefix("timbre-cli-test").unwrap();
            run_ok(&[
                "synth",
                "--out",
                dir.path().join("corpus").to_str().unwrap(),
                "--pitches",
                "4",
                "--nuances",
                "2",
                "--seed",
                "9",
            ]);
            dir
        })
        .path()
}

fn manifest() -> PathBuf {
    corpus().join("corpus/manifest.csv")
}

#[test]
fn synth_is_deterministic_and_complete() {
    let dir = TempDir::with_prefix("timbre-synth").unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "synth",
            "--out",
            out.to_str().unwrap(),
            "--pitches",
            "2",
            "--nuances",
            "2",
            "--seed",
            "77",
        ]);
    }
    // 8 classes x 2 pitches x 2 nuances, plus manifest and run.json.
    let names = |p: &Path| {
        let mut v: Vec<String> = std::fs::read_dir(p)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    let files = names(&out_a);
    assert_eq!(files.iter().filter(|n| n.ends_with(".wav")).count(), 32);
    assert!(files.contains(&"manifest.csv".to_string()));
    assert_eq!(names(&out_a), names(&out_b));
    for name in files.iter().filter(|n| n.ends_with(".wav")) {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical seeds");
    }
    assert_eq!(
        std::fs::read(out_a.join("manifest.csv")).unwrap(),
        std::fs::read(out_b.join("manifest.csv")).unwrap()
    );

    // The manifest enumerates exactly the generated rows.
    let manifest = std::fs::read_to_string(out_a.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 32);
}

#[test]
fn count_params_reports_the_derived_budgets() {
    let all = String::from_utf8(run_ok(&["count-params"]).stdout).unwrap();
    for (name, total) in [
        ("2d32", "92576"),
        ("2d48", "157776"),
        ("spiral", "35872"),
        ("1d", "15360"),
        ("spiral+2d", "127872"),
        ("1d+2d", "107360"),
        ("all", "142656"),
    ] {
        let row = all.lines().find(|l| l.starts_with(name)).unwrap_or_else(|| {
            panic!("missing row for {name} in:\n{all}")
        });
        assert!(row.contains(total), "{name}: {row}");
    }

    let detail = String::from_utf8(run_ok(&["count-params", "--arch", "2d32"]).stdout).unwrap();
    assert!(detail.contains("92576"), "{detail}");
    assert!(detail.lines().any(|l| l.contains("conv2d")));

    let unknown = bin().args(["count-params", "--arch", "13d"]).output().unwrap();
    assert!(!unknown.status.success());
}

#[test]
fn mfcc_distances_emits_the_documented_schema_and_effect() {
    // The pitch effect needs a real pitch range; one octave of semitones
    // at two dynamic levels is plenty at test scale.
    let dir = TempDir::with_prefix("timbre-dist").unwrap();
    let corpus = dir.path().join("corpus");
    run_ok(&[
        "synth",
        "--out",
        corpus.to_str().unwrap(),
        "--pitches",
        "13",
        "--nuances",
        "2",
        "--seed",
        "2",
    ]);
    run_ok(&[
        "mfcc-distances",
        "--manifest",
        corpus.join("manifest.csv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("mfcc_distances.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "grouping,group_id,decile10,q25,median,q75,decile90,n_pairs"
    );

    // Parse medians back out and verify the pitch effect per instrument.
    let mut instrument_median = std::collections::BTreeMap::new();
    let mut pitch_medians: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let median: f64 = fields[4].parse().unwrap();
        match fields[0] {
            "instrument" => {
                instrument_median.insert(fields[1].to_string(), median);
            }
            "instrument+pitch" => {
                let inst = fields[1].split('/').next().unwrap().to_string();
                pitch_medians.entry(inst).or_default().push(median);
            }
            _ => {}
        }
    }
    assert_eq!(instrument_median.len(), 8);
    for (inst, &overall) in &instrument_median {
        let mut same_pitch = pitch_medians[inst].clone();
        same_pitch.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pooled = same_pitch[same_pitch.len() / 2];
        assert!(
            pooled < overall,
            "{inst}: same-pitch median {pooled} not below instrument median {overall}"
        );
    }
}

#[test]
fn missing_metadata_columns_fail_cleanly() {
    let dir = TempDir::with_prefix("timbre-dist-bad").unwrap();
    let bad = dir.path().join("manifest.csv");
    std::fs::write(&bad, "path,label,split\nx.wav,a,train\ny.wav,b,train\n").unwrap();
    let out = bin()
        .args([
            "mfcc-distances",
            "--manifest",
            bad.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("metadata"));
}

#[test]
fn train_evaluate_and_baseline_share_the_accuracy_schema() {
    let dir = TempDir::with_prefix("timbre-train").unwrap();
    let run = dir.path().join("run");
    run_ok(&[
        "train",
        "--arch",
        "1d",
        "--manifest",
        manifest().to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--seed",
        "4",
        "--epochs-cap",
        "1",
    ]);
    assert!(run.join("model.ckpt").exists());
    let losses = std::fs::read_to_string(run.join("loss_history.csv")).unwrap();
    assert!(losses.starts_with("epoch,mean_loss\n"));
    assert!(run.join("run.json").exists());

    let eval_dir = dir.path().join("eval");
    run_ok(&[
        "evaluate",
        "--checkpoint",
        run.join("model.ckpt").to_str().unwrap(),
        "--manifest",
        manifest().to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    let eval_csv = std::fs::read_to_string(eval_dir.join("accuracy.csv")).unwrap();
    assert_eq!(eval_csv.lines().next().unwrap(), "class,accuracy,stddev,n_excerpts");
    assert_eq!(eval_csv.lines().count(), 1 + 8 + 1);
    assert!(eval_csv.lines().last().unwrap().starts_with("average,"));

    // Evaluating under the wrong architecture name is a clean failure.
    let bad = bin()
        .args([
            "evaluate",
            "--checkpoint",
            run.join("model.ckpt").to_str().unwrap(),
            "--arch",
            "2d32",
            "--manifest",
            manifest().to_str().unwrap(),
            "--out",
            dir.path().join("bad").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!bad.status.success());

    let base_dir = dir.path().join("base");
    run_ok(&[
        "baseline",
        "--manifest",
        manifest().to_str().unwrap(),
        "--out",
        base_dir.to_str().unwrap(),
        "--seed",
        "4",
        "--trees",
        "50",
    ]);
    let base_csv = std::fs::read_to_string(base_dir.join("accuracy.csv")).unwrap();
    assert_eq!(
        base_csv.lines().next().unwrap(),
        eval_csv.lines().next().unwrap(),
        "baseline and evaluate schemas must match"
    );
    assert_eq!(base_csv.lines().count(), eval_csv.lines().count());
    let features = std::fs::read_to_string(base_dir.join("features.csv")).unwrap();
    assert_eq!(features.lines().next().unwrap().split(',').count(), 71);
}
