//! Whole-command tests run in-process through `execute`, so they finish
//! before the slower integration targets.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::Value;

use crate::error::CliError;
use crate::run::{RunManifest, MANIFEST};
use crate::{execute, Cli};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Result<(), CliError> {
    let argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    let cli = Cli::try_parse_from(std::iter::once("keyshap".to_owned()).chain(argv.iter().cloned()))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli, &argv)
}

fn run_into(out: &Path, args: &[&str]) -> Result<(), CliError> {
    let mut full = args.to_vec();
    let dir = out.display().to_string();
    full.extend(["--out-dir", &dir]);
    run(&full)
}

fn code(r: Result<(), CliError>) -> u8 {
    r.map(|_| 0).unwrap_or_else(|e| e.exit_code())
}

fn json(path: PathBuf) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(run(&["cluster"])), 2);
    assert_eq!(code(run(&["cluster", "--delta", "a.csv", "--pi", "b.csv"])), 2);
    assert_eq!(code(run(&["cost", "--groups", "5,3", "--n", "17"])), 2);
    assert_eq!(code(run(&["cost", "--groups", "3", "--jobs", "0"])), 2);
    assert_eq!(code(run(&["interdep", "--oracle", "nonsense:x"])), 2);
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join(MANIFEST).display().to_string();
    assert_eq!(code(run(&["replay", &m])), 2, "replay without --out-dir");
}

#[test]
fn data_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent.csv").display().to_string();
    assert_eq!(code(run(&["cluster", "--delta", &missing])), 3);

    let bad = tmp.path().join("game.csv");
    fs::write(&bad, "coalition,value\n0x0,0\n0x1,1\n0x2,2\n").unwrap();
    assert_eq!(code(run(&["exact", "--game", &bad.display().to_string()])), 3);
}

#[test]
fn oracle_errors_exit_4() {
    // The tabular fixture only lists single removals, so group games miss coalitions.
    let r = run(&[
        "shapley",
        "--oracle",
        &format!("tabular:{}", fixture("coco_drops_oracle.csv")),
        "--grouping",
        &fixture("coco_groups.json"),
    ]);
    assert_eq!(code(r), 4);
    assert_eq!(code(run(&["interdep", "--oracle", "external:false"])), 4);
    assert_eq!(code(run(&["interdep", "--oracle", "external:/nonexistent/oracle-bin"])), 4);
}

#[test]
fn tabular_interdep_round_trips_the_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let oracle = format!("tabular:{}", fixture("coco_drops_oracle.csv"));
    run_into(tmp.path(), &["interdep", "--oracle", &oracle, "--trials", "1"]).unwrap();
    let ours = fs::read_to_string(tmp.path().join("delta.csv")).unwrap();
    let theirs = fs::read_to_string(fixture("coco_drops.csv")).unwrap();
    let cells = |s: &str| -> Vec<f64> {
        s.lines()
            .skip(1)
            .flat_map(|l| l.split(',').skip(1).map(|c| c.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect()
    };
    let (a, b) = (cells(&ours), cells(&theirs));
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-6));
    assert!(tmp.path().join("pi.csv").exists());

    let m: RunManifest = serde_json::from_slice(&fs::read(tmp.path().join(MANIFEST)).unwrap()).unwrap();
    assert!(m.oracle.unwrap().starts_with("tabular"));
    assert!(m.sub_seeds.contains_key("interdep"));
    assert_eq!(m.outputs.len(), 2);
}

#[test]
fn exact_reports_efficiency_and_sampling() {
    let tmp = tempfile::tempdir().unwrap();
    let game = tmp.path().join("game.csv");
    // v(S) = |S|^2 over three players: every player gets 3.
    let mut text = String::from("coalition,value\n");
    for s in 0u32..8 {
        text.push_str(&format!("{s:#x},{}\n", s.count_ones().pow(2)));
    }
    fs::write(&game, text).unwrap();
    run_into(tmp.path(), &["exact", "--game", &game.display().to_string(), "--sample", "500"]).unwrap();
    let r = json(tmp.path().join("exact.json"));
    for phi in r["phi"].as_array().unwrap() {
        assert!((phi.as_f64().unwrap() - 3.0).abs() < 1e-12);
    }
    assert!(r["efficiency_gap"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["sampled"]["permutations"], 500);
}

#[test]
fn shapley_writes_report_and_percent_tables() {
    let tmp = tempfile::tempdir().unwrap();
    run_into(
        tmp.path(),
        &[
            "shapley",
            "--oracle",
            &format!("synthetic:{}", fixture("synthetic_coco.json")),
            "--grouping",
            &fixture("coco_groups.json"),
            "--split",
            "proportional",
        ],
    )
    .unwrap();
    for f in ["report.json", "group.csv", "combined.csv", "intra_G1.csv", "intra_G5.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let group = fs::read_to_string(tmp.path().join("group.csv")).unwrap();
    for line in group.lines().skip(1) {
        let sum: f64 = line.split(',').skip(1).map(|c| c.parse::<f64>().unwrap()).sum();
        assert!((sum - 100.0).abs() < 1e-6, "{line}");
    }
}

#[test]
fn replay_confirms_and_detects_changes() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("delta.csv");
    fs::copy(fixture("coco_drops.csv"), &input).unwrap();
    let first = tmp.path().join("first");
    run_into(&first, &["cluster", "--delta", &input.display().to_string(), "--g", "5"]).unwrap();
    let manifest = first.join(MANIFEST).display().to_string();

    run_into(&tmp.path().join("again"), &["replay", &manifest, "--jobs", "3"]).unwrap();
    assert_eq!(
        fs::read(first.join("grouping.json")).unwrap(),
        fs::read(tmp.path().join("again/grouping.json")).unwrap()
    );

    // A recorded output digest that no longer matches.
    let mut m: RunManifest = serde_json::from_slice(&fs::read(&manifest).unwrap()).unwrap();
    m.outputs[0].sha256 = "0".repeat(64);
    let forged = tmp.path().join("forged.json");
    fs::write(&forged, serde_json::to_vec(&m).unwrap()).unwrap();
    let r = run_into(&tmp.path().join("forged"), &["replay", &forged.display().to_string()]);
    assert_eq!(code(r), 3);

    // An edited input.
    let text = fs::read_to_string(&input).unwrap().replacen("20.6", "20.7", 1);
    fs::write(&input, text).unwrap();
    let r = run_into(&tmp.path().join("edited"), &["replay", &manifest]);
    assert!(matches!(r, Err(CliError::Mismatch(_))));
}

#[test]
fn masks_cost_and_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    run_into(&out.join("masks"), &["masks", "--x", "30", "--y", "20", "--width", "64", "--height", "48", "--m", "4"])
        .unwrap();
    let masks = json(out.join("masks/masks.json"));
    assert!(masks.to_string().contains("30"));

    run_into(&out.join("cost"), &["cost", "--grouping", &fixture("coco_groups.json")]).unwrap();
    assert_eq!(json(out.join("cost/cost.json"))["gsv"]["distinct_coalitions"], 96);

    let annotations = out.join("ann.json");
    let kps = |labeled: usize| -> Vec<f64> {
        (0..17)
            .flat_map(|i| if i < labeled { [10.0 + i as f64, 12.0, 2.0] } else { [0.0, 0.0, 0.0] })
            .collect()
    };
    let doc = serde_json::json!({
        "images": [
            {"id": 1, "width": 40, "height": 30, "file_name": "a.ppm"},
            {"id": 2, "width": 40, "height": 30, "file_name": "b.ppm"}
        ],
        "annotations": [
            {"id": 10, "image_id": 1, "keypoints": kps(17), "num_keypoints": 17},
            {"id": 11, "image_id": 2, "keypoints": kps(8), "num_keypoints": 8}
        ]
    });
    fs::write(&annotations, doc.to_string()).unwrap();
    run_into(&out.join("stats"), &["gkr", "stats", "--annotations", &annotations.display().to_string()]).unwrap();
    let per_image = fs::read_to_string(out.join("stats/occlusion.csv")).unwrap();
    let rows: Vec<&str> = per_image.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("1,0.0,"));
    assert!(rows[1].starts_with("2,0.529"));
    assert!(out.join("stats/buckets.csv").exists());
}

#[test]
fn corr_and_render() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("conf.csv");
    let mut text = String::from("a,b,flat\n");
    for k in 0..20 {
        let x = 0.5 + 0.4 * (k as f64 * 0.37).sin();
        let b = if k == 3 { String::new() } else { format!("{}", 0.5 * x + 0.1) };
        text.push_str(&format!("{x},{b},0.5\n"));
    }
    fs::write(&table, text).unwrap();
    run_into(&tmp.path().join("c"), &["corr", "--table", &table.display().to_string()]).unwrap();
    let corr = tmp.path().join("c/corr.csv");
    let body = fs::read_to_string(&corr).unwrap();
    let row_a: Vec<&str> = body.lines().nth(1).unwrap().split(',').collect();
    assert!((row_a[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);

    run_into(&tmp.path().join("r"), &["render", "--matrix", &corr.display().to_string()]).unwrap();
    let svg = fs::read_to_string(tmp.path().join("r/corr.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn from_delta_config_reproduces_drops() {
    let tmp = tempfile::tempdir().unwrap();
    run_into(&tmp.path().join("cfg"), &["oracle", "synthetic-from-delta", "--delta", &fixture("coco_drops.csv")]).unwrap();
    let cfg = tmp.path().join("cfg/synthetic.json").display().to_string();
    run_into(&tmp.path().join("d"), &["interdep", "--oracle", &format!("synthetic:{cfg}"), "--trials", "1"]).unwrap();
    let ours = fs::read_to_string(tmp.path().join("d/delta.csv")).unwrap();
    let want = fs::read_to_string(fixture("coco_drops.csv")).unwrap();
    let cells = |s: &str| -> Vec<f64> {
        s.lines()
            .skip(1)
            .flat_map(|l| l.split(',').skip(1).map(|c| c.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect()
    };
    assert!(cells(&ours).iter().zip(cells(&want)).all(|(a, b)| (a - b).abs() < 1e-6));
}
