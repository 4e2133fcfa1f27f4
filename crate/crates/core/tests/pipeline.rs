mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use common::{gridwar, run_pipeline};
use gridwar::gwar::{GwarGame, GwarSeason};
use gridwar::io::{read_csv, write_csv, ReferenceWar};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gridwar"))
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn listing(dir: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for e in walk(dir) {
        out.insert(e.strip_prefix(dir).unwrap().to_string_lossy().into_owned());
    }
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(gridwar(&["--help"]), 0);
    assert_eq!(gridwar(&["gwar", "--help"]), 0);
    assert_eq!(gridwar(&["--version"]), 0);
    assert_eq!(gridwar(&["frobnicate"]), 1);
    assert_eq!(gridwar(&["fit-f", "--years", "2019:2019"]), 1);
    assert_eq!(gridwar(&["fit-f", "--starts", "x.csv", "--years", "2019:2017", "--out", "y.json"]), 1);
}

#[test]
fn errors_are_one_json_line_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fit-f", "--starts", &s(&dir.path().join("absent.csv")), "--years", "2019:2019"])
        .args(["--out", &s(&dir.path().join("f.json"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "validation");
    assert!(v["message"].as_str().unwrap().contains("absent.csv"));
    assert!(!dir.path().join("f.json").exists());

    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(v["message"].as_str().unwrap().contains("frobnicate"));
}

#[test]
fn out_of_range_replacement_level_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let x = s(&dir.path().join("x"));
    let out = bin()
        .args(["gwar", "--starts", &x, "--f", &x, "--g", &x, "--park", &x, "--wrep", "0.7"])
        .args(["--out", &format!("{x}.a,{x}.b")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "validation");
    assert!(v["message"].as_str().unwrap().contains("0.7"), "{v}");
}

#[test]
fn gwar_needs_two_output_paths() {
    let dir = tempfile::tempdir().unwrap();
    let x = s(&dir.path().join("x"));
    assert_eq!(gridwar(&["gwar", "--starts", &x, "--f", &x, "--g", &x, "--park", &x, "--out", &x]), 1);
}

#[test]
fn simulate_park_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let args = ["simulate-park", "--study", "1", "--sims", "2", "--seed", "7", "--years", "2019:2019", "--out", &s(p)];
        assert_eq!(gridwar(&args), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["draws"].as_array().map(|d| d.len()), Some(2));
    assert_eq!(gridwar(&["simulate-park", "--study", "3", "--out", &s(&a)]), 1);
}

#[test]
fn full_pipeline_then_compare_and_tune() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let seasons_path = run_pipeline(root);
    let raw = root.join("raw.csv");
    let raw_before = std::fs::read(&raw).unwrap();

    let games: Vec<GwarGame> = read_csv(&root.join("gwar_games.csv")).unwrap();
    let seasons: Vec<GwarSeason> = read_csv(&seasons_path).unwrap();
    assert_eq!(seasons.iter().map(|s| s.games).sum::<usize>(), games.len());
    assert!(games.iter().all(|g| g.park_adjusted_gwar.is_finite() && g.raw_gwar.is_finite()));

    // A reference that tracks GWAR loosely, on most seasons.
    let reference: Vec<ReferenceWar> = seasons
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 7 != 0)
        .map(|(i, s)| ReferenceWar {
            pitcher: s.pitcher_id.clone(),
            season: s.year,
            war: 1.5 * s.gwar + 0.3 * ((i % 5) as f64 - 2.0),
        })
        .collect();
    let ref_path = root.join("reference.csv");
    write_csv(&ref_path, &reference).unwrap();

    let report = root.join("compare.json");
    let args = [
        "compare", "--seasons", &s(&seasons_path), "--reference", &s(&ref_path),
        "--games", &s(&root.join("gwar_games.csv")), "--extremes", "3", "--out", &s(&report),
    ];
    assert_eq!(gridwar(&args), 0);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["ranking"].as_array().unwrap().len(), seasons.len());
    assert_eq!(v["undervalued"].as_array().unwrap().len(), 3);
    assert!(v["scale"].as_f64().unwrap() > 0.0);
    let ranks: Vec<f64> = v["ranking"].as_array().unwrap().iter().map(|r| r["gwar"].as_f64().unwrap()).collect();
    assert!(ranks.windows(2).all(|w| w[0] >= w[1]));

    let a = &seasons[0].pitcher_id;
    let b = &seasons[1].pitcher_id;
    let pair = format!("{a},{b}");
    let args = [
        "compare", "--seasons", &s(&seasons_path), "--reference", &s(&ref_path),
        "--games", &s(&root.join("gwar_games.csv")), "--pair", &pair, "--out", &s(&report),
    ];
    assert_eq!(gridwar(&args), 0);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let h = &v["histograms"][0];
    assert_eq!(h["a"], a.as_str());
    let bins = h["bins"].as_array().unwrap();
    let count = |who: &str| games.iter().filter(|g| g.pitcher_id == who).count() as i64;
    let total = |k: &str| bins.iter().map(|b| b[k].as_i64().unwrap()).sum::<i64>();
    assert_eq!(total("a"), count(a));
    assert_eq!(total("b"), count(b));
    assert!(bins.iter().all(|b| b["diff"].as_i64().unwrap() == b["a"].as_i64().unwrap() - b["b"].as_i64().unwrap()));
    let games_path = s(&root.join("gwar_games.csv"));
    let bad = [
        "compare", "--seasons", &s(&seasons_path), "--reference", &s(&ref_path),
        "--games", &games_path, "--pair", "a", "--out", &s(&report),
    ];
    assert_eq!(gridwar(&bad), 1);

    let tune = root.join("tune.json");
    let halves = root.join("ingest/half_innings.csv");
    let args = [
        "tune-lambda", "--half-innings", &s(&halves), "--train", "2017:2018", "--validate", "2019:2019",
        "--grid", "0.1,1,10", "--out", &s(&tune),
    ];
    assert_eq!(gridwar(&args), 0);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&tune).unwrap()).unwrap();
    assert_eq!(v["scores"].as_array().map(|a| a.len()), Some(3), "{v}");

    assert_eq!(std::fs::read(&raw).unwrap(), raw_before);
    let expect: BTreeSet<String> = [
        "raw.csv", "ingest/plate_appearances.csv", "ingest/half_innings.csv", "ingest/start_lines.csv",
        "ingest/rejects.csv", "ingest/rejected_starts.csv", "f_grid.json", "g_dist.json", "park_fx.json",
        "gwar_games.csv", "gwar_seasons.csv", "reference.csv", "compare.json", "tune.json",
    ]
    .iter()
    .map(|x| x.to_string())
    .collect();
    assert_eq!(listing(root), expect);
}
