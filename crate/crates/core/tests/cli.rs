//! End-to-end runs of the `dislocation` binary.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dislocation");

const SMALL_CHERN: &str = r#"
schema_version = 1
scenario = "toy"
[chern]
curvature_grid = 6
[budget]
chern_grid = 8
chern_s = [1.0]
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn eigensolves(o: &Output) -> usize {
    stderr(o)
        .lines()
        .find_map(|l| l.strip_prefix("eigensolves: "))
        .and_then(|n| n.trim().parse().ok())
        .expect("eigensolve count reported")
}

fn cache_entry(out: &Path) -> PathBuf {
    let entries: Vec<PathBuf> = std::fs::read_dir(out.join(".cache")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1, "{entries:?}");
    entries[0].clone()
}

#[test]
fn free_bands_touch_at_pi_squared() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "free.toml",
        "schema_version = 1\n[potential]\nid = \"free\"\nn = 1\nw = [[1, 1.0, 0.0], [-1, 1.0, 0.0]]\n[bands]\nxi_samples = 5\nband_count = 2\n",
    );
    let o = run(dir.path(), &["bands", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(dir.path().join("o/bands.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["xi", "band_1", "band_2"]);
    let rows: Vec<Vec<f64>> =
        reader.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    let mid = &rows[2];
    assert!((mid[0] - PI).abs() < 1e-15);
    assert!((mid[1] - PI * PI).abs() < 1e-9 && (mid[2] - PI * PI).abs() < 1e-9, "{mid:?}");
    assert!(rows[0][1].abs() < 1e-9);
}

#[test]
fn vanishing_coupling_exits_with_hypothesis_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w0.toml",
        "schema_version = 1\n[potential]\nid = \"flat\"\nn = 1\nv = [[2, 0.5, 0.0], [-2, 0.5, 0.0]]\nw = []\n",
    );
    let o = run(dir.path(), &["winding", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(H2)"), "{}", stderr(&o));
}

#[test]
fn invalid_configurations_exit_with_status_three() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "a.toml", "schema_version = 1\nscenario = \"toy\"\nspeed = 3\n");
    let version = write_config(dir.path(), "b.toml", "schema_version = 7\nscenario = \"toy\"\n");
    let range = write_config(dir.path(), "c.toml", "scenario = \"toy\"\n[budget]\nchern_grid = 1\n");
    for cfg in [&unknown, &version, &range] {
        let o = run(dir.path(), &["chern", "--config", cfg.to_str().unwrap(), "--out", "o"]);
        assert_eq!(o.status.code(), Some(3), "{}: {}", cfg.display(), stderr(&o));
    }
    assert_eq!(run(dir.path(), &["bands", "--scenario", "nowhere"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["bands", "--bogus-flag"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["bands"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn cache_hits_misses_and_recovers_from_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL_CHERN);
    let args = ["chern", "--config", cfg.to_str().unwrap(), "--out", "o"];

    let first = run(dir.path(), &args);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stderr(&first).contains("cache: miss"));
    assert!(eigensolves(&first) > 0);
    let chern_txt = std::fs::read(dir.path().join("o/chern.txt")).unwrap();

    std::fs::remove_file(dir.path().join("o/chern.txt")).unwrap();
    let second = run(dir.path(), &args);
    assert!(stderr(&second).contains("cache: hit"), "{}", stderr(&second));
    assert_eq!(eigensolves(&second), 0);
    assert_eq!(std::fs::read(dir.path().join("o/chern.txt")).unwrap(), chern_txt);

    let entry = cache_entry(&dir.path().join("o"));
    let good = std::fs::read(&entry).unwrap();
    std::fs::write(&entry, b"{ not json").unwrap();
    let third = run(dir.path(), &args);
    assert!(third.status.success());
    assert!(stderr(&third).contains("recomputing"), "{}", stderr(&third));
    assert!(eigensolves(&third) > 0);
    assert_eq!(std::fs::read(&entry).unwrap(), good);

    let no_cache = run(dir.path(), &["chern", "--config", cfg.to_str().unwrap(), "--out", "o", "--no-cache"]);
    assert!(!stderr(&no_cache).contains("cache: hit"));
    assert!(eigensolves(&no_cache) > 0);

    let changed = write_config(dir.path(), "changed.toml", &SMALL_CHERN.replace("chern_grid = 8", "chern_grid = 10"));
    let fourth = run(dir.path(), &["chern", "--config", changed.to_str().unwrap(), "--out", "o"]);
    assert!(stderr(&fourth).contains("cache: miss"), "{}", stderr(&fourth));
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn every_chart_has_a_table_and_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL_CHERN);
    let cfg = cfg.to_str().unwrap();
    for out in ["a", "b"] {
        for cmd in ["bands", "dirac", "winding", "chern", "dirac-flow", "edge-flow"] {
            let o = run(dir.path(), &[cmd, "--config", cfg, "--out", out, "--no-cache", "--threads", "1"]);
            assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        }
    }
    let a = read_tree(&dir.path().join("a"));
    let b = read_tree(&dir.path().join("b"));
    assert_eq!(a.iter().map(|f| &f.0).collect::<Vec<_>>(), b.iter().map(|f| &f.0).collect::<Vec<_>>());
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        assert!(x == y, "{name} differs between runs");
    }
    let names: Vec<&str> = a.iter().map(|f| f.0.as_str()).collect();
    let charts: Vec<&&str> = names.iter().filter(|n| n.ends_with(".svg")).collect();
    assert!(charts.len() >= 5, "{names:?}");
    for svg in charts {
        let twin = svg.replace(".svg", ".csv");
        assert!(names.contains(&twin.as_str()), "{svg} has no {twin}");
    }
    let resolved = std::fs::read_to_string(dir.path().join("a/config.resolved.toml")).unwrap();
    assert!(resolved.contains("chern_grid = 8"));
}

#[test]
fn verify_on_the_toy_scenario_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--scenario", "toy", "--out", "o"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], serde_json::Value::Bool(true));
    assert_eq!(report["edge_flow"], -1);
    assert_eq!(report["winding"], -1);
    for f in ["report.txt", "summary.csv", "winding.csv", "winding.svg", "edge_flow.csv", "edge_flow.svg"] {
        assert!(dir.path().join("o").join(f).exists(), "{f} missing");
    }
}
