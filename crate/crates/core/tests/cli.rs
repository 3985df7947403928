mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{ind_fixture, sdd_fixture, write_config};

fn trajaim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajaim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = trajaim(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = trajaim(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Sdd {
    dir: tempfile::TempDir,
    config: String,
}

impl Sdd {
    fn new(extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        sdd_fixture(&dir.path().join("raw"));
        let config = write_config(
            dir.path(),
            &format!("dataset = \"sdd\"\ninputs = [\"raw\"]\nstore = \"store\"\n{extra}"),
        );
        let sdd = Sdd {
            config: s(&config).to_owned(),
            dir,
        };
        ok(&["ingest", "--config", sdd.config(), "--out", s(&sdd.path("store"))]);
        sdd
    }

    fn path(&self, rel: &str) -> std::path::PathBuf {
        self.dir.path().join(rel)
    }

    fn config(&self) -> &str {
        &self.config
    }

    fn read(&self, rel: &str) -> String {
        fs::read_to_string(self.path(rel)).unwrap()
    }
}

#[test]
fn ingest_writes_manifest_and_tracks() {
    let sdd = Sdd::new("");
    let manifest: serde_json::Value = serde_json::from_str(&sdd.read("store/manifest.json")).unwrap();
    assert_eq!(manifest["dataset"], "sdd");
    let videos = manifest["videos"].as_array().unwrap();
    assert_eq!(videos.len(), 2);
    assert_eq!(videos[0]["scene"], "coupa");
    assert_eq!(videos[0]["trajectories"], 7);
    assert_eq!(sdd.read("store/tracks/coupa/0.jsonl").lines().count(), 7);
}

#[test]
fn stats_reports() {
    let sdd = Sdd::new("");
    let out = sdd.path("stats");
    let listed = ok(&["stats", "--config", sdd.config(), "--out", s(&out)]);
    assert_eq!(listed.lines().count(), 5);

    let lost = sdd.read("stats/lost_stats.csv");
    assert_eq!(
        lost,
        "scene,trajectories,lost_start_pct,lost_middle_pct,lost_end_pct\n\
         coupa,7,14.29,14.29,14.29\n\
         quad,2,0.00,0.00,0.00\n"
    );
    let classes = sdd.read("stats/class_distribution.csv");
    assert!(classes.contains("coupa,7,85.71,14.29,0.00,0.00,0.00,0.00"), "{classes}");
    assert!(classes.contains("quad,2,50.00,50.00"));
    let overlap = sdd.read("stats/overlap.csv");
    assert!(overlap.contains("coupa,Partial,Full,1-4"));
    let chains = sdd.read("stats/split_chains.csv");
    assert_eq!(chains, "scene,video,tracks,chain\ncoupa,0,3,4 9 5\n");
}

#[test]
fn stats_jsonl_format() {
    let sdd = Sdd::new("export_format = \"jsonl\"\n");
    ok(&["stats", "--config", sdd.config(), "--out", s(&sdd.path("stats"))]);
    let text = sdd.read("stats/lost_stats.jsonl");
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["scene"], "coupa");
    assert_eq!(first["trajectories"], 7);
}

#[test]
fn aim_pair_sweep_and_top_k() {
    let sdd = Sdd::new("");
    let cfg = sdd.config();
    let out = sdd.path("aim");
    ok(&[
        "aim",
        "--config",
        cfg,
        "--out",
        s(&out),
        "--video",
        "coupa/0",
        "--pair",
        "0,1",
        "--sweep-delta",
        "1,0.98,0.95",
    ]);
    let summary = sdd.read("aim/aim_summary.csv");
    assert_eq!(summary.lines().count(), 4, "{summary}");
    let series = sdd.read("aim/series/coupa_0_0_1_n30_d0.98.csv");
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("frame,x_i,y_i,x_j,y_j,mi,rho,aim"));
    // Track 0 is lost until frame 29, so the run starts at 30 and the buffer ends at 60.
    assert!(lines.next().unwrap().starts_with("60,160.000000,200.000000,"));
    assert_eq!(series.lines().count(), 1 + (269 - 60 + 1));
    let meta: serde_json::Value =
        serde_json::from_str(&sdd.read("aim/series/coupa_0_0_1_n30_d0.98.meta.json")).unwrap();
    assert_eq!(meta["window"], 30);
    assert_eq!(meta["rho"]["alpha"], 0.3);

    let top = sdd.path("top");
    ok(&[
        "aim",
        "--config",
        cfg,
        "--out",
        s(&top),
        "--top-k",
        "3",
        "--sweep-n",
        "25,30",
    ]);
    let summary = sdd.read("top/aim_summary.csv");
    assert_eq!(summary.lines().count(), 1 + 3 * 2);
    let finals: Vec<f64> = summary
        .lines()
        .skip(1)
        .step_by(2)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(finals.len(), 3);
}

#[test]
fn aim_errors() {
    let sdd = Sdd::new("");
    let cfg = sdd.config();
    let out = sdd.path("aim");
    let err = fails(&[
        "aim",
        "--config",
        cfg,
        "--out",
        s(&out),
        "--video",
        "coupa/0",
        "--pair",
        "0,7",
    ]);
    assert!(err.contains("co-present"), "{err}");
    let err = fails(&[
        "aim",
        "--config",
        cfg,
        "--out",
        s(&out),
        "--video",
        "coupa/0",
        "--pair",
        "0,99",
    ]);
    assert!(err.contains("unknown track id"), "{err}");
    let err = fails(&["aim", "--config", cfg, "--out", s(&out), "--pair", "0,1"]);
    assert!(err.contains("--video"), "{err}");
    fails(&["aim", "--config", cfg, "--out", s(&out)]);
}

#[test]
fn eval_paired_policies_and_external() {
    let sdd = Sdd::new("");
    let cfg = sdd.config();
    ok(&[
        "eval",
        "--config",
        cfg,
        "--out",
        s(&sdd.path("eval")),
        "--lost-policy",
        "keep_lost,filter_keep_first",
    ]);
    let report = sdd.read("eval/eval.csv");
    let rows: Vec<&str> = report.lines().collect();
    assert_eq!(rows[0], "config,group,windows,ade_px,fde_px");
    assert!(rows.iter().any(|r| r.starts_with("keep_lost,all,")));
    assert!(rows.iter().any(|r| r.starts_with("filter_keep_first,all,")));
    assert!(rows.iter().any(|r| r.starts_with("filter_keep_first,pedestrian,")));

    let preds = sdd.path("preds.jsonl");
    fs::write(&preds, "{\"window_id\":\"sdd/coupa/0/77/0\",\"future\":[[0,0]]}\n").unwrap();
    let err = fails(&[
        "eval",
        "--config",
        cfg,
        "--out",
        s(&sdd.path("eval2")),
        "--predictor",
        s(&preds),
    ]);
    assert!(err.contains("unknown window"), "{err}");
    fs::write(&preds, "not json\n").unwrap();
    let err = fails(&[
        "eval",
        "--config",
        cfg,
        "--out",
        s(&sdd.path("eval2")),
        "--predictor",
        s(&preds),
    ]);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn ind_ingest_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    ind_fixture(&dir.path().join("raw"));
    let cfg = write_config(dir.path(), "dataset = \"ind\"\ninputs = [\"raw\"]\nstore = \"store\"\n");
    ok(&["ingest", "--config", s(&cfg), "--out", s(&dir.path().join("store"))]);
    ok(&["stats", "--config", s(&cfg), "--out", s(&dir.path().join("stats"))]);
    let classes = fs::read_to_string(dir.path().join("stats/class_distribution.csv")).unwrap();
    assert_eq!(
        classes,
        "group,tracks,pedestrian_pct,biker_pct,car_pct,truckbus_pct\n30-32,2,50.00,0.00,50.00,0.00\n"
    );
    assert!(!dir.path().join("stats/overlap.csv").exists());
    ok(&[
        "eval",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("eval")),
        "--split",
        "validation",
    ]);
    let err = fails(&[
        "eval",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("eval")),
        "--split",
        "test",
    ]);
    assert!(err.contains("test split"), "{err}");

    fs::remove_file(dir.path().join("raw/31_tracksMeta.csv")).unwrap();
    let err = fails(&["ingest", "--config", s(&cfg), "--out", s(&dir.path().join("store2"))]);
    assert!(err.contains("31_tracksMeta.csv"), "{err}");
}

#[test]
fn empty_store_and_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("raw/quad/video0")).unwrap();
    fs::write(dir.path().join("raw/quad/video0/annotations.txt"), "").unwrap();
    let cfg = write_config(dir.path(), "dataset = \"sdd\"\ninputs = [\"raw\"]\nstore = \"store\"\n");
    ok(&["ingest", "--config", s(&cfg), "--out", s(&dir.path().join("store"))]);
    let err = fails(&["stats", "--config", s(&cfg), "--out", s(&dir.path().join("stats"))]);
    assert!(err.contains("empty"), "{err}");

    let bad = write_config(dir.path(), "dataset = \"sdd\"\ndelta = 2.0\n");
    let err = fails(&["stats", "--config", s(&bad), "--out", s(&dir.path().join("stats"))]);
    assert!(err.contains("delta"), "{err}");
    let err = fails(&["ingest", "--config", s(&dir.path().join("missing.toml")), "--out", "x"]);
    assert!(err.contains("missing.toml"), "{err}");
}

#[test]
fn malformed_annotation_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    common::write(
        &dir.path().join("raw/gates/video3/annotations.txt"),
        "1 0 0 10 10 0 0 0 0 \"Biker\"\n1 0 0 10 10 1 0 0 0 \"Unicycle\"\n",
    );
    let cfg = write_config(dir.path(), "dataset = \"sdd\"\ninputs = [\"raw\"]\n");
    let err = fails(&["ingest", "--config", s(&cfg), "--out", s(&dir.path().join("store"))]);
    assert!(
        err.contains("gates/video3/annotations.txt") && err.contains("line 2"),
        "{err}"
    );
}
