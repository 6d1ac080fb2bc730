use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const DEFAULT_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/config/default_scenario.json");

fn synthpose(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_synthpose"));
    c.args(args).env_remove("SYNTHPOSE_SEED").env_remove("SYNTHPOSE_OUT");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_config(dir: &Path, frames: u32) -> std::path::PathBuf {
    let path = dir.join("scenario.json");
    let json = format!(
        r#"{{"schema_version": 1, "seed": 11, "frame_count": {frames}, "image_width": 200, "image_height": 160,
            "output": {{"emit_masks": true}}}}"#
    );
    fs::write(&path, json).unwrap();
    path
}

#[test]
fn generate_is_worker_invariant_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), 6);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = synthpose(&["generate", "--config", p(&cfg), "--workers", "1", "--out", p(&a)], &[]);
    let ob = synthpose(&["generate", "--config", p(&cfg), "--workers", "3", "--out", p(&b)], &[]);
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(code(&ob), 0);
    assert_eq!(fs::read(a.join("annotations.json")).unwrap(), fs::read(b.join("annotations.json")).unwrap());
    assert_eq!(fs::read(a.join("summary.json")).unwrap(), fs::read(b.join("summary.json")).unwrap());
    assert!(a.join("masks/00000005_semantic.pgm").is_file());
    assert!(!a.join("images").exists());
}

#[test]
fn env_overrides_seed_and_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), 2);
    let out = tmp.path().join("env");
    let o = synthpose(&["generate", "--config", p(&cfg)], &[("SYNTHPOSE_SEED", "99"), ("SYNTHPOSE_OUT", p(&out))]);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 99);

    // Flags beat the environment.
    let flag = tmp.path().join("flag");
    let o = synthpose(
        &["generate", "--config", p(&cfg), "--out", p(&flag), "--seed", "5"],
        &[("SYNTHPOSE_SEED", "99"), ("SYNTHPOSE_OUT", p(&out))],
    );
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(flag.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 5);
}

#[test]
fn stats_totals_match_generation_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), 10);
    let data = tmp.path().join("data");
    assert_eq!(code(&synthpose(&["generate", "--config", p(&cfg), "--out", p(&data)], &[])), 0);
    let rep = tmp.path().join("rep");
    let o = synthpose(&["stats", "--dataset", p(&data.join("annotations.json")), "--out", p(&rep)], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let gen: serde_json::Value = serde_json::from_slice(&fs::read(data.join("summary.json")).unwrap()).unwrap();
    let st: serde_json::Value = serde_json::from_slice(&fs::read(rep.join("summary.json")).unwrap()).unwrap();
    assert_eq!(st["images"], gen["frames"]);
    assert_eq!(st["instances"], gen["person_annotations"]);
    assert!(rep.join("heatmaps/left_wrist.pgm").is_file());
    assert!(rep.join("bbox_occupancy.pgm").is_file());

    let cmp = tmp.path().join("cmp");
    let a = data.join("annotations.json");
    let o = synthpose(&["compare", "--a", p(&a), "--b", p(&a), "--out", p(&cmp)], &[]);
    assert_eq!(code(&o), 0);
    let c: serde_json::Value = serde_json::from_slice(&fs::read(cmp.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(c["delta_mean_boxes_per_image"], 0.0);
    assert_eq!(c["occupancy_l1"], 0.0);
}

#[test]
fn lrsim_flat_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("trace.csv");
    let mut s = String::from("metric\n");
    for _ in 0..100 {
        s.push_str("42.0\n");
    }
    fs::write(&trace, s).unwrap();
    let out = tmp.path().join("log.csv");
    let o = synthpose(&["lrsim", "--trace", p(&trace), "--out", p(&out)], &[]);
    assert_eq!(code(&o), 0);
    let log = fs::read_to_string(&out).unwrap();
    let events: Vec<(&str, &str, &str)> = log
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[4] == "reduce_and_revert" || f[4] == "finished")
        .map(|f| (f[1], f[3], f[4]))
        .collect();
    assert_eq!(
        events,
        vec![
            ("38", "0.002", "reduce_and_revert"),
            ("57", "0.0002", "reduce_and_revert"),
            ("66", "0.00002", "finished")
        ]
    );
    // The run stops at the finishing evaluation.
    assert!(log.lines().last().unwrap().contains("finished"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&synthpose(&["nonsense"], &[])), 2);
    assert_eq!(code(&synthpose(&["validate", "--config", p(&tmp.path().join("missing.json"))], &[])), 4);

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"schema_version": 1, "seed": 1, "frame_count": 0}"#).unwrap();
    assert_eq!(code(&synthpose(&["validate", "--config", p(&bad)], &[])), 3);
    fs::write(&bad, r#"{"schema_version": 1, "seed": 1, "frame_count": 3, "randomisers": {}}"#).unwrap();
    let o = synthpose(&["validate", "--config", p(&bad)], &[]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("randomisers"));

    let garbage = tmp.path().join("garbage.json");
    fs::write(&garbage, "{not json").unwrap();
    let o = synthpose(&["stats", "--dataset", p(&garbage), "--out", p(&tmp.path().join("x"))], &[]);
    assert_eq!(code(&o), 5);

    let trace = tmp.path().join("t.csv");
    fs::write(&trace, "metric\n1.0\nabc\n").unwrap();
    let o = synthpose(&["lrsim", "--trace", p(&trace), "--out", p(&tmp.path().join("o.csv"))], &[]);
    assert_eq!(code(&o), 5);

    // Output path blocked by a regular file.
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let cfg = small_config(tmp.path(), 1);
    let o = synthpose(&["generate", "--config", p(&cfg), "--out", p(&blocker.join("sub"))], &[]);
    assert_eq!(code(&o), 4);
}

#[test]
fn validate_default_config() {
    let o = synthpose(&["validate", "--config", DEFAULT_CONFIG, "--print"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed["schema_version"], 1);
}
