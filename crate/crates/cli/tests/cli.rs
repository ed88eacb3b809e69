use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use toolpose_core::export::{parse_scene_jsonl, parse_track_csv};
use toolpose_core::{CLASPER, SHAFT};

fn toolpose(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toolpose"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = toolpose(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn png_count(dir: &Path) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "png")
        })
        .count()
}

#[test]
fn synth_dolly_writes_frames_and_gt() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    ok(&["synth", "dolly", "--frames", "30", "--output", p(&out)]);
    assert_eq!(png_count(&out), 30);
    let gt = fs::read_to_string(out.join("gt.csv")).unwrap();
    assert!(gt.starts_with("#schema=v1\n"));
    assert_eq!(gt.lines().count(), 2 + 60);
    assert!(tmp.path().join("d/config.json").is_file());
}

#[test]
fn synth_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        ok(&[
            "synth",
            "combined",
            "--runs",
            "3",
            "--seed",
            "7",
            "--frames",
            "4",
            "--output",
            p(d),
        ]);
    }
    for run in ["run_01", "run_02", "run_03"] {
        assert_eq!(png_count(&a.join(run)), 4);
        for f in ["gt.csv", "frame_0001.png", "frame_0004.png"] {
            assert_eq!(
                fs::read(a.join(run).join(f)).unwrap(),
                fs::read(b.join(run).join(f)).unwrap()
            );
        }
    }
    let gt1 = fs::read(a.join("run_01/gt.csv")).unwrap();
    assert_ne!(gt1, fs::read(a.join("run_02/gt.csv")).unwrap());
}

#[test]
fn unknown_preset_lists_valid_ones() {
    let out = toolpose(&["synth", "nosuch", "--output", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in [
        "static",
        "translate_xy",
        "dolly",
        "yaw_spin",
        "pitch_tilt",
        "combined",
    ] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn track_writes_rows_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = tmp.path().join("syn");
    ok(&[
        "synth",
        "translate_xy",
        "--frames",
        "10",
        "--output",
        p(&syn),
    ]);
    let (t1, t2) = (tmp.path().join("t1"), tmp.path().join("t2"));
    for t in [&t1, &t2] {
        ok(&["track", "--input", p(&syn), "--output", p(t)]);
        ok(&["export-scene", "--input", p(t)]);
        ok(&["eval", "--input", p(t), "--gt", p(&syn)]);
    }
    for f in [
        "track.csv",
        "track.json",
        "boxes.csv",
        "scene.jsonl",
        "report.txt",
        "report.csv",
        "report_2d.csv",
    ] {
        assert_eq!(
            fs::read(t1.join(f)).unwrap(),
            fs::read(t2.join(f)).unwrap(),
            "{f}"
        );
    }
    let rows = parse_track_csv(
        &fs::read_to_string(t1.join("track.csv")).unwrap(),
        "track.csv",
    )
    .unwrap();
    assert_eq!(rows.len(), 20);
    let scene = parse_scene_jsonl(
        fs::read(t1.join("scene.jsonl")).unwrap().as_slice(),
        "scene",
    )
    .unwrap();
    assert_eq!(scene.len(), 10);
    for f in &scene {
        let shaft = f.parts.iter().find(|c| c.k == SHAFT).unwrap();
        let clasper = f.parts.iter().find(|c| c.k == CLASPER).unwrap();
        assert_eq!(clasper.base, shaft.tip());
    }
}

#[test]
fn box_mode_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = tmp.path().join("syn");
    ok(&["synth", "pitch_tilt", "--frames", "6", "--output", p(&syn)]);
    let t = tmp.path().join("t");
    ok(&[
        "track",
        "--input",
        p(&syn),
        "--output",
        p(&t),
        "--box-mode",
        "min-rect",
    ]);
    let rows = parse_track_csv(
        &fs::read_to_string(t.join("track.csv")).unwrap(),
        "track.csv",
    )
    .unwrap();
    assert!(rows
        .iter()
        .all(|r| r.droll.abs() < 1e-9 && r.dpitch.abs() < 1e-9));
}

#[test]
fn missing_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = tmp.path().join("syn");
    ok(&["synth", "static", "--frames", "2", "--output", p(&syn)]);
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"parts": []}"#).unwrap();
    let out = toolpose(&[
        "track",
        "--config",
        p(&cfg),
        "--input",
        p(&syn),
        "--output",
        p(&tmp.path().join("t")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("camera"));
}

#[test]
fn missing_frames_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = tmp.path().join("syn");
    ok(&["synth", "static", "--frames", "2", "--output", p(&syn)]);
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = toolpose(&[
        "track",
        "--config",
        p(&syn.join("config.json")),
        "--input",
        p(&empty),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn eval_rejects_other_schema_versions() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = tmp.path().join("syn");
    ok(&["synth", "static", "--frames", "3", "--output", p(&syn)]);
    let t = tmp.path().join("t");
    ok(&["track", "--input", p(&syn), "--output", p(&t)]);
    let csv =
        fs::read_to_string(t.join("track.csv"))
            .unwrap()
            .replacen("#schema=v1", "#schema=v0", 1);
    fs::write(t.join("track.csv"), csv).unwrap();
    let out = toolpose(&["eval", "--input", p(&t), "--gt", p(&syn)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("#schema=v1"));
}
