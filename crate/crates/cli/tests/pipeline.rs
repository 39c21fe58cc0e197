use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use motionaware_cli::data::read_innovations;
use motionaware_cli::{simulate, train, NormalityModel, PipelineConfig, Stage, FORMAT_VERSION};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motionaware"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn trained(root: &Path) -> NormalityModel {
    let cfg = PipelineConfig::default();
    simulate(&cfg, &root.join("data"), false).unwrap();
    train(&cfg, &root.join("data"), &root.join("model")).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn saved_model_reloads_and_resaves_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let model = trained(tmp.path());
    let loaded = NormalityModel::load(&tmp.path().join("model")).unwrap();
    assert_eq!(loaded.zones, model.zones);
    assert_eq!(loaded.dynamics, model.dynamics);
    loaded.save(&tmp.path().join("again")).unwrap();
    assert_eq!(files(&tmp.path().join("model")), files(&tmp.path().join("again")));
}

#[test]
fn model_version_mismatch_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    trained(tmp.path());
    let path = tmp.path().join("model/model.json");
    let text = fs::read_to_string(&path).unwrap();
    let bumped = text.replacen(
        &format!("\"format_version\": {FORMAT_VERSION}"),
        &format!("\"format_version\": {}", FORMAT_VERSION + 1),
        1,
    );
    assert_ne!(text, bumped);
    fs::write(&path, bumped).unwrap();
    let out = bin(tmp.path(), &["detect"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn empty_training_directory_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir_all(tmp.path().join("data/train")).unwrap();
    let out = bin(tmp.path(), &["train"]);
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr(&out);
    assert!(msg.contains("no trajectories"), "{msg}");
    assert!(msg.contains("load"), "{msg}");
}

#[test]
fn invalid_configuration_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.cfg"), "kf.q = -1\n").unwrap();
    let out = bin(tmp.path(), &["--config", "bad.cfg", "simulate"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    fs::write(tmp.path().join("unknown.cfg"), "kf.qq = 1\n").unwrap();
    let out = bin(tmp.path(), &["--config", "unknown.cfg", "simulate"]);
    assert_eq!(out.status.code(), Some(2));

    let out = bin(tmp.path(), &["--set", "detect.xi_thres=abc", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("data").exists());
}

#[test]
fn leaving_the_modelled_area_is_flagged_out_of_support() {
    let tmp = tempfile::tempdir().unwrap();
    trained(tmp.path());
    let test_dir = tmp.path().join("probe");
    fs::create_dir_all(&test_dir).unwrap();
    // Along the bottom edge of the patrol track, then straight down out of
    // the arena.
    let mut csv = String::from("k,t,x,y,frame_id\n");
    for k in 0..30 {
        let (x, y) = if k < 10 { (8.0 + 1.25 * 0.2 * k as f64, 4.0) } else { (15.0, 4.0 - 0.5 * (k - 9) as f64) };
        csv.push_str(&format!("{k},{},{x},{y},{k}\n", 0.2 * k as f64));
    }
    fs::write(test_dir.join("probe.csv"), csv).unwrap();
    let out = bin(tmp.path(), &["detect", "--data", "probe"]);
    assert!(out.status.success(), "{}", stderr(&out));

    let recs = read_innovations(&tmp.path().join("out/probe_innovation.csv"), Stage::Detect).unwrap();
    assert_eq!(recs.len(), 29);
    assert!(recs[..8].iter().all(|r| !r.out_of_support));
    let tail = &recs[recs.len() - 5..];
    assert!(tail.iter().all(|r| r.out_of_support && r.abnormal && r.zone.is_none()));
    assert!(tail.iter().all(|r| r.xi == f64::MAX));
}

#[test]
fn fusion_joins_frame_scores_by_time_index() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    fs::write(
        root.join("sl.csv"),
        "k,t,zone,eps_x,eps_y,xi,abnormal,out_of_support\n\
         1,0.2,1,0.0,0.0,0.1,0,0\n\
         2,0.4,1,0.5,0.0,0.5,1,0\n\
         3,0.6,1,0.0,0.0,0.1,0,0\n",
    )
    .unwrap();
    fs::write(
        root.join("pl.csv"),
        "k,group,s_o,s_f,s_po,s_pf,y_tilde,fused_y,abnormal\n\
         2,1,0.1,0.2,0.3,0.4,0.8,0.3,1\n\
         2,2,0.1,0.2,0.3,0.4,0.3,0.3,0\n\
         3,1,0.1,0.2,0.3,0.4,0.9,0.7,1\n\
         3,2,0.1,0.2,0.3,0.4,0.7,0.7,1\n",
    )
    .unwrap();
    let out = bin(root, &["fuse", "--sl", "sl.csv", "--pl", "pl.csv", "--out", "f"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let fused = fs::read_to_string(root.join("f/fused.csv")).unwrap();
    assert_eq!(
        fused,
        "k,t,xi,sl_abnormal,y_tilde,pl_abnormal\n\
         1,0.2,0.1,0,,\n\
         2,0.4,0.5,1,0.3,0\n\
         3,0.6,0.1,0,0.7,1\n"
    );

    let out = bin(root, &["--set", "pl.y_thres=0.2", "fuse", "--sl", "sl.csv", "--pl", "pl.csv", "--out", "g"]);
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("g/fuse_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["sl_only"], false);
    assert_eq!(summary["joined"], 2);
    assert_eq!(summary["overlap_ratio"], 0.5);
    assert_eq!(summary["events"][0]["peak_lag"], 1);

    fs::write(root.join("far.csv"), "k,group,s_o,s_f,s_po,s_pf,y_tilde,fused_y,abnormal\n90,1,0,0,0,0,0.5,0.5,1\n")
        .unwrap();
    let out = bin(root, &["fuse", "--sl", "sl.csv", "--pl", "far.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("do not overlap"));
}
