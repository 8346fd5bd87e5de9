use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use xilc::config::parse_config;
use xilc::export::MetricsSummary;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn xilc(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_xilc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn read_trace(path: &Path) -> Vec<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.join(","), "t,rx,ry,rz,x,y,z,hx,hy,hz,sx,sy,sz");
    rdr.records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn rms_of(rows: &[Vec<f64>], cols: std::ops::Range<usize>) -> f64 {
    let mut ss = 0.0;
    let mut count = 0;
    for row in rows {
        for c in cols.clone() {
            ss += row[c] * row[c];
            count += 1;
        }
    }
    (ss / count as f64).sqrt()
}

#[test]
fn check_prints_margin_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example("fig3.cfg");
    let (code, out, _) = xilc(&["check", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code, 0);
    assert!(out.contains("margin:"));
    assert!(out.contains("strict bound"));
    assert!(out.contains("unified bound"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn run_exports_consistent_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fig3");
    let cfg = example("fig3.cfg");
    let (code, _, err) = xilc(
        &["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");

    let text = fs::read_to_string(out_dir.join("target.csv")).unwrap();
    assert_eq!(text.lines().count(), 902);

    let summary: MetricsSummary =
        serde_json::from_str(&fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    for agent in &summary.agents {
        let rows = read_trace(&out_dir.join(&agent.file));
        let rows = &rows[..agent.samples];
        assert!(
            (rms_of(rows, 7..10) - agent.rms_total).abs() < 1e-12,
            "{}",
            agent.file
        );
        for axis in 0..3 {
            assert!((rms_of(rows, 7 + axis..8 + axis) - agent.rms[axis]).abs() < 1e-12);
        }
        assert!(agent.ratio_vs_baseline >= 0.0);
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    for entry in manifest["files"].as_array().unwrap() {
        let file = out_dir.join(entry["file"].as_str().unwrap());
        assert!(file.exists());
        if let Some(rows) = entry["rows"].as_u64() {
            let lines = fs::read_to_string(&file).unwrap().lines().count() as u64;
            assert_eq!(lines, rows + 1);
        }
    }
}

#[test]
fn learning_beats_baseline_on_agent_transfer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example("fig5.cfg");
    let out = dir.path().join("fig5");
    let args = |cmd| vec![cmd, cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(xilc(&args("baseline"), dir.path()).0, 0);
    assert_eq!(xilc(&args("run"), dir.path()).0, 0);
    assert!(out.join("manifest.json").exists());
    assert!(out.join("baseline/manifest.json").exists());
    let base = read_trace(&out.join("baseline/target.csv"));
    let learned = read_trace(&out.join("target.csv"));
    for axis in 0..3 {
        let a = rms_of(&learned, 7 + axis..8 + axis);
        let b = rms_of(&base, 7 + axis..8 + axis);
        assert!(a < b || b == 0.0, "axis {axis}: {a} vs {b}");
    }
    assert!(rms_of(&learned, 7..10) < rms_of(&base, 7..10));
}

#[test]
fn refused_run_exits_two_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(example("fig3.cfg"))
        .unwrap()
        .replace("taps = 16", "taps = 1");
    let cfg = dir.path().join("coarse.cfg");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = xilc(
        &["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("margin"));
    assert!(!out.exists());
    let (code, _, _) = xilc(
        &[
            "run",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--enforce",
            "none",
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
}

#[test]
fn validation_errors_exit_one_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(example("fig5.cfg"))
        .unwrap()
        .replace("agent = \"trainer\"", "agent = \"uav9\"");
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, text).unwrap();
    let (code, _, err) = xilc(&["check", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code, 1);
    assert!(err.contains("trainers[0].agent"), "{err}");
    assert_eq!(xilc(&["run", "missing.cfg"], dir.path()).0, 1);
    assert_eq!(xilc(&["frobnicate"], dir.path()).0, 1);
}

#[test]
fn design_reports_filters_and_approximations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example("fig6.cfg");
    let (code, out, _) = xilc(
        &["design", cfg.to_str().unwrap(), "--grid-points", "128"],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert!(out.contains("learning filter: taps 16, lead 1"));
    assert!(out.contains("dynamics map fit residual"));
    assert!(out.contains("max |Fk - F|"));
}

#[test]
fn shipped_configs_round_trip_and_match_their_experiments() {
    for name in ["fig3.cfg", "fig5.cfg", "fig6.cfg"] {
        let cfg = parse_config(example(name)).unwrap();
        let again = xilc::config::parse_config_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg, "{name}");
    }
    let fig6 = parse_config(example("fig6.cfg"))
        .unwrap()
        .resolve::<f64>()
        .unwrap();
    assert_eq!(fig6.trainers.len(), 1);
    assert_eq!(fig6.trainers[0].scenario.scale, [2.0, 0.5, 0.5]);
    assert_ne!(fig6.trainers[0].agent.g, fig6.target.g);
}
