use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use sarplan_core::ArmModel;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_sarplan");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn sarplan(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("SARPLAN_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("failed to start sarplan")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("killed by a signal")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn base_config() -> Value {
    let text = std::fs::read_to_string(configs().join("point_target.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Writes `cfg` into `dir` and returns its path as a string.
fn write_config(dir: &Path, cfg: &Value) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

struct Run {
    dir: TempDir,
    config: String,
}

impl Run {
    fn new(cfg: Value) -> Self {
        let dir = TempDir::new().unwrap();
        let config = write_config(dir.path(), &cfg);
        Run { dir, config }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, sub: &str, extra: &[&str]) -> Output {
        let out = self.out();
        let mut args = vec![sub, "--config", &self.config, "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        sarplan(&args, &[])
    }
}

#[test]
fn constraints_prints_the_report() {
    let run = Run::new(base_config());
    let o = run.exec("constraints", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let dr = report["range_resolution"].as_f64().unwrap();
    assert!((dr - 0.0375).abs() < 1e-3 * 0.0375, "{dr}");
    assert_eq!(report["schema_version"], 1);
    assert!(run.out().join("constraints.json").exists());
}

#[test]
fn missing_field_is_a_config_error_naming_the_field() {
    let mut cfg = base_config();
    cfg["radar"].as_object_mut().unwrap().remove("bandwidth");
    let o = Run::new(cfg).exec("constraints", &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("radar.bandwidth"), "{}", stderr(&o));
}

#[test]
fn denser_medium_halves_the_sample_spacing() {
    let spacing = |er: f64| {
        let mut cfg = base_config();
        cfg["scene"]["relative_permittivity"] = json!(er);
        let o = Run::new(cfg).exec("constraints", &[]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let r: Value = serde_json::from_slice(&o.stdout).unwrap();
        (r["sampling_spacing_x"].as_f64().unwrap(), r["sampling_spacing_y"].as_f64().unwrap())
    };
    let (air, dense) = (spacing(1.0), spacing(4.0));
    assert!((dense.0 - air.0 / 2.0).abs() < 1e-12, "{air:?} {dense:?}");
    assert!((dense.1 - air.1 / 2.0).abs() < 1e-12, "{air:?} {dense:?}");
}

fn full_scan() -> Value {
    let mut cfg = base_config();
    cfg["single_slice"] = json!(false);
    cfg
}

#[test]
fn planned_cruise_spacing_stays_below_the_limit() {
    let run = Run::new(full_scan());
    let o = run.exec("plan", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let samples = rows(&run.out().join("trajectory.csv"));
    let mut worst = 0.0f64;
    for w in samples.windows(2) {
        if w[0][8] == 1.0 && w[1][8] == 1.0 && w[0][2] == w[1][2] && w[0][3] == w[1][3] {
            worst = worst.max((w[1][1] - w[0][1]).abs());
        }
    }
    assert!((worst - 0.1 / 12.0).abs() < 1e-6, "{worst}");
    let plan: Value = serde_json::from_str(&std::fs::read_to_string(run.out().join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["slice_heights"].as_array().unwrap().len(), 43);
    assert!(plan["violations"].as_array().unwrap().is_empty());
}

#[test]
fn spotlight_follows_the_stripmap_path_with_different_attitude() {
    let run = Run::new(base_config());
    let trajectory = |mode: &str| {
        let o = run.exec("plan", &["--mode", mode]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        rows(&run.out().join("trajectory.csv"))
    };
    let (strip, spot) = (trajectory("stripmap"), trajectory("spotlight"));
    assert_eq!(strip.len(), spot.len());
    let mut turned = 0;
    for (a, b) in strip.iter().zip(&spot) {
        assert_eq!(a[..4], b[..4]);
        assert_eq!(a[8], b[8]);
        if (a[4] - b[4]).abs() > 1e-3 {
            turned += 1;
        }
    }
    assert!(turned > strip.len() / 2, "{turned} of {}", strip.len());
}

#[test]
fn velocity_above_the_sampling_cap_is_a_plan_error() {
    let run = Run::new(base_config());
    let o = run.exec("plan", &["--velocity", "0.2"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("Speed"), "{}", stderr(&o));
    // the offending plan is still written for inspection
    assert!(run.out().join("trajectory.csv").exists());
}

#[test]
fn ik_keeps_joints_within_limits() {
    let run = Run::new(full_scan());
    assert_eq!(code(&run.exec("plan", &[])), 0);
    let o = run.exec("ik", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let joints = rows(&run.out().join("joints.csv"));
    let poses = rows(&run.out().join("trajectory.csv"));
    assert_eq!(joints.len(), poses.len());
    let model = ArmModel::r17_like();
    for row in &joints {
        for (k, &q) in row[1..].iter().enumerate() {
            let (lo, hi) = model.joint_limits[k];
            assert!(q >= lo && q <= hi, "joint {k} = {q}");
        }
    }
}

#[test]
fn distant_scene_is_a_kinematics_error() {
    let mut cfg = base_config();
    cfg["scene"]["standoff_range"] = json!(10.0);
    for k in ["aperture_x", "aperture_y"] {
        cfg["scene"].as_object_mut().unwrap().remove(k);
    }
    let run = Run::new(cfg);
    assert_eq!(code(&run.exec("plan", &[])), 0);
    let o = run.exec("ik", &[]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn constant_pose_gives_constant_joints() {
    let run = Run::new(base_config());
    let path = run.dir.path().join("hold.csv");
    let mut text = String::from("time_s,x_m,y_m,z_m,qw,qx,qy,qz,imaging_flag\n");
    for i in 0..6 {
        text.push_str(&format!("{:.1},0.05,0.35,0.5,1,0,0,0,1\n", i as f64 * 0.1));
    }
    std::fs::write(&path, text).unwrap();
    let o = run.exec("ik", &["--trajectory", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let joints = rows(&run.out().join("joints.csv"));
    assert_eq!(joints.len(), 6);
    for row in &joints[1..] {
        assert_eq!(row[1..], joints[0][1..]);
    }
}

#[test]
fn seed_outside_limits_is_rejected() {
    let run = Run::new(base_config());
    assert_eq!(code(&run.exec("plan", &[])), 0);
    let o = run.exec("ik", &["--seed-joints", "0,0,0,0,0,9"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = run.exec("ik", &["--seed-joints", "0,0,0"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

fn small_image(cfg: &mut Value) {
    cfg["image"] = json!({ "dims": [40, 40, 1], "spacing": 0.008 });
}

#[test]
fn corrupted_echoes_are_an_io_error() {
    let mut cfg = base_config();
    small_image(&mut cfg);
    let run = Run::new(cfg);
    assert_eq!(code(&run.exec("plan", &[])), 0);
    assert_eq!(code(&run.exec("simulate", &[])), 0);
    let echoes = run.out().join("echoes.uwbe");
    let mut bytes = std::fs::read(&echoes).unwrap();
    bytes[0] ^= 0xff;
    std::fs::write(&echoes, bytes).unwrap();
    let o = run.exec("image", &[]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    assert!(stderr(&o).contains("echoes.uwbe"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = sarplan(&["constraints", "--config", "/nonexistent/run.json"], &[]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
}

#[test]
fn point_target_meets_its_expectations() {
    let run = Run::new(base_config());
    let expect = configs().join("expect_point.json");
    let o = run.exec("run", &["--expect", expect.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(run.out().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    for name in ["image.pgm", "image.json", "image.bin", "joints.csv", "plan.json", "constraints.json"] {
        assert!(run.out().join(name).exists(), "{name}");
    }
    let pgm = std::fs::read(run.out().join("image.pgm")).unwrap();
    assert!(pgm.starts_with(b"P2\n") || pgm.starts_with(b"P5\n"));
}

#[test]
fn failed_expectation_exits_with_one() {
    let mut cfg = base_config();
    small_image(&mut cfg);
    let run = Run::new(cfg);
    assert_eq!(code(&run.exec("run", &[])), 0);
    let expect = run.dir.path().join("strict.json");
    let strict = json!({
        "schema_version": 1,
        "peaks": [{ "position": [0.0, 0.85, 0.5], "width_x": [0.001, 0.002] }]
    });
    std::fs::write(&expect, strict.to_string()).unwrap();
    let out = run.out();
    let o = sarplan(&["verify", "--expect", expect.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn spotlight_pair_is_reported_resolved() {
    let text = std::fs::read_to_string(configs().join("pair_spotlight.json")).unwrap();
    let run = Run::new(serde_json::from_str(&text).unwrap());
    let expect = configs().join("expect_pair.json");
    let o = run.exec("run", &["--expect", expect.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(run.out().join("verify.json")).unwrap()).unwrap();
    let pair = report["checks"].as_array().unwrap().iter().find(|c| c["name"].as_str().unwrap().starts_with("pairs[0]"));
    assert_eq!(pair.unwrap()["passed"], true, "{report}");
}

#[test]
fn thread_count_comes_from_the_environment() {
    let mut cfg = base_config();
    small_image(&mut cfg);
    let run = Run::new(cfg);
    let out = run.out();
    let args = ["run", "--config", &run.config, "--out", out.to_str().unwrap()];
    assert_eq!(code(&sarplan(&args, &[("SARPLAN_THREADS", "2")])), 0);
    let o = sarplan(&args, &[("SARPLAN_THREADS", "lots")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("SARPLAN_THREADS"), "{}", stderr(&o));
}
