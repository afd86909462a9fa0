use std::path::Path;
use std::process::Command;

use dcm_core::footstep::{FootSide, Footstep};
use dcm_core::lipm::{step_exact, PendulumParams, SimplifiedState};
use dcm_core::polygon::{FootSize, SupportPolygon};
use dcm_core::Point2;
use dcm_sim::compare::{compare_architectures, write_comparison_csv};
use dcm_sim::{run_scenario, Architecture, FallDetector, Metrics, Scenario};
use dcm_sim::scenario::NoiseSection;
use dcm_wholebody::Mode;
use proptest::prelude::*;

fn scenario_file(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    Scenario::from_file(&path).unwrap()
}

fn csv_bytes(s: &Scenario) -> Vec<u8> {
    let r = run_scenario(s).unwrap();
    let mut buf = Vec::new();
    r.traces.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn standing_without_noise_holds_the_dcm() {
    let r = run_scenario(&scenario_file("standing.toml")).unwrap();
    assert!(r.metrics.passed());
    assert!(r.metrics.max_dcm_error < 1e-6, "{:e}", r.metrics.max_dcm_error);
    assert_eq!(r.metrics.fallback_cycles, 0);
}

#[test]
fn same_seed_gives_identical_traces() {
    let mut s = Scenario::walking(6.0, 0.15);
    s.seed = 11;
    let a = csv_bytes(&s);
    assert_eq!(a, csv_bytes(&s));
    s.seed = 12;
    assert_ne!(a, csv_bytes(&s));
}

#[test]
fn metrics_recomputed_from_the_dump_are_bitwise_equal() {
    let mut s = Scenario::walking(8.0, 0.19);
    s.seed = 3;
    let r = run_scenario(&s).unwrap();
    assert_eq!(Metrics::from_traces(&r.traces), r.metrics);

    let dir = tempfile::tempdir().unwrap();
    r.write_outputs(dir.path()).unwrap();
    let summary: serde_json::Value = serde_json::from_reader(std::fs::File::open(dir.path().join("summary.json")).unwrap()).unwrap();
    let reported = &summary["metrics"];
    let mut rdr = csv::Reader::from_path(dir.path().join("traces.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (mut max_dcm, mut sum_dcm, mut max_com, mut sum_com, mut n) = (0.0_f64, 0.0, 0.0_f64, 0.0, 0);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let p = |a: &str, b: &str| Point2::new(rec[col(a)].parse().unwrap(), rec[col(b)].parse().unwrap());
        let e_dcm = (p("dcm_x", "dcm_y") - p("dcm_ref_x", "dcm_ref_y")).norm();
        let e_com = (p("com_x", "com_y") - p("com_ref_x", "com_ref_y")).norm();
        max_dcm = max_dcm.max(e_dcm);
        max_com = max_com.max(e_com);
        sum_dcm += e_dcm;
        sum_com += e_com;
        n += 1;
    }
    assert_eq!(n, reported["cycles"].as_u64().unwrap() as usize);
    assert_eq!(max_dcm.to_bits(), reported["max_dcm_error"].as_f64().unwrap().to_bits());
    assert_eq!(max_com.to_bits(), reported["max_com_error"].as_f64().unwrap().to_bits());
    assert_eq!((sum_dcm / n as f64).to_bits(), reported["mean_dcm_error"].as_f64().unwrap().to_bits());
    assert_eq!((sum_com / n as f64).to_bits(), reported["mean_com_error"].as_f64().unwrap().to_bits());
}

#[test]
fn without_noise_position_and_velocity_modes_agree() {
    let mut s = Scenario::walking(10.0, 0.19);
    s.noise = NoiseSection::none();
    s.architecture.mode = Mode::Position;
    let a = run_scenario(&s).unwrap();
    s.architecture.mode = Mode::Velocity;
    let b = run_scenario(&s).unwrap();
    assert_eq!(a.traces.rows.len(), b.traces.rows.len());
    let mut worst = 0.0_f64;
    for (x, y) in a.traces.rows.iter().zip(&b.traces.rows) {
        worst = worst
            .max((x.dcm - y.dcm).norm())
            .max((x.com - y.com).norm())
            .max((x.zmp - y.zmp).norm())
            .max((x.left - y.left).norm())
            .max((x.right - y.right).norm());
    }
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn slow_walking_passes_for_every_architecture() {
    let base = Scenario::walking(8.0, 0.05);
    let (rows, points) = compare_architectures(&base, &[0.05]).unwrap();
    assert_eq!(points.len(), 4);
    assert!(points.iter().all(|p| p.passed), "{points:?}");
    assert_eq!(rows.len(), 4);
    let mut buf = Vec::new();
    write_comparison_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "SimplifiedModelControl,WholeBodyQPControl,MaxStraightVelocity");
    assert_eq!(lines.len(), 5);
    for (line, arch) in lines[1..].iter().zip(Architecture::ALL) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], arch.controller.label());
        assert_eq!(fields[2], "0.05");
    }
}

fn open_loop_fall_time(threshold: f64, offset: f64) -> Option<f64> {
    let params = PendulumParams::new(9.81, 0.53).unwrap();
    let poly = SupportPolygon::foot(&Footstep::new(FootSide::Left, Point2::zeros(), 0.0, 0.0), FootSize::default()).unwrap();
    let mut state = SimplifiedState::from_com_dcm(Point2::zeros(), Point2::new(offset, 0.0), params.omega());
    let mut detector = FallDetector::new(threshold, 0.53);
    let dt = 0.01;
    for k in 1..=1000 {
        state = step_exact(&state, Point2::zeros(), &params, dt).unwrap();
        if detector.update(k as f64 * dt, state.dcm, &poly, 0.53) {
            break;
        }
    }
    detector.fell_at()
}

#[test]
fn open_loop_divergence_is_detected() {
    let t = open_loop_fall_time(0.3, 0.01).expect("no fall detected");
    assert!(t > 0.0 && t < 2.0, "{t}");
}

proptest! {
    #[test]
    fn halving_the_threshold_never_delays_detection(threshold in 0.01f64..1.0, offset in 0.001f64..0.2) {
        let full = open_loop_fall_time(threshold, offset).unwrap();
        let half = open_loop_fall_time(0.5 * threshold, offset).unwrap();
        prop_assert!(half <= full);
    }
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dcm-sim"))
}

#[test]
fn cli_reports_config_errors_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "duration = 20.0\nno_such_key = 1\n").unwrap();
    let out = cli().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("no_such_key"));
}

#[test]
fn cli_run_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    std::fs::write(&cfg, "duration = 6.0\nseed = 4\n[walk.command]\nkind = \"velocity\"\nforward = 0.1\nangular = 0.0\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = cli().args(["run", "--seed", "9", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 9);
    let traces = std::fs::read_to_string(out_dir.join("traces.csv")).unwrap();
    assert_eq!(traces.lines().count(), 601);
}

#[test]
fn cli_rejects_malformed_arguments() {
    let out = cli().args(["sweep", "--config", "x.toml", "--velocities", "fast", "--out", "o"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
