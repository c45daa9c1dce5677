use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mmtrace::buffer::{sidecar_path, write_iq, ChannelRole, IqSidecar};
use mmtrace::{formats, pipeline, BasebandBuffer, Receiver};
use num_complex::Complex64;

fn mmtrace(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmtrace"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = mmtrace(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

/// Sorted (name, bytes) of every file in `dir`.
fn contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const QUICK: &[&str] = &["--stroke", "line", "--seed", "1"];

fn with<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(QUICK);
    v.extend_from_slice(extra);
    v
}

#[test]
fn simulate_writes_recordings_and_truth() {
    let d = tempfile::tempdir().unwrap();
    ok(&with("simulate", &[]), d.path());
    let names: Vec<String> = contents(d.path()).into_iter().map(|(n, _)| n).collect();
    let artifacts: Vec<&String> = names.iter().filter(|n| !n.ends_with(".json")).collect();
    assert_eq!(artifacts.len(), 5, "{names:?}");
    assert!(names.contains(&pipeline::TRUTH_FILE.to_string()));
    for rx in Receiver::BOTH {
        for role in [ChannelRole::Reference, ChannelRole::Surveillance] {
            let iq = pipeline::iq_file(rx, role);
            let side = sidecar_path(Path::new(&iq)).to_str().unwrap().to_string();
            assert!(names.contains(&iq) && names.contains(&side));
        }
    }
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&with("simulate", &[]), a.path());
    ok(&with("simulate", &[]), b.path());
    assert_eq!(contents(a.path()), contents(b.path()));
    let c = tempfile::tempdir().unwrap();
    ok(&["simulate", "--stroke", "line", "--seed", "2"], c.path());
    assert_ne!(contents(a.path()), contents(c.path()));
}

#[test]
fn pipeline_matches_stages() {
    let staged = tempfile::tempdir().unwrap();
    for cmd in ["simulate", "detect", "track", "evaluate"] {
        ok(&with(cmd, &[]), staged.path());
    }
    let whole = tempfile::tempdir().unwrap();
    let out = ok(&with("pipeline", &[]), whole.path());
    assert!(out.contains("p90"));
    assert_eq!(contents(staged.path()), contents(whole.path()));
}

#[test]
fn aoa_error_changes_the_trajectory() {
    let d = tempfile::tempdir().unwrap();
    ok(&with("pipeline", &[]), d.path());
    let clean = fs::read(d.path().join(pipeline::TRAJECTORY_FILE)).unwrap();
    let clean_stats = formats::read_error_stats(&d.path().join(pipeline::STATS_FILE)).unwrap();
    ok(&with("track", &["--aoa-error-deg", "10"]), d.path());
    ok(&with("evaluate", &[]), d.path());
    let off = fs::read(d.path().join(pipeline::TRAJECTORY_FILE)).unwrap();
    let off_stats = formats::read_error_stats(&d.path().join(pipeline::STATS_FILE)).unwrap();
    assert_ne!(clean, off);
    assert_ne!(clean_stats.per_point_errors_m, off_stats.per_point_errors_m);
}

#[test]
fn evaluate_truth_against_itself() {
    let d = tempfile::tempdir().unwrap();
    let truth = mmtrace::Scenario::los().truth_track().unwrap();
    formats::write_truth(&d.path().join(pipeline::TRUTH_FILE), &truth).unwrap();
    let traj = mmtrace::Trajectory {
        sensing_times_s: truth.times_s.clone(),
        points: truth.positions.clone(),
        flags: vec![mmtrace::tracker::PointFlag::Tracked; truth.len()],
        initial_behind_receiver: false,
    };
    formats::write_trajectory(&d.path().join(pipeline::TRAJECTORY_FILE), &traj).unwrap();
    let out = ok(&["evaluate"], d.path());
    assert!(out.contains("median error 0.000 mm"), "{out}");
    let stats: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join(pipeline::STATS_FILE)).unwrap()).unwrap();
    assert_eq!(stats["median_m"], 0.0);
    assert_eq!(stats["format_version"], 1);
}

#[test]
fn nlos_sidecars_record_the_gain() {
    let d = tempfile::tempdir().unwrap();
    ok(&["simulate", "--scenario", "nlos", "--stroke", "line"], d.path());
    for rx in Receiver::BOTH {
        let path = sidecar_path(&d.path().join(pipeline::iq_file(rx, ChannelRole::Surveillance)));
        let sc: serde_json::Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
        let g = sc["relative_gain_db"].as_f64().unwrap();
        assert!((g + 20.0).abs() < 1e-9, "{g}");
    }
}

/// Writes a reference of white noise and a surveillance copy shifted by
/// `fd` for both receivers.
fn tone_fixture(dir: &Path, fs: f64, seconds: f64, fd: f64) {
    let n = (fs * seconds) as usize;
    let x: Vec<Complex64> = (0..n)
        .map(|i| {
            let a = (i as f64 * 0.7).sin() * 1e3;
            Complex64::from_polar(1.0, a)
        })
        .collect();
    let y: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(0.1, -2.0 * std::f64::consts::PI * fd * i as f64 / fs))
        .collect();
    for rx in Receiver::BOTH {
        for (role, s) in [(ChannelRole::Reference, &x), (ChannelRole::Surveillance, &y)] {
            let b = BasebandBuffer::new(s.clone(), fs, 0.0).unwrap();
            let sc = IqSidecar::new(&b, role, 60e9);
            write_iq(&dir.join(pipeline::iq_file(rx, role)), &b, &sc).unwrap();
        }
    }
}

#[test]
fn tone_fixture_gives_constant_track() {
    let d = tempfile::tempdir().unwrap();
    tone_fixture(d.path(), 1e4, 1.0, 20.0);
    ok(&["detect"], d.path());
    for rx in Receiver::BOTH {
        let t = formats::read_doppler_track(&d.path().join(pipeline::doppler_file(rx))).unwrap();
        // ⌊(L − N_w)/N0⌋ + 1 windows.
        assert_eq!(t.len(), 91);
        assert!(t.doppler_hz.iter().all(|f| *f == Some(20.0)), "{:?}", t.doppler_hz);
        let map = formats::read_caf_map(&d.path().join(pipeline::caf_file(rx))).unwrap();
        assert_eq!(map.num_rows(), 91);
    }
}

#[test]
fn truncated_recording_is_a_parse_error() {
    let d = tempfile::tempdir().unwrap();
    tone_fixture(d.path(), 1e4, 0.5, 20.0);
    let iq = d.path().join(pipeline::iq_file(Receiver::Rx2, ChannelRole::Surveillance));
    let bytes = fs::read(&iq).unwrap();
    fs::write(&iq, &bytes[..bytes.len() - 5]).unwrap();
    let o = mmtrace(&["detect"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rx2_surveillance.iq"));
}

#[test]
fn missing_inputs_exit_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(mmtrace(&["track"], d.path()).status.code(), Some(2));
    assert_eq!(mmtrace(&["evaluate"], d.path()).status.code(), Some(2));
}

#[test]
fn bad_settings_exit_one() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate", "--gamma", "0.5"],
        vec!["simulate", "--stroke", "spiral"],
        vec!["simulate", "--train-cells", "0"],
        vec!["simulate", "--clutter-taps", "0"],
        vec!["simulate", "--doppler-max", "20"],
        vec!["simulate", "--bogus"],
    ] {
        assert_eq!(mmtrace(&args, d.path()).status.code(), Some(1), "{args:?}");
    }
    let bad = d.path().join("bad.json");
    fs::write(&bad, "{ \"seed\": \"x\" }").unwrap();
    assert_eq!(
        mmtrace(&["simulate", "--scenario", bad.to_str().unwrap()], d.path()).status.code(),
        Some(2)
    );
}

#[test]
fn knobs_reach_the_scenario() {
    let d = tempfile::tempdir().unwrap();
    ok(&with("simulate", &["--fs", "500000"]), d.path());
    let (buf, _) = mmtrace::buffer::read_iq(&d.path().join(pipeline::iq_file(Receiver::Rx1, ChannelRole::Reference))).unwrap();
    assert_eq!(buf.sample_rate_hz, 5e5);
    ok(&with("detect", &["--fs", "500000", "--doppler-max", "300", "--gamma", "4", "--train-cells", "20", "--clutter-taps", "8"]), d.path());
    let map = formats::read_caf_map(&d.path().join(pipeline::caf_file(Receiver::Rx1))).unwrap();
    assert_eq!(*map.doppler_bins_hz.last().unwrap(), 300.0);
}
