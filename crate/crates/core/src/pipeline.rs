//! File-based processing stages. Each stage reads its inputs from a run
//! directory and writes its outputs back into it.
//!
//! | stage    | reads                               | writes                                  |
//! |----------|-------------------------------------|-----------------------------------------|
//! | simulate | scenario                            | `rx{1,2}_{reference,surveillance}.iq` + `.json`, `truth.csv` |
//! | detect   | IQ recordings                       | `rx{1,2}_caf.csv`, `rx{1,2}_doppler.csv` |
//! | track    | Doppler tracks, `truth.csv`*        | `trajectory.csv`                        |
//! | evaluate | `trajectory.csv`, `truth.csv`       | `error_stats.json`, `error_cdf.csv`     |
//!
//! *only when the scenario gives no initial bearings.

use std::fs;
use std::path::{Path, PathBuf};

use crate::buffer::{read_iq, write_iq, ChannelRole, IqSidecar};
use crate::caf::{caf_spectrogram_with_clutter, detect_track, CafMap, DopplerTrack};
use crate::channel::{simulate_reference, simulate_surveillance};
use crate::error::{Error, Result};
use crate::formats;
use crate::geometry::Receiver;
use crate::metrics::{trajectory_error, ErrorStats};
use crate::scenario::Scenario;
use crate::tracker::{align_tracks, track_trajectory, Trajectory};
use crate::waveform::gen_transmit_signal;

pub const TRUTH_FILE: &str = "truth.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const STATS_FILE: &str = "error_stats.json";
pub const CDF_FILE: &str = "error_cdf.csv";

pub fn iq_file(rx: Receiver, role: ChannelRole) -> String {
    format!("{}_{}.iq", rx.label(), role.as_str())
}

pub fn caf_file(rx: Receiver) -> String {
    format!("{}_caf.csv", rx.label())
}

pub fn doppler_file(rx: Receiver) -> String {
    format!("{}_doppler.csv", rx.label())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Generates the four IQ recordings and the ground truth. Returns the
/// written `.iq` and truth paths (sidecars sit next to the `.iq` files).
pub fn simulate(s: &Scenario, dir: &Path) -> Result<Vec<PathBuf>> {
    s.validate()?;
    ensure_dir(dir)?;
    let truth = s.truth_track()?;
    let tx = gen_transmit_signal(&s.transmit_config(&truth))?;
    let scene = s.scene();
    let fc = s.geometry.fc_hz;
    let mut written = Vec::new();
    for rx in Receiver::BOTH {
        let reference = simulate_reference(&scene, &tx, rx)?;
        let surveillance = simulate_surveillance(&scene, &tx, &truth, rx)?;
        for (role, buf) in [(ChannelRole::Reference, reference), (ChannelRole::Surveillance, surveillance)] {
            let mut sc = IqSidecar::new(&buf, role, fc);
            sc.receiver = Some(rx.index() as u8 + 1);
            if role == ChannelRole::Surveillance {
                sc.relative_gain_db = Some(scene.receiver(rx).relative_gain_db());
            }
            let path = dir.join(iq_file(rx, role));
            write_iq(&path, &buf, &sc)?;
            written.push(path);
        }
    }
    let truth_path = dir.join(TRUTH_FILE);
    formats::write_truth(&truth_path, &truth)?;
    written.push(truth_path);
    Ok(written)
}

/// Clutter cancellation, CAF and detection for one receiver.
pub fn detect_receiver(s: &Scenario, dir: &Path, rx: Receiver) -> Result<(CafMap, DopplerTrack)> {
    let ref_path = dir.join(iq_file(rx, ChannelRole::Reference));
    let surv_path = dir.join(iq_file(rx, ChannelRole::Surveillance));
    let (y_r, _) = read_iq(&ref_path)?;
    let (y_s, _) = read_iq(&surv_path)?;
    if y_r.sample_rate_hz != y_s.sample_rate_hz || y_r.epoch_s != y_s.epoch_s {
        return Err(Error::Contract(format!(
            "{} and {} differ in sample rate or epoch",
            ref_path.display(),
            surv_path.display()
        )));
    }
    let cfg = s.sensing.to_config(y_r.sample_rate_hz);
    let map = caf_spectrogram_with_clutter(&y_s, &y_r, &cfg, &s.clutter)?;
    let track = detect_track(&map, &cfg);
    Ok((map, track))
}

pub fn detect(s: &Scenario, dir: &Path) -> Result<Vec<DopplerTrack>> {
    s.validate()?;
    let mut tracks = Vec::new();
    for rx in Receiver::BOTH {
        let (map, track) = detect_receiver(s, dir, rx)?;
        formats::write_caf_map(&dir.join(caf_file(rx)), &map)?;
        formats::write_doppler_track(&dir.join(doppler_file(rx)), &track)?;
        tracks.push(track);
    }
    Ok(tracks)
}

pub fn track(s: &Scenario, dir: &Path) -> Result<Trajectory> {
    s.validate()?;
    let t1 = formats::read_doppler_track(&dir.join(doppler_file(Receiver::Rx1)))?;
    let t2 = formats::read_doppler_track(&dir.join(doppler_file(Receiver::Rx2)))?;
    let fused = align_tracks(&t1, &t2)?;
    let t0 = fused.pairs[0].time_s - 0.5 * fused.period_s;
    // Truth is only needed to derive bearings.
    let obs = if let Some(mut o) = s.initial_observation {
        o.aoa_error_rad += s.aoa_error_deg.to_radians();
        o
    } else {
        let truth = formats::read_truth(&dir.join(TRUTH_FILE))?;
        s.initial_observation(&truth, t0)?
    };
    let traj = track_trajectory(&fused, &obs, &s.geometry, &s.tracker)?;
    formats::write_trajectory(&dir.join(TRAJECTORY_FILE), &traj)?;
    Ok(traj)
}

pub fn evaluate(dir: &Path) -> Result<ErrorStats> {
    let traj = formats::read_trajectory(&dir.join(TRAJECTORY_FILE))?;
    let truth = formats::read_truth(&dir.join(TRUTH_FILE))?;
    let stats = trajectory_error(&traj, &truth)?;
    formats::write_json(&dir.join(STATS_FILE), &stats)?;
    formats::write_cdf(&dir.join(CDF_FILE), &stats)?;
    Ok(stats)
}

/// simulate → detect → track → evaluate.
pub fn run_all(s: &Scenario, dir: &Path) -> Result<ErrorStats> {
    simulate(s, dir)?;
    detect(s, dir)?;
    track(s, dir)?;
    evaluate(dir)
}
