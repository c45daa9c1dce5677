//! CSV and JSON artifacts.
//!
//! Every CSV starts with a `# mmtrace <kind> format_version=<n>` line,
//! followed by a header row and numeric records. Missing Doppler values are
//! written as `NaN`.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::caf::{CafMap, DopplerTrack};
use crate::channel::TargetTrack;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::metrics::ErrorStats;
use crate::tracker::{PointFlag, Trajectory};
use crate::FORMAT_VERSION;

const CAF_COLUMNS: [&str; 3] = ["time_s", "doppler_hz", "magnitude_db"];
const DOPPLER_COLUMNS: [&str; 2] = ["time_s", "doppler_hz"];
const TRAJECTORY_COLUMNS: [&str; 4] = ["time_s", "x_m", "y_m", "flag"];
const TRUTH_COLUMNS: [&str; 3] = ["time_s", "x_m", "y_m"];
const CDF_COLUMNS: [&str; 2] = ["error_m", "fraction"];

fn write_csv(path: &Path, kind: &str, columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = format!("# mmtrace {kind} format_version={FORMAT_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        w.write_record(columns).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Records of a CSV artifact as raw string fields, after checking the
/// preamble and header. Each record carries its 1-based file line.
fn read_csv(path: &Path, kind: &str, columns: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let want = format!("# mmtrace {kind} format_version=");
    let version = first
        .trim_end()
        .strip_prefix(&want)
        .ok_or_else(|| Error::parse(path, format!("line 1: expected `{want}<n>`, found `{first}`")))?;
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::parse(
            path,
            format!("line 1: unsupported format_version {version} (expected {FORMAT_VERSION})"),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new().from_reader(rest.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(path, format!("line 2: {e}")))?
        .clone();
    if header.iter().ne(columns.iter().copied()) {
        return Err(Error::parse(
            path,
            format!("line 2: header {:?}, expected {:?}", header.iter().collect::<Vec<_>>(), columns),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() + 1).unwrap_or(0);
            Error::parse(path, format!("line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line() + 1).unwrap_or(0);
        out.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn num(path: &Path, line: u64, column: &str, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(path, format!("line {line}: column `{column}`: `{field}` is not a number")))
}

fn finite(path: &Path, line: u64, column: &str, field: &str) -> Result<f64> {
    let v = num(path, line, column, field)?;
    if !v.is_finite() {
        return Err(Error::parse(path, format!("line {line}: column `{column}` must be finite")));
    }
    Ok(v)
}

pub fn write_caf_map(path: &Path, map: &CafMap) -> Result<()> {
    let rows = map.sensing_times_s.iter().zip(&map.magnitudes).flat_map(|(t, row)| {
        map.doppler_bins_hz
            .iter()
            .zip(row)
            .map(move |(f, m)| vec![t.to_string(), f.to_string(), (20.0 * m.max(1e-300).log10()).to_string()])
    });
    write_csv(path, "caf_map", &CAF_COLUMNS, rows)
}

/// Reads a CAF map back; magnitudes come back linear. Delays are not
/// stored, so `best_delay_samples` is all zeros.
pub fn read_caf_map(path: &Path) -> Result<CafMap> {
    let recs = read_csv(path, "caf_map", &CAF_COLUMNS)?;
    let mut map = CafMap {
        sensing_times_s: vec![],
        doppler_bins_hz: vec![],
        magnitudes: vec![],
        best_delay_samples: vec![],
    };
    for (line, r) in recs {
        let t = finite(path, line, "time_s", &r[0])?;
        let f = finite(path, line, "doppler_hz", &r[1])?;
        let db = num(path, line, "magnitude_db", &r[2])?;
        if map.sensing_times_s.last() != Some(&t) {
            map.sensing_times_s.push(t);
            map.magnitudes.push(vec![]);
            map.best_delay_samples.push(0);
        }
        if map.sensing_times_s.len() == 1 {
            map.doppler_bins_hz.push(f);
        }
        map.magnitudes.last_mut().unwrap().push(10f64.powf(db / 20.0));
    }
    if map.magnitudes.iter().any(|r| r.len() != map.doppler_bins_hz.len()) {
        return Err(Error::parse(path, "rows do not all cover the same Doppler bins"));
    }
    Ok(map)
}

pub fn write_doppler_track(path: &Path, track: &DopplerTrack) -> Result<()> {
    let rows = track.sensing_times_s.iter().zip(&track.doppler_hz).map(|(t, f)| {
        vec![t.to_string(), f.map_or_else(|| "NaN".to_owned(), |f| f.to_string())]
    });
    write_csv(path, "doppler_track", &DOPPLER_COLUMNS, rows)
}

pub fn read_doppler_track(path: &Path) -> Result<DopplerTrack> {
    let mut track = DopplerTrack {
        sensing_times_s: vec![],
        doppler_hz: vec![],
    };
    for (line, r) in read_csv(path, "doppler_track", &DOPPLER_COLUMNS)? {
        track.sensing_times_s.push(finite(path, line, "time_s", &r[0])?);
        let f = num(path, line, "doppler_hz", &r[1])?;
        track.doppler_hz.push(if f.is_nan() { None } else { Some(f) });
    }
    track.validate().map_err(|e| Error::parse(path, e.to_string()))?;
    Ok(track)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let rows = (0..traj.len()).map(|i| {
        vec![
            traj.sensing_times_s[i].to_string(),
            traj.points[i].x.to_string(),
            traj.points[i].y.to_string(),
            traj.flags[i].as_str().to_owned(),
        ]
    });
    write_csv(path, "trajectory", &TRAJECTORY_COLUMNS, rows)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let mut traj = Trajectory {
        sensing_times_s: vec![],
        points: vec![],
        flags: vec![],
        initial_behind_receiver: false,
    };
    for (line, r) in read_csv(path, "trajectory", &TRAJECTORY_COLUMNS)? {
        traj.sensing_times_s.push(finite(path, line, "time_s", &r[0])?);
        traj.points.push(Point2::new(
            finite(path, line, "x_m", &r[1])?,
            finite(path, line, "y_m", &r[2])?,
        ));
        traj.flags.push(
            PointFlag::parse(r[3].trim())
                .ok_or_else(|| Error::parse(path, format!("line {line}: column `flag`: unknown flag `{}`", r[3])))?,
        );
    }
    traj.validate().map_err(|e| Error::parse(path, e.to_string()))?;
    Ok(traj)
}

pub fn write_truth(path: &Path, track: &TargetTrack) -> Result<()> {
    let rows = track
        .times_s
        .iter()
        .zip(&track.positions)
        .map(|(t, p)| vec![t.to_string(), p.x.to_string(), p.y.to_string()]);
    write_csv(path, "truth", &TRUTH_COLUMNS, rows)
}

pub fn read_truth(path: &Path) -> Result<TargetTrack> {
    let (mut times, mut pos) = (vec![], vec![]);
    for (line, r) in read_csv(path, "truth", &TRUTH_COLUMNS)? {
        times.push(finite(path, line, "time_s", &r[0])?);
        pos.push(Point2::new(
            finite(path, line, "x_m", &r[1])?,
            finite(path, line, "y_m", &r[2])?,
        ));
    }
    TargetTrack::new(times, pos).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_cdf(path: &Path, stats: &ErrorStats) -> Result<()> {
    let rows = stats.cdf.iter().map(|(e, f)| vec![e.to_string(), f.to_string()]);
    write_csv(path, "error_cdf", &CDF_COLUMNS, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("artifact serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_error_stats(path: &Path) -> Result<ErrorStats> {
    let s: ErrorStats = read_json(path)?;
    if s.format_version != FORMAT_VERSION {
        return Err(Error::parse(
            path,
            format!("field `format_version`: {} (expected {FORMAT_VERSION})", s.format_version),
        ));
    }
    Ok(s)
}
