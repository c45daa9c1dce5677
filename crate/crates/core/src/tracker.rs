//! Two-receiver Doppler fusion and dead reckoning.
//!
//! With AoAs φ₁, φ₂ at the receivers and AoD at the transmitter, the Doppler
//! seen by receiver i for a target moving at speed v in direction θ is
//!
//!   fᵢ = −(2fc/c)·v·cos(θ − μᵢ)·cos δᵢ,   μᵢ = (φᵢ + aod)/2,  δᵢ = (φᵢ − aod)/2.
//!
//! This is linear in (v·cosθ, v·sinθ), so two receivers pin the velocity
//! down; integrating it from a triangulated start point gives the track.

use serde::{Deserialize, Serialize};

use crate::caf::DopplerTrack;
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point2, Receiver};

/// Relative determinant below which the velocity system is singular.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Relative determinant below which the two bearing rays count as parallel.
const PARALLEL_TOL: f64 = 1e-10;

/// (φ₁, φ₂, aod) in radians, four-quadrant.
pub fn angles_from_position(p: Point2, geom: &Geometry) -> Result<(f64, f64, f64)> {
    geom.check_clear_of_nodes(p)?;
    Ok((
        p.bearing_from(geom.rx_pos(Receiver::Rx1)),
        p.bearing_from(geom.rx_pos(Receiver::Rx2)),
        p.bearing_from(geom.tx_pos),
    ))
}

/// Forward model: the Doppler pair produced by motion (v, θ) at `p`.
pub fn doppler_from_motion(p: Point2, v: f64, theta: f64, geom: &Geometry) -> Result<(f64, f64)> {
    let rows = velocity_rows(p, geom)?;
    let (vx, vy) = (v * theta.cos(), v * theta.sin());
    Ok((rows[0][0] * vx + rows[0][1] * vy, rows[1][0] * vx + rows[1][1] * vy))
}

/// Rows −(2fc/c)·cos δᵢ·[cos μᵢ, sin μᵢ] of the linear Doppler model.
pub fn velocity_rows(p: Point2, geom: &Geometry) -> Result<[[f64; 2]; 2]> {
    let (phi1, phi2, aod) = angles_from_position(p, geom)?;
    let k = -geom.doppler_scale();
    let row = |phi: f64| {
        let mu = 0.5 * (phi + aod);
        let delta = 0.5 * (phi - aod);
        let g = k * delta.cos();
        [g * mu.cos(), g * mu.sin()]
    };
    Ok([row(phi1), row(phi2)])
}

fn wrap_heading(theta: f64) -> f64 {
    if theta <= -std::f64::consts::PI {
        theta + 2.0 * std::f64::consts::PI
    } else {
        theta
    }
}

/// Inverts the Doppler model at `p`. A zero pair gives `v = 0` and hands
/// back `prev_heading_rad`, since direction is unobservable at rest.
pub fn solve_velocity(f1: f64, f2: f64, p: Point2, geom: &Geometry, prev_heading_rad: f64) -> Result<(f64, f64)> {
    let [a, b] = velocity_rows(p, geom)?;
    let na = a[0].hypot(a[1]);
    let nb = b[0].hypot(b[1]);
    let scale = geom.doppler_scale();
    if na < DEGENERACY_TOL * scale || nb < DEGENERACY_TOL * scale {
        return Err(Error::DegenerateGeometry(format!(
            "target at ({:.4}, {:.4}) lies on a transmitter-receiver baseline",
            p.x, p.y
        )));
    }
    let det = a[0] * b[1] - a[1] * b[0];
    if det.abs() < DEGENERACY_TOL * na * nb {
        return Err(Error::DegenerateGeometry(format!(
            "bisector directions parallel at ({:.4}, {:.4})",
            p.x, p.y
        )));
    }
    if f1 == 0.0 && f2 == 0.0 {
        return Ok((0.0, prev_heading_rad));
    }
    let vx = (f1 * b[1] - a[1] * f2) / det;
    let vy = (a[0] * f2 - f1 * b[0]) / det;
    Ok((vx.hypot(vy), wrap_heading(vy.atan2(vx))))
}

/// Dead-reckoning step `p + v·dt·(cos θ, sin θ)`.
pub fn step_position(p: Point2, v: f64, theta: f64, dt_s: f64) -> Point2 {
    p + Point2::from_polar(v * dt_s, theta)
}

/// Bearings of the target at the first sensing instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialObservation {
    pub aoa_rx1_rad: f64,
    pub aoa_rx2_rad: f64,
    /// Added to both bearings before triangulating.
    #[serde(default)]
    pub aoa_error_rad: f64,
}

impl InitialObservation {
    /// Exact bearings of `p`.
    pub fn from_position(p: Point2, geom: &Geometry) -> Result<Self> {
        let (a1, a2, _) = angles_from_position(p, geom)?;
        Ok(Self {
            aoa_rx1_rad: a1,
            aoa_rx2_rad: a2,
            aoa_error_rad: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialFix {
    pub position: Point2,
    /// The intersection lies behind at least one receiver.
    pub behind_receiver: bool,
}

/// Intersects the bearing rays from both receivers.
pub fn initial_position(obs: &InitialObservation, geom: &Geometry) -> Result<InitialFix> {
    let u1 = Point2::from_polar(1.0, obs.aoa_rx1_rad + obs.aoa_error_rad);
    let u2 = Point2::from_polar(1.0, obs.aoa_rx2_rad + obs.aoa_error_rad);
    let r1 = geom.rx_pos(Receiver::Rx1);
    let d = geom.rx_pos(Receiver::Rx2) - r1;
    // r1 + s·u1 = r2 + t·u2
    let det = u2.x * u1.y - u1.x * u2.y;
    if det.abs() < PARALLEL_TOL {
        return Err(Error::NoIntersection(format!(
            "bearings {:.3}° and {:.3}° are parallel",
            (obs.aoa_rx1_rad + obs.aoa_error_rad).to_degrees(),
            (obs.aoa_rx2_rad + obs.aoa_error_rad).to_degrees()
        )));
    }
    let s = (u2.x * d.y - d.x * u2.y) / det;
    let t = (u1.x * d.y - d.x * u1.y) / det;
    Ok(InitialFix {
        position: r1 + u1 * s,
        behind_receiver: s < 0.0 || t < 0.0,
    })
}

/// Doppler estimates from both receivers at one sensing instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerPair {
    pub time_s: f64,
    pub rx1: Option<f64>,
    pub rx2: Option<f64>,
}

impl DopplerPair {
    pub fn values(&self) -> Option<(f64, f64)> {
        Some((self.rx1?, self.rx2?))
    }
}

/// Both tracks on receiver 1's time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedTrack {
    pub period_s: f64,
    pub pairs: Vec<DopplerPair>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn track_period(t: &DopplerTrack) -> Option<f64> {
    (t.len() >= 2).then(|| median(t.sensing_times_s.windows(2).map(|w| w[1] - w[0]).collect()))
}

/// Pairs each receiver-1 instant with the nearest receiver-2 instant. Matches
/// further than half a period apart leave receiver 2 missing. Only the
/// receiver-1 instants inside the common span are kept.
pub fn align_tracks(t1: &DopplerTrack, t2: &DopplerTrack) -> Result<FusedTrack> {
    t1.validate()?;
    t2.validate()?;
    if t1.is_empty() || t2.is_empty() {
        return Err(Error::Contract("cannot align an empty doppler track".into()));
    }
    let period = track_period(t1)
        .or_else(|| track_period(t2))
        .ok_or_else(|| Error::Contract("need at least two instants to infer the sensing period".into()))?;
    let half = 0.5 * period * (1.0 + 1e-9);
    let a = &t1.sensing_times_s;
    let b = &t2.sensing_times_s;
    let lo = a[0].max(b[0]) - half;
    let hi = a[a.len() - 1].min(b[b.len() - 1]) + half;
    if lo > hi {
        return Err(Error::Contract(format!(
            "track spans [{:.4}, {:.4}] s and [{:.4}, {:.4}] s do not overlap",
            a[0],
            a[a.len() - 1],
            b[0],
            b[b.len() - 1]
        )));
    }
    let mut pairs = Vec::new();
    for (i, &t) in a.iter().enumerate() {
        if t < lo || t > hi {
            continue;
        }
        let j = b.partition_point(|&x| x < t);
        let nearest = [j.checked_sub(1), (j < b.len()).then_some(j)]
            .into_iter()
            .flatten()
            .min_by(|&x, &y| (b[x] - t).abs().total_cmp(&(b[y] - t).abs()));
        let rx2 = nearest.filter(|&j| (b[j] - t).abs() <= half).and_then(|j| t2.doppler_hz[j]);
        pairs.push(DopplerPair {
            time_s: t,
            rx1: t1.doppler_hz[i],
            rx2,
        });
    }
    if pairs.is_empty() {
        return Err(Error::Contract("doppler tracks share no sensing instants".into()));
    }
    Ok(FusedTrack { period_s: period, pairs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Solved speeds above this are treated as degenerate and not applied.
    pub max_speed_mps: f64,
    /// Odd moving-median length applied to each Doppler track before
    /// fusion; 0 or 1 disables it.
    pub median_filter_len: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            max_speed_mps: 1.0,
            median_filter_len: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointFlag {
    Tracked,
    /// A Doppler estimate was missing; position held.
    Held,
    /// The velocity solve failed or was implausible; position held.
    Degenerate,
}

impl PointFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PointFlag::Tracked => "tracked",
            PointFlag::Held => "held",
            PointFlag::Degenerate => "degenerate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tracked" => Some(PointFlag::Tracked),
            "held" => Some(PointFlag::Held),
            "degenerate" => Some(PointFlag::Degenerate),
            _ => None,
        }
    }
}

/// Reconstructed target path. Point j+1 is point j advanced by the
/// velocity solved at sensing instant j, so points sit half a period either
/// side of the instants.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sensing_times_s: Vec<f64>,
    pub points: Vec<Point2>,
    pub flags: Vec<PointFlag>,
    pub initial_behind_receiver: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if n == 0 || self.sensing_times_s.len() != n || self.flags.len() != n {
            return Err(Error::Contract("trajectory columns must be non-empty and equally long".into()));
        }
        Ok(())
    }
}

fn median_filter(x: &[Option<f64>], len: usize) -> Vec<Option<f64>> {
    if len <= 1 {
        return x.to_vec();
    }
    let h = len / 2;
    (0..x.len())
        .map(|i| {
            x[i]?;
            let lo = i.saturating_sub(h);
            let hi = (i + h + 1).min(x.len());
            let w: Vec<f64> = x[lo..hi].iter().flatten().copied().collect();
            Some(median(w))
        })
        .collect()
}

/// Dead-reckons the fused Doppler pairs from the triangulated start point.
pub fn track_trajectory(
    fused: &FusedTrack,
    obs: &InitialObservation,
    geom: &Geometry,
    cfg: &TrackerConfig,
) -> Result<Trajectory> {
    if fused.pairs.is_empty() {
        return Err(Error::Contract("no doppler pairs to track".into()));
    }
    if !(fused.period_s.is_finite() && fused.period_s > 0.0) {
        return Err(Error::Contract("sensing period must be positive".into()));
    }
    let dt = fused.period_s;
    let fix = initial_position(obs, geom)?;

    let rx1: Vec<_> = fused.pairs.iter().map(|p| p.rx1).collect();
    let rx2: Vec<_> = fused.pairs.iter().map(|p| p.rx2).collect();
    let (rx1, rx2) = (median_filter(&rx1, cfg.median_filter_len), median_filter(&rx2, cfg.median_filter_len));

    let n = fused.pairs.len();
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    let mut flags = Vec::with_capacity(n + 1);
    times.push(fused.pairs[0].time_s - 0.5 * dt);
    points.push(fix.position);
    flags.push(PointFlag::Tracked);

    let mut p = fix.position;
    let mut heading = 0.0;
    for (k, pair) in fused.pairs.iter().enumerate() {
        let flag = match (rx1[k], rx2[k]) {
            (Some(f1), Some(f2)) => match solve_velocity(f1, f2, p, geom, heading) {
                Ok((v, th)) if v <= cfg.max_speed_mps * (1.0 + 1e-9) => {
                    p = step_position(p, v, th, dt);
                    heading = th;
                    PointFlag::Tracked
                }
                Ok(_) | Err(Error::DegenerateGeometry(_)) => PointFlag::Degenerate,
                Err(e) => return Err(e),
            },
            _ => PointFlag::Held,
        };
        times.push(pair.time_s + 0.5 * dt);
        points.push(p);
        flags.push(flag);
    }
    Ok(Trajectory {
        sensing_times_s: times,
        points,
        flags,
        initial_behind_receiver: fix.behind_receiver,
    })
}
