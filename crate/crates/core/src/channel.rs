//! Forward channel model for the reference and surveillance beams.
//!
//! Reference:     y_r[n] = h_r·s[n − D_r] + n_r[n]
//! Surveillance:  y_s[n] = h_tar·s[n − D_tar(n)]·e^{jθ[n]} + Σ_l h_l·s[n − D_l] + n_s[n]
//!
//! Delays are rounded to whole samples. The target phase accumulates as
//! θ[n+1] = θ[n] − 2π·f_d(t_n)·Ts, with f_d taken from [`bistatic_truth`] and
//! linearly interpolated between track instants, so a constant Doppler gives
//! exactly s(t−τ)·e^{−j2π f_d t}. Receiver 2 observes true time
//! `n·Ts + rx2_sync_offset_s`; its buffers carry that offset as their epoch.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::buffer::BasebandBuffer;
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point2, Receiver};

/// Largest receiver clock offset the fusion stage is specified to tolerate.
pub const MAX_SYNC_OFFSET_S: f64 = 0.01;

/// Handwriting-scale speed ceiling for ground-truth tracks, m/s.
pub const MAX_TRACK_SPEED_MPS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    /// Complex gain, serialized as `[re, im]`.
    pub gain: Complex64,
    pub delay_s: f64,
}

impl PathSpec {
    pub fn new(gain: Complex64, delay_s: f64) -> Self {
        Self { gain, delay_s }
    }

    pub fn delay_samples(&self, fs: f64) -> usize {
        (self.delay_s * fs).round() as usize
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.gain.re.is_finite() && self.gain.im.is_finite()) {
            return Err(Error::Config(format!("{what}: gain must be finite")));
        }
        if !(self.delay_s.is_finite() && self.delay_s >= 0.0) {
            return Err(Error::Config(format!("{what}: delay must be non-negative")));
        }
        Ok(())
    }
}

/// Ground-truth target positions sampled on the sensing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTrack {
    pub times_s: Vec<f64>,
    pub positions: Vec<Point2>,
}

impl TargetTrack {
    pub fn new(times_s: Vec<f64>, positions: Vec<Point2>) -> Result<Self> {
        if times_s.is_empty() {
            return Err(Error::Contract("target track is empty".into()));
        }
        if times_s.len() != positions.len() {
            return Err(Error::Contract(format!(
                "track has {} times but {} positions",
                times_s.len(),
                positions.len()
            )));
        }
        if times_s.iter().any(|t| !t.is_finite()) || positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::Contract("track values must be finite".into()));
        }
        for (i, w) in times_s.windows(2).enumerate() {
            let dt = w[1] - w[0];
            if dt <= 0.0 {
                return Err(Error::Contract(format!("track times not increasing at index {}", i + 1)));
            }
            let v = positions[i + 1].dist(positions[i]) / dt;
            if v > MAX_TRACK_SPEED_MPS * (1.0 + 1e-9) {
                return Err(Error::Contract(format!(
                    "implied speed {v:.3} m/s at index {} exceeds {MAX_TRACK_SPEED_MPS} m/s",
                    i + 1
                )));
            }
        }
        Ok(Self { times_s, positions })
    }

    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }

    pub fn start_s(&self) -> f64 {
        self.times_s[0]
    }

    pub fn end_s(&self) -> f64 {
        *self.times_s.last().unwrap()
    }

    /// Linear interpolation, clamped to the end points outside the span.
    pub fn position_at(&self, t: f64) -> Point2 {
        let ts = &self.times_s;
        if t <= ts[0] {
            return self.positions[0];
        }
        if t >= self.end_s() {
            return *self.positions.last().unwrap();
        }
        let k = ts.partition_point(|&x| x <= t) - 1;
        let a = (t - ts[k]) / (ts[k + 1] - ts[k]);
        self.positions[k].lerp(self.positions[k + 1], a)
    }

    /// Pads stationary dwells of `before_s`/`after_s` at the ends on the
    /// track's own step, re-basing time so the result starts at zero.
    pub fn with_dwell(&self, before_s: f64, after_s: f64) -> Result<Self> {
        let step = if self.len() > 1 {
            (self.end_s() - self.start_s()) / (self.len() - 1) as f64
        } else {
            return Err(Error::Contract("cannot infer the step of a single-sample track".into()));
        };
        let nb = (before_s / step).round() as usize;
        let na = (after_s / step).round() as usize;
        let first = self.positions[0];
        let last = *self.positions.last().unwrap();
        let mut positions = Vec::with_capacity(nb + self.len() + na);
        positions.extend(std::iter::repeat_n(first, nb));
        positions.extend_from_slice(&self.positions);
        positions.extend(std::iter::repeat_n(last, na));
        let times = (0..positions.len()).map(|i| i as f64 * step).collect();
        Self::new(times, positions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistaticSample {
    pub range_m: f64,
    pub doppler_hz: f64,
}

/// Bistatic range and Doppler of the target at every track instant, as
/// seen by `rx`. Doppler is `−(fc/c)·dR/dt` from central differences
/// (one-sided at the ends).
pub fn bistatic_truth(track: &TargetTrack, geom: &Geometry, rx: Receiver) -> Result<Vec<BistaticSample>> {
    if track.is_empty() {
        return Err(Error::Contract("target track is empty".into()));
    }
    let mut ranges = Vec::with_capacity(track.len());
    for &p in &track.positions {
        geom.check_clear_of_nodes(p)?;
        ranges.push(geom.bistatic_range(p, rx));
    }
    let k = -geom.fc_hz / geom.c_mps;
    let t = &track.times_s;
    let n = ranges.len();
    let out = (0..n)
        .map(|i| {
            let rate = if n == 1 {
                0.0
            } else if i == 0 {
                (ranges[1] - ranges[0]) / (t[1] - t[0])
            } else if i == n - 1 {
                (ranges[n - 1] - ranges[n - 2]) / (t[n - 1] - t[n - 2])
            } else {
                (ranges[i + 1] - ranges[i - 1]) / (t[i + 1] - t[i - 1])
            };
            BistaticSample {
                range_m: ranges[i],
                doppler_hz: k * rate,
            }
        })
        .collect();
    Ok(out)
}

/// Per-receiver path and noise description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverChannel {
    pub reference_path: PathSpec,
    #[serde(default)]
    pub static_paths: Vec<PathSpec>,
    /// Constant complex scale of the target echo.
    pub target_gain: Complex64,
    #[serde(default)]
    pub reference_noise_power: f64,
    #[serde(default)]
    pub surveillance_noise_power: f64,
}

impl ReceiverChannel {
    /// Total surveillance path power relative to the reference path, dB.
    pub fn relative_gain_db(&self) -> f64 {
        let surv: f64 = self.static_paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>()
            + self.target_gain.norm_sqr();
        10.0 * (surv / self.reference_path.gain.norm_sqr()).log10()
    }

    /// Multiplies every surveillance gain (static paths and target) by `k`.
    pub fn scale_surveillance(&mut self, k: f64) {
        for p in &mut self.static_paths {
            p.gain *= k;
        }
        self.target_gain *= k;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScene {
    pub geometry: Geometry,
    /// Index 0 is receiver 1, index 1 receiver 2.
    pub receivers: [ReceiverChannel; 2],
    #[serde(default)]
    pub rx2_sync_offset_s: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl ChannelScene {
    pub fn receiver(&self, rx: Receiver) -> &ReceiverChannel {
        &self.receivers[rx.index()]
    }

    /// Checks everything the simulator relies on. A transmitter colocated
    /// with a receiver (monostatic case) is accepted here; only the tracker
    /// needs the three nodes apart.
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate_for_simulation()?;
        if !(self.rx2_sync_offset_s.is_finite() && self.rx2_sync_offset_s.abs() <= MAX_SYNC_OFFSET_S) {
            return Err(Error::Config(format!(
                "receiver sync offset {} s outside ±{MAX_SYNC_OFFSET_S} s",
                self.rx2_sync_offset_s
            )));
        }
        for (i, r) in self.receivers.iter().enumerate() {
            r.reference_path.validate(&format!("rx{} reference path", i + 1))?;
            for p in &r.static_paths {
                p.validate(&format!("rx{} static path", i + 1))?;
            }
            if !(r.target_gain.re.is_finite() && r.target_gain.im.is_finite()) {
                return Err(Error::Config("target gain must be finite".into()));
            }
            for np in [r.reference_noise_power, r.surveillance_noise_power] {
                if !(np.is_finite() && np >= 0.0) {
                    return Err(Error::Config("noise powers must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    fn offset_samples(&self, rx: Receiver, fs: f64) -> i64 {
        match rx {
            Receiver::Rx1 => 0,
            Receiver::Rx2 => (self.rx2_sync_offset_s * fs).round() as i64,
        }
    }

    fn rng(&self, rx: Receiver, surveillance: bool) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(1 + 2 * rx.index() as u64 + surveillance as u64);
        rng
    }
}

fn check_delay(d: usize, len: usize, what: &str) -> Result<()> {
    if d >= len {
        return Err(Error::Config(format!(
            "{what} delay of {d} samples does not fit a {len}-sample buffer"
        )));
    }
    Ok(())
}

/// `s[i]` for a possibly out-of-range index, zero outside the buffer.
#[inline]
fn tap(s: &[Complex64], i: i64) -> Complex64 {
    if i >= 0 && (i as usize) < s.len() {
        s[i as usize]
    } else {
        Complex64::new(0.0, 0.0)
    }
}

fn add_noise(out: &mut [Complex64], power: f64, rng: &mut ChaCha8Rng) {
    if power == 0.0 {
        return;
    }
    let sigma = (power / 2.0).sqrt();
    for y in out.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *y += Complex64::new(re, im) * sigma;
    }
}

pub fn simulate_reference(scene: &ChannelScene, s: &BasebandBuffer, rx: Receiver) -> Result<BasebandBuffer> {
    scene.validate()?;
    let fs = s.sample_rate_hz;
    let ch = scene.receiver(rx);
    let d = ch.reference_path.delay_samples(fs);
    check_delay(d, s.len(), "reference path")?;
    let off = scene.offset_samples(rx, fs);
    let g = ch.reference_path.gain;
    let mut out: Vec<Complex64> = (0..s.len() as i64)
        .map(|n| g * tap(&s.samples, n + off - d as i64))
        .collect();
    add_noise(&mut out, ch.reference_noise_power, &mut scene.rng(rx, false));
    BasebandBuffer::new(out, fs, s.epoch_s + off as f64 / fs)
}

pub fn simulate_surveillance(
    scene: &ChannelScene,
    s: &BasebandBuffer,
    track: &TargetTrack,
    rx: Receiver,
) -> Result<BasebandBuffer> {
    scene.validate()?;
    let fs = s.sample_rate_hz;
    let ts = 1.0 / fs;
    let ch = scene.receiver(rx);
    let geom = &scene.geometry;
    let off = scene.offset_samples(rx, fs);
    let len = s.len();

    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for p in &ch.static_paths {
        let d = p.delay_samples(fs);
        check_delay(d, len, "static path")?;
        for (n, y) in out.iter_mut().enumerate() {
            *y += p.gain * tap(&s.samples, n as i64 + off - d as i64);
        }
    }

    if ch.target_gain != Complex64::new(0.0, 0.0) {
        let truth = bistatic_truth(track, geom, rx)?;
        let tt = &track.times_s;
        let mut seg = 0usize;
        let mut theta = 0.0f64;
        for (n, y) in out.iter_mut().enumerate() {
            let t = s.epoch_s + (n as i64 + off) as f64 * ts;
            let p = track.position_at(t);
            let delay = (geom.bistatic_range(p, rx) / geom.c_mps * fs).round() as i64;
            if delay as usize >= len {
                return Err(Error::Config("target delay exceeds the buffer".into()));
            }
            *y += ch.target_gain * tap(&s.samples, n as i64 + off - delay) * Complex64::from_polar(1.0, theta);

            // Doppler at t, linear between track instants, zero outside the track.
            let fd = if t < tt[0] || t > track.end_s() || tt.len() == 1 {
                0.0
            } else {
                while seg + 2 < tt.len() && tt[seg + 1] <= t {
                    seg += 1;
                }
                let a = ((t - tt[seg]) / (tt[seg + 1] - tt[seg])).clamp(0.0, 1.0);
                truth[seg].doppler_hz + a * (truth[seg + 1].doppler_hz - truth[seg].doppler_hz)
            };
            theta -= 2.0 * PI * fd * ts;
            if theta.abs() > 64.0 * PI {
                theta %= 2.0 * PI;
            }
        }
    }

    add_noise(&mut out, ch.surveillance_noise_power, &mut scene.rng(rx, true));
    BasebandBuffer::new(out, fs, s.epoch_s + off as f64 / fs)
}
