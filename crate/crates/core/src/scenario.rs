//! Complete simulation and estimation configuration, loaded from JSON.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::caf::SensingConfig;
use crate::channel::{ChannelScene, PathSpec, ReceiverChannel, TargetTrack};
use crate::clutter::ClutterConfig;
use crate::error::{Error, Result};
use crate::formats::read_json;
use crate::geometry::{Geometry, Point2, Receiver};
use crate::stroke::{gen_stroke, StrokeSpec};
use crate::tracker::{InitialObservation, TrackerConfig};
use crate::waveform::TransmitConfig;
use crate::FORMAT_VERSION;

/// Sensing parameters in seconds, turned into sample counts once the
/// sample rate is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensingParams {
    pub window_s: f64,
    pub hop_s: f64,
    pub doppler_max_hz: f64,
    pub doppler_oversample: usize,
    pub delay_search_samples: usize,
    pub gamma: f64,
    pub half_train_cells: usize,
}

impl Default for SensingParams {
    fn default() -> Self {
        let c = SensingConfig::new(1.0);
        Self {
            window_s: 0.1,
            hop_s: 0.01,
            doppler_max_hz: c.doppler_max_hz,
            doppler_oversample: c.doppler_oversample,
            delay_search_samples: c.delay_search_samples,
            gamma: c.gamma,
            half_train_cells: c.half_train_cells,
        }
    }
}

impl SensingParams {
    pub fn to_config(&self, sample_rate_hz: f64) -> SensingConfig {
        SensingConfig {
            sample_rate_hz,
            window_len_samples: (self.window_s * sample_rate_hz).round() as usize,
            hop_samples: (self.hop_s * sample_rate_hz).round() as usize,
            doppler_max_hz: self.doppler_max_hz,
            doppler_oversample: self.doppler_oversample,
            delay_search_samples: self.delay_search_samples,
            gamma: self.gamma,
            half_train_cells: self.half_train_cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub format_version: u32,
    pub name: String,
    pub sample_rate_hz: f64,
    pub geometry: Geometry,
    /// Receiver 1 then receiver 2.
    pub receivers: [ReceiverChannel; 2],
    pub rx2_sync_offset_s: f64,
    pub seed: u64,
    pub stroke: StrokeSpec,
    /// Stationary time before pen-down and after pen-up.
    pub lead_s: f64,
    pub sensing: SensingParams,
    pub clutter: ClutterConfig,
    pub tracker: TrackerConfig,
    /// Bearings at the first sensing instant. Taken from the ground truth
    /// when absent.
    pub initial_observation: Option<InitialObservation>,
    /// Error added to both initial bearings, degrees.
    pub aoa_error_deg: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::los()
    }
}

fn polar(mag: f64, deg: f64) -> Complex64 {
    Complex64::from_polar(mag, deg * PI / 180.0)
}

impl Scenario {
    /// Line-of-sight desk scene: transmitter 2.5 m from receiver 1,
    /// receivers 1 m apart, 60 GHz, 1 MHz sampling, three static echoes and
    /// a weak target echo, surveillance SNR 20 dB.
    pub fn los() -> Self {
        let geometry = Geometry::default();
        let receivers = Receiver::BOTH.map(|rx| {
            let direct = geometry.tx_pos.dist(geometry.rx_pos(rx)) / geometry.c_mps;
            let mut ch = ReceiverChannel {
                reference_path: PathSpec::new(Complex64::new(1.0, 0.0), direct),
                static_paths: vec![
                    PathSpec::new(polar(0.5, 30.0), 0.0),
                    PathSpec::new(polar(0.3, -70.0), 2e-6),
                    PathSpec::new(polar(0.2, 120.0), 5e-6),
                ],
                target_gain: polar(0.05, 0.0),
                reference_noise_power: 1e-3,
                surveillance_noise_power: 0.0,
            };
            ch.surveillance_noise_power = surveillance_power(&ch) / 100.0;
            ch
        });
        Self {
            format_version: FORMAT_VERSION,
            name: "los".into(),
            sample_rate_hz: 1e6,
            geometry,
            receivers,
            rx2_sync_offset_s: 0.0,
            seed: 1,
            stroke: StrokeSpec::default(),
            lead_s: 0.15,
            sensing: SensingParams::default(),
            clutter: ClutterConfig::default(),
            tracker: TrackerConfig::default(),
            initial_observation: None,
            aoa_error_deg: 0.0,
        }
    }

    /// The LoS scene with every surveillance path 20 dB below the reference
    /// path; noise follows so the surveillance SNR stays 20 dB.
    pub fn nlos() -> Self {
        let mut s = Self::los();
        s.name = "nlos".into();
        for ch in &mut s.receivers {
            let k = (0.01 * ch.reference_path.gain.norm_sqr() / surveillance_power(ch)).sqrt();
            ch.scale_surveillance(k);
            ch.surveillance_noise_power = surveillance_power(ch) / 100.0;
        }
        s
    }

    /// `los`, `nlos`, or a path to a scenario JSON file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "los" => Ok(Self::los()),
            "nlos" => Ok(Self::nlos()),
            p => Self::load(Path::new(p)),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s: Scenario = read_json(path)?;
        if s.format_version != FORMAT_VERSION {
            return Err(Error::parse(
                path,
                format!("field `format_version`: {} (expected {FORMAT_VERSION})", s.format_version),
            ));
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.scene().validate()?;
        self.stroke.validate()?;
        self.sensing_config().validate()?;
        self.clutter.validate()?;
        if !(self.lead_s.is_finite() && self.lead_s >= 0.0) {
            return Err(Error::Config("lead time must be non-negative".into()));
        }
        if (self.stroke.step_s - self.sensing.hop_s).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "stroke step {} s must equal the sensing hop {} s",
                self.stroke.step_s, self.sensing.hop_s
            )));
        }
        if !self.aoa_error_deg.is_finite() {
            return Err(Error::Config("aoa_error_deg must be finite".into()));
        }
        Ok(())
    }

    pub fn scene(&self) -> ChannelScene {
        ChannelScene {
            geometry: self.geometry,
            receivers: self.receivers.clone(),
            rx2_sync_offset_s: self.rx2_sync_offset_s,
            rng_seed: self.seed,
        }
    }

    pub fn sensing_config(&self) -> SensingConfig {
        self.sensing.to_config(self.sample_rate_hz)
    }

    /// Ground truth: the stroke with stationary lead-in and lead-out.
    pub fn truth_track(&self) -> Result<TargetTrack> {
        gen_stroke(&self.stroke)?.with_dwell(self.lead_s, self.lead_s)
    }

    /// Transmit settings covering `[0, truth end]`.
    pub fn transmit_config(&self, truth: &TargetTrack) -> TransmitConfig {
        let n = (truth.end_s() * self.sample_rate_hz).round().max(1.0);
        TransmitConfig::for_sample_rate(self.sample_rate_hz, n / self.sample_rate_hz, self.seed)
    }

    /// The configured initial bearings, or the exact bearings of the truth
    /// at `t0`, with the configured error added in both cases.
    pub fn initial_observation(&self, truth: &TargetTrack, t0: f64) -> Result<InitialObservation> {
        let mut obs = match self.initial_observation {
            Some(o) => o,
            None => InitialObservation::from_position(truth.position_at(t0), &self.geometry)?,
        };
        obs.aoa_error_rad += self.aoa_error_deg.to_radians();
        Ok(obs)
    }

    pub fn stroke_center(&self) -> Point2 {
        self.stroke.center_m
    }
}

/// Total surveillance path power (static paths plus target).
fn surveillance_power(ch: &ReceiverChannel) -> f64 {
    ch.static_paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>() + ch.target_gain.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_scenes_are_valid() {
        Scenario::los().validate().unwrap();
        Scenario::nlos().validate().unwrap();
    }

    #[test]
    fn nlos_gains_twenty_db_down() {
        let s = Scenario::nlos();
        for ch in &s.receivers {
            assert!((ch.relative_gain_db() + 20.0).abs() < 1e-9);
            let snr = surveillance_power(ch) / ch.surveillance_noise_power;
            assert!((10.0 * snr.log10() - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let s = Scenario::nlos();
        let text = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let partial: Scenario = serde_json::from_str(r#"{"seed": 9, "rx2_sync_offset_s": 0.004}"#).unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.receivers, Scenario::los().receivers);
    }

    #[test]
    fn sensing_params_in_samples() {
        let c = Scenario::los().sensing_config();
        assert_eq!(c.window_len_samples, 100_000);
        assert_eq!(c.hop_samples, 10_000);
    }

    #[test]
    fn sync_offset_beyond_budget_rejected() {
        let s = Scenario {
            rx2_sync_offset_s: 0.02,
            ..Scenario::los()
        };
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn truth_has_leads() {
        let s = Scenario::los();
        let t = s.truth_track().unwrap();
        assert_eq!(t.positions[0], t.positions[15]);
        assert!(t.positions[16] != t.positions[15]);
    }
}
