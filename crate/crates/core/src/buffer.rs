//! Complex baseband buffers and their on-disk IQ representation.
//!
//! An IQ recording is two files: `<name>.iq` holds little-endian interleaved
//! 32-bit float I/Q pairs, and `<name>.json` is a sidecar carrying the
//! sample rate, epoch, channel role and carrier frequency.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::FORMAT_VERSION;

/// Uniformly sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandBuffer {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    /// Time of the first sample, seconds.
    pub epoch_s: f64,
}

impl BasebandBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64, epoch_s: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Contract("baseband buffer must hold at least one sample".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Config(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        if !epoch_s.is_finite() {
            return Err(Error::Config("epoch must be finite".into()));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::Contract(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            epoch_s,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn time_of(&self, n: usize) -> f64 {
        self.epoch_s + n as f64 / self.sample_rate_hz
    }

    /// Mean of |s[n]|².
    pub fn average_power(&self) -> f64 {
        average_power(&self.samples)
    }
}

pub(crate) fn average_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|s| s.norm_sqr()).sum::<f64>() / x.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelRole {
    Reference,
    Surveillance,
}

impl ChannelRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelRole::Reference => "reference",
            ChannelRole::Surveillance => "surveillance",
        }
    }
}

/// JSON sidecar written next to every `.iq` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqSidecar {
    pub format_version: u32,
    pub sample_rate_hz: f64,
    pub epoch_s: f64,
    pub role: ChannelRole,
    pub fc_hz: f64,
    /// 1-based receiver index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver: Option<u8>,
    /// Total path power of this channel relative to the same receiver's
    /// reference path, in dB. Only written for surveillance channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_samples: Option<u64>,
}

impl IqSidecar {
    pub fn new(buf: &BasebandBuffer, role: ChannelRole, fc_hz: f64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            sample_rate_hz: buf.sample_rate_hz,
            epoch_s: buf.epoch_s,
            role,
            fc_hz,
            receiver: None,
            relative_gain_db: None,
            num_samples: Some(buf.len() as u64),
        }
    }
}

/// Path of the sidecar belonging to an `.iq` file.
pub fn sidecar_path(iq_path: &Path) -> PathBuf {
    iq_path.with_extension("json")
}

pub fn write_iq(iq_path: &Path, buf: &BasebandBuffer, sidecar: &IqSidecar) -> Result<()> {
    let file = fs::File::create(iq_path).map_err(|e| Error::io(iq_path, e))?;
    let mut w = BufWriter::new(file);
    for s in &buf.samples {
        w.write_all(&(s.re as f32).to_le_bytes())
            .and_then(|_| w.write_all(&(s.im as f32).to_le_bytes()))
            .map_err(|e| Error::io(iq_path, e))?;
    }
    w.flush().map_err(|e| Error::io(iq_path, e))?;

    let side = sidecar_path(iq_path);
    let json = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))
}

pub fn read_sidecar(iq_path: &Path) -> Result<IqSidecar> {
    let side = sidecar_path(iq_path);
    if !side.exists() {
        return Err(Error::MissingArtifact(side));
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sc: IqSidecar =
        serde_json::from_str(&text).map_err(|e| Error::parse(&side, e.to_string()))?;
    if !(sc.sample_rate_hz.is_finite() && sc.sample_rate_hz > 0.0) {
        return Err(Error::parse(&side, "field `sample_rate_hz` must be positive"));
    }
    if !sc.epoch_s.is_finite() {
        return Err(Error::parse(&side, "field `epoch_s` must be finite"));
    }
    Ok(sc)
}

pub fn read_iq(iq_path: &Path) -> Result<(BasebandBuffer, IqSidecar)> {
    if !iq_path.exists() {
        return Err(Error::MissingArtifact(iq_path.to_path_buf()));
    }
    let sc = read_sidecar(iq_path)?;
    let bytes = fs::read(iq_path).map_err(|e| Error::io(iq_path, e))?;
    if bytes.len() % 8 != 0 {
        let offset = bytes.len() - bytes.len() % 8;
        return Err(Error::parse(
            iq_path,
            format!("truncated I/Q pair at byte offset {offset} (file length {})", bytes.len()),
        ));
    }
    if bytes.is_empty() {
        return Err(Error::parse(iq_path, "no samples"));
    }
    if let Some(n) = sc.num_samples {
        if n as usize * 8 != bytes.len() {
            return Err(Error::parse(
                iq_path,
                format!(
                    "sidecar `num_samples` = {n} but file holds {} bytes ({} expected)",
                    bytes.len(),
                    n * 8
                ),
            ));
        }
    }
    let mut samples = Vec::with_capacity(bytes.len() / 8);
    for (i, pair) in bytes.chunks_exact(8).enumerate() {
        let re = f32::from_le_bytes(pair[0..4].try_into().unwrap());
        let im = f32::from_le_bytes(pair[4..8].try_into().unwrap());
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::parse(
                iq_path,
                format!("non-finite sample at byte offset {}", i * 8),
            ));
        }
        samples.push(Complex64::new(re as f64, im as f64));
    }
    let buf = BasebandBuffer::new(samples, sc.sample_rate_hz, sc.epoch_s)?;
    Ok((buf, sc))
}
