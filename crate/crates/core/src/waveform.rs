//! Transmit waveform synthesis.
//!
//! The transmit signal is a tiling of frames. Each frame is one training
//! symbol followed by OFDM payload symbols carrying random QPSK. The
//! training symbol has constant-magnitude, pseudo-random-phase subcarriers
//! and is identical in every frame; payload symbols are fresh per frame.
//!
//! Band confinement comes from subcarrier masking: only subcarriers whose
//! centre lies at least one spacing inside ±bandwidth/2 are loaded (DC is
//! left empty). Symbol edges are raised-cosine tapered over half the cyclic
//! prefix and overlap-added, which keeps the rectangular-symbol sidelobes
//! from leaking past the band edge.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::buffer::BasebandBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransmitConfig {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub bandwidth_hz: f64,
    /// Training symbol length in samples (its own DFT size, before the prefix).
    pub training_len: usize,
    /// Payload length in samples; a whole number of prefixed OFDM symbols.
    pub payload_len: usize,
    /// OFDM FFT size.
    pub num_subcarriers: usize,
    pub cyclic_prefix_len: usize,
    pub rng_seed: u64,
}

impl Default for TransmitConfig {
    /// 10 MHz sampling, 5 MHz occupied bandwidth, 1 s.
    fn default() -> Self {
        Self {
            sample_rate_hz: 10e6,
            duration_s: 1.0,
            bandwidth_hz: 5e6,
            training_len: 256,
            payload_len: 16 * (256 + 32),
            num_subcarriers: 256,
            cyclic_prefix_len: 32,
            rng_seed: 0,
        }
    }
}

impl TransmitConfig {
    /// A config scaled to a lower sample rate, keeping bandwidth at half the
    /// sample rate and shrinking the symbol sizes.
    pub fn for_sample_rate(sample_rate_hz: f64, duration_s: f64, rng_seed: u64) -> Self {
        let (nfft, cp) = if sample_rate_hz >= 5e6 { (256, 32) } else { (64, 16) };
        Self {
            sample_rate_hz,
            duration_s,
            bandwidth_hz: sample_rate_hz / 2.0,
            training_len: nfft,
            payload_len: 16 * (nfft + cp),
            num_subcarriers: nfft,
            cyclic_prefix_len: cp,
            rng_seed,
        }
    }

    pub fn num_samples(&self) -> Result<usize> {
        sample_count(self.sample_rate_hz, self.duration_s)
    }

    fn symbol_len(&self) -> usize {
        self.num_subcarriers + self.cyclic_prefix_len
    }

    pub fn validate(&self) -> Result<()> {
        self.num_samples()?;
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::Config("bandwidth must be positive".into()));
        }
        if self.bandwidth_hz > self.sample_rate_hz {
            return Err(Error::Config(format!(
                "bandwidth {} Hz exceeds the sample rate {} Hz",
                self.bandwidth_hz, self.sample_rate_hz
            )));
        }
        if self.training_len == 0 || self.payload_len == 0 || self.num_subcarriers == 0 {
            return Err(Error::Config("frame lengths must be positive".into()));
        }
        if self.cyclic_prefix_len >= self.num_subcarriers || self.cyclic_prefix_len >= self.training_len {
            return Err(Error::Config("cyclic prefix must be shorter than a symbol".into()));
        }
        if !self.payload_len.is_multiple_of(self.symbol_len()) {
            return Err(Error::Config(format!(
                "payload length {} is not a multiple of the prefixed symbol length {}",
                self.payload_len,
                self.symbol_len()
            )));
        }
        for n in [self.num_subcarriers, self.training_len] {
            if active_bins(n, self.sample_rate_hz, self.bandwidth_hz).is_empty() {
                return Err(Error::Config(format!(
                    "no subcarrier fits inside the {} Hz band with a {n}-point grid",
                    self.bandwidth_hz
                )));
            }
        }
        Ok(())
    }
}

/// `round(duration · fs)`, requiring the product to be a positive integer.
pub(crate) fn sample_count(sample_rate_hz: f64, duration_s: f64) -> Result<usize> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Config(format!("sample rate must be positive, got {sample_rate_hz}")));
    }
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::Config(format!("duration must be positive, got {duration_s}")));
    }
    let x = duration_s * sample_rate_hz;
    let n = x.round();
    if n < 1.0 || (x - n).abs() > 1e-6 * x.max(1.0) {
        return Err(Error::Config(format!(
            "duration × sample rate = {x} is not a positive integer sample count"
        )));
    }
    Ok(n as usize)
}

/// Signed DFT bin indices whose subcarrier sits strictly inside the band
/// with one spacing of guard, DC excluded.
fn active_bins(nfft: usize, fs: f64, bandwidth: f64) -> Vec<i64> {
    let spacing = fs / nfft as f64;
    let half = nfft as i64 / 2;
    (-half..half)
        .filter(|&k| k != 0 && (k.abs() as f64 + 1.0) * spacing <= bandwidth / 2.0)
        .collect()
}

fn bin_index(k: i64, nfft: usize) -> usize {
    k.rem_euclid(nfft as i64) as usize
}

struct SymbolWriter {
    out: Vec<Complex64>,
    /// Write position of the next symbol start.
    pos: usize,
    ramp: Vec<f64>,
}

impl SymbolWriter {
    fn new(capacity: usize, taper: usize) -> Self {
        let ramp = (0..taper)
            .map(|i| 0.5 * (1.0 - (PI * (i as f64 + 0.5) / taper as f64).cos()))
            .collect();
        Self {
            out: Vec::with_capacity(capacity),
            pos: 0,
            ramp,
        }
    }

    /// Emits `[body[N-cp..], body, body[..taper]]`, tapering the first and
    /// last `taper` samples and overlap-adding the suffix into the next
    /// symbol's prefix.
    fn push(&mut self, body: &[Complex64], cp: usize) {
        let n = body.len();
        let taper = self.ramp.len();
        let ext_len = cp + n + taper;
        let needed = self.pos + ext_len;
        if self.out.len() < needed {
            self.out.resize(needed, Complex64::new(0.0, 0.0));
        }
        for i in 0..ext_len {
            let src = if i < cp {
                body[n - cp + i]
            } else if i < cp + n {
                body[i - cp]
            } else {
                body[i - cp - n]
            };
            let w = if i < taper {
                self.ramp[i]
            } else if i >= cp + n {
                1.0 - self.ramp[i - cp - n]
            } else {
                1.0
            };
            self.out[self.pos + i] += src * w;
        }
        self.pos += cp + n;
    }
}

/// Synthesizes the unit-power transmit signal described by `cfg`.
pub fn gen_transmit_signal(cfg: &TransmitConfig) -> Result<BasebandBuffer> {
    cfg.validate()?;
    let total = cfg.num_samples()?;
    let fs = cfg.sample_rate_hz;
    let nfft = cfg.num_subcarriers;
    let cp = cfg.cyclic_prefix_len;
    let taper = cp / 2;

    let mut planner = FftPlanner::<f64>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    // Training symbol: fixed per seed, constant modulus on active bins.
    let train_bins = active_bins(cfg.training_len, fs, cfg.bandwidth_hz);
    let mut training = vec![Complex64::new(0.0, 0.0); cfg.training_len];
    for &k in &train_bins {
        let phase = rng.random::<f64>() * 2.0 * PI;
        training[bin_index(k, cfg.training_len)] = Complex64::from_polar(1.0, phase);
    }
    planner.plan_fft_inverse(cfg.training_len).process(&mut training);
    let train_scale = 1.0 / (train_bins.len() as f64).sqrt();
    training.iter_mut().for_each(|s| *s *= train_scale);

    let payload_bins = active_bins(nfft, fs, cfg.bandwidth_hz);
    let payload_scale = 1.0 / (payload_bins.len() as f64).sqrt();
    let ifft = planner.plan_fft_inverse(nfft);
    let symbols_per_frame = cfg.payload_len / cfg.symbol_len();
    let qpsk = std::f64::consts::FRAC_1_SQRT_2;

    let mut writer = SymbolWriter::new(total + cfg.training_len + cp + taper, taper);
    let mut body = vec![Complex64::new(0.0, 0.0); nfft];
    'frames: loop {
        writer.push(&training, cp);
        if writer.pos >= total {
            break;
        }
        for _ in 0..symbols_per_frame {
            body.iter_mut().for_each(|s| *s = Complex64::new(0.0, 0.0));
            for &k in &payload_bins {
                let bits: u8 = rng.random();
                let re = if bits & 1 == 0 { qpsk } else { -qpsk };
                let im = if bits & 2 == 0 { qpsk } else { -qpsk };
                body[bin_index(k, nfft)] = Complex64::new(re, im);
            }
            ifft.process(&mut body);
            body.iter_mut().for_each(|s| *s *= payload_scale);
            writer.push(&body, cp);
            if writer.pos >= total {
                break 'frames;
            }
        }
    }

    let mut samples = writer.out;
    samples.truncate(total);
    let p = crate::buffer::average_power(&samples);
    let g = 1.0 / p.sqrt();
    samples.iter_mut().for_each(|s| *s *= g);
    BasebandBuffer::new(samples, fs, 0.0)
}

/// Unit-magnitude complex tone `exp(j·2π·freq·n/fs)`.
pub fn gen_test_tone(fs: f64, duration_s: f64, freq_hz: f64) -> Result<BasebandBuffer> {
    let n = sample_count(fs, duration_s)?;
    if !freq_hz.is_finite() || freq_hz.abs() >= fs / 2.0 {
        return Err(Error::Config(format!(
            "tone at {freq_hz} Hz aliases at sample rate {fs} Hz"
        )));
    }
    let w = 2.0 * PI * freq_hz / fs;
    let samples = (0..n).map(|i| Complex64::from_polar(1.0, w * i as f64)).collect();
    BasebandBuffer::new(samples, fs, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_rate_one_second_length() {
        let cfg = TransmitConfig::default();
        let buf = gen_transmit_signal(&cfg).unwrap();
        assert_eq!(buf.len(), 10_000_000);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = TransmitConfig::for_sample_rate(1e6, 0.05, 3);
        let a = gen_transmit_signal(&cfg).unwrap();
        let b = gen_transmit_signal(&cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = gen_transmit_signal(&TransmitConfig { rng_seed: 4, ..cfg }).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn unit_power_half_second_seed7() {
        let cfg = TransmitConfig::for_sample_rate(1e6, 0.5, 7);
        let buf = gen_transmit_signal(&cfg).unwrap();
        let p: f64 = buf.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / buf.len() as f64;
        assert!((p - 1.0).abs() <= 1e-6, "power {p}");
    }

    #[test]
    fn rejects_bad_configs() {
        let base = TransmitConfig::for_sample_rate(1e6, 0.01, 0);
        assert!(gen_transmit_signal(&TransmitConfig { duration_s: 0.0, ..base.clone() }).is_err());
        assert!(gen_transmit_signal(&TransmitConfig { sample_rate_hz: -1.0, ..base.clone() }).is_err());
        assert!(gen_transmit_signal(&TransmitConfig { bandwidth_hz: 2e6, ..base.clone() }).is_err());
        assert!(gen_transmit_signal(&TransmitConfig { payload_len: 81, ..base.clone() }).is_err());
        assert!(gen_transmit_signal(&TransmitConfig { duration_s: 1.5e-6 + 1e-3, ..base }).is_err());
    }

    #[test]
    fn tone_examples() {
        let ones = gen_test_tone(1e3, 0.01, 0.0).unwrap();
        assert!(ones.samples.iter().all(|s| *s == Complex64::new(1.0, 0.0)));

        let q = gen_test_tone(1e3, 0.01, 250.0).unwrap();
        assert!((q.samples[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);

        assert!(gen_test_tone(1e3, 0.01, 500.0).is_err());
        assert!(gen_test_tone(1e3, 0.01, -600.0).is_err());
    }

    #[test]
    fn tone_dft_peak_at_20_hz() {
        let fs = 1e6;
        let buf = gen_test_tone(fs, 0.1, 20.0).unwrap();
        // Direct DFT on the 10 Hz grid of a 0.1 s record, bins -50..=50 Hz.
        let n = buf.len();
        let mut best = (0.0, f64::MIN);
        for q in -5i32..=5 {
            let f = q as f64 * 10.0;
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, s) in buf.samples.iter().enumerate().step_by(1) {
                acc += s * Complex64::from_polar(1.0, -2.0 * PI * f * i as f64 / fs);
            }
            let m = acc.norm() / n as f64;
            if m > best.1 {
                best = (f, m);
            }
        }
        assert_eq!(best.0, 20.0);
        assert!((best.1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn active_bins_respect_guard() {
        let bins = active_bins(64, 1e6, 0.5e6);
        assert!(!bins.contains(&0));
        let spacing = 1e6 / 64.0;
        assert!(bins.iter().all(|&k| (k.abs() as f64 + 1.0) * spacing <= 0.25e6));
        assert_eq!(bins.len(), 30);
    }
}
