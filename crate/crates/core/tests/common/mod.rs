//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::f64::consts::PI;

use mmtrace::{BasebandBuffer, SensingConfig};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Reduced-rate sensing setup with the default structure: 0.1 s windows,
/// 10 ms hop, ±250 Hz at a quarter-resolution grid, W = 25.
pub fn small_sensing(fs: f64) -> SensingConfig {
    SensingConfig::new(fs)
}

/// Circular complex Gaussian noise of the given power.
pub fn noise(n: usize, power: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * s
        })
        .collect()
}

pub fn buffer(samples: Vec<Complex64>, fs: f64) -> BasebandBuffer {
    BasebandBuffer::new(samples, fs, 0.0).unwrap()
}

/// CAF row by the defining double sum, with no FFT anywhere:
/// max over τ of |Σ_n ŷ_s[start+n]·conj(y_r[start+n−τ])·e^{+j2π f n Ts}|.
pub fn direct_caf_row(y_s: &[Complex64], y_r: &[Complex64], start: usize, cfg: &SensingConfig) -> Vec<f64> {
    let ts = 1.0 / cfg.sample_rate_hz;
    cfg.doppler_bins()
        .iter()
        .map(|&f| {
            (0..=cfg.delay_search_samples)
                .map(|tau| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for n in 0..cfg.window_len_samples {
                        let i = start + n;
                        if i < tau {
                            continue;
                        }
                        let ph = 2.0 * PI * f * n as f64 * ts;
                        acc += y_s[i] * y_r[i - tau].conj() * Complex64::from_polar(1.0, ph);
                    }
                    acc.norm()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Largest bin difference relative to the oracle row's peak.
pub fn rel_row_error(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let peak = want.iter().copied().fold(0.0, f64::max);
    got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / peak
}

/// `x[n]·e^{−j2π f n/fs}`, the sign convention of a positive Doppler.
pub fn doppler_shift(x: &[Complex64], f_hz: f64, fs: f64) -> Vec<Complex64> {
    x.iter()
        .enumerate()
        .map(|(n, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * f_hz * n as f64 / fs))
        .collect()
}

/// Delay by `d` samples with zeros shifted in.
pub fn delay(x: &[Complex64], d: usize) -> Vec<Complex64> {
    (0..x.len())
        .map(|n| if n >= d { x[n - d] } else { Complex64::new(0.0, 0.0) })
        .collect()
}

pub fn power(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Fraction of noise-only CAF rows on which the detector fires. Each row
/// uses fresh independent reference and surveillance noise.
pub fn false_alarm_rate(cfg: &SensingConfig, rows: usize, seed: u64) -> f64 {
    let mut proc = mmtrace::caf::CafProcessor::new(cfg).unwrap();
    let n = cfg.window_len_samples;
    let mut hits = 0usize;
    for r in 0..rows as u64 {
        let y_r = noise(n, 1.0, seed.wrapping_mul(1_000_003).wrapping_add(2 * r));
        let y_s = noise(n, 1.0, seed.wrapping_mul(1_000_003).wrapping_add(2 * r + 1));
        let row = proc.row(&y_s, &y_r, 0).unwrap();
        if mmtrace::detect_doppler(&row.magnitudes, cfg).is_some() {
            hits += 1;
        }
    }
    hits as f64 / rows as f64
}
