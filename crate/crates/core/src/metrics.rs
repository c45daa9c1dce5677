//! Trajectory error statistics and power spectral density.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::buffer::BasebandBuffer;
use crate::channel::TargetTrack;
use crate::error::{Error, Result};
use crate::tracker::Trajectory;
use crate::FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub format_version: u32,
    pub per_point_errors_m: Vec<f64>,
    pub median_m: f64,
    pub p90_m: f64,
    /// `(error, fraction of points at or below it)`, sorted by error.
    pub cdf: Vec<(f64, f64)>,
}

/// Percentile `q ∈ [0, 1]` of sorted data, interpolating linearly between
/// order statistics (position `q·(n−1)`).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ErrorStats {
    pub fn from_errors(errors: Vec<f64>) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::Contract("no errors to summarize".into()));
        }
        if errors.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::Contract("errors must be finite and non-negative".into()));
        }
        let mut sorted = errors.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let cdf = sorted.iter().enumerate().map(|(i, &e)| (e, (i + 1) as f64 / n)).collect();
        Ok(Self {
            format_version: FORMAT_VERSION,
            median_m: percentile(&sorted, 0.5),
            p90_m: percentile(&sorted, 0.9),
            per_point_errors_m: errors,
            cdf,
        })
    }
}

/// Per-point distance between the estimate and the truth once the estimate
/// is shifted so both start at the same place. The truth is interpolated at
/// the estimate's time stamps.
pub fn trajectory_error(est: &Trajectory, truth: &TargetTrack) -> Result<ErrorStats> {
    if est.is_empty() || truth.is_empty() {
        return Err(Error::Contract("trajectory and truth must be non-empty".into()));
    }
    est.validate()?;
    let shift = truth.position_at(est.sensing_times_s[0]) - est.points[0];
    let errors = est
        .sensing_times_s
        .iter()
        .zip(&est.points)
        .map(|(&t, &p)| (p + shift).dist(truth.position_at(t)))
        .collect();
    ErrorStats::from_errors(errors)
}

/// Welch PSD estimate with a Hann window: `(frequency Hz, density dB/Hz)`
/// from −fs/2 upwards. The densities sum, times fs/nfft, to the mean power.
pub fn psd(buf: &BasebandBuffer, nfft: usize, overlap_frac: f64) -> Result<Vec<(f64, f64)>> {
    if nfft < 2 || nfft > buf.len() {
        return Err(Error::Contract(format!(
            "nfft {nfft} must lie in [2, buffer length {}]",
            buf.len()
        )));
    }
    if !(0.0..=0.9).contains(&overlap_frac) {
        return Err(Error::Contract(format!("overlap {overlap_frac} outside [0, 0.9]")));
    }
    let hop = ((1.0 - overlap_frac) * nfft as f64).round().max(1.0) as usize;
    let window: Vec<f64> = (0..nfft)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / nfft as f64).cos())
        .collect();
    let wpow: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut acc = vec![0.0; nfft];
    let mut segs = 0usize;
    let mut scratch = vec![Complex64::new(0.0, 0.0); nfft];
    let mut start = 0;
    while start + nfft <= buf.len() {
        for (i, s) in scratch.iter_mut().enumerate() {
            *s = buf.samples[start + i] * window[i];
        }
        fft.process(&mut scratch);
        for (a, s) in acc.iter_mut().zip(&scratch) {
            *a += s.norm_sqr();
        }
        segs += 1;
        start += hop;
    }
    let fs = buf.sample_rate_hz;
    let norm = 1.0 / (segs as f64 * fs * wpow);
    let half = nfft / 2;
    Ok((0..nfft)
        .map(|j| {
            let bin = (j + nfft - half) % nfft;
            let f = (j as f64 - half as f64) * fs / nfft as f64;
            (f, 10.0 * (acc[bin] * norm).max(1e-300).log10())
        })
        .collect())
}

/// Mean density over `|f| ≤ band_hz/2`, in dB/Hz (averaged linearly).
pub fn mean_level_db(psd: &[(f64, f64)], band_hz: f64) -> f64 {
    let inband: Vec<f64> = psd
        .iter()
        .filter(|(f, _)| f.abs() <= band_hz / 2.0)
        .map(|(_, d)| 10f64.powf(d / 10.0))
        .collect();
    10.0 * (inband.iter().sum::<f64>() / inband.len().max(1) as f64).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::tracker::PointFlag;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn truth() -> TargetTrack {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.01).collect();
        let pos = times.iter().map(|&t| Point2::new(0.5 + 0.05 * t, 0.5 - 0.03 * t)).collect();
        TargetTrack::new(times, pos).unwrap()
    }

    fn as_traj(t: &TargetTrack) -> Trajectory {
        Trajectory {
            sensing_times_s: t.times_s.clone(),
            points: t.positions.clone(),
            flags: vec![PointFlag::Tracked; t.len()],
            initial_behind_receiver: false,
        }
    }

    #[test]
    fn identical_tracks_have_zero_error() {
        let t = truth();
        let s = trajectory_error(&as_traj(&t), &t).unwrap();
        assert!(s.per_point_errors_m.iter().all(|&e| e < 1e-15));
        assert!(s.median_m < 1e-15);
        assert_eq!(s.cdf.last().unwrap().1, 1.0);
    }

    #[test]
    fn offset_after_first_point() {
        let t = truth();
        let mut est = as_traj(&t);
        for p in est.points.iter_mut().skip(1) {
            *p = *p + Point2::new(0.003, 0.0);
        }
        let s = trajectory_error(&est, &t).unwrap();
        assert!((s.median_m - 0.003).abs() < 1e-12);
        assert!(s.cdf[0].0 < 1e-15 && (s.cdf[1].0 - 0.003).abs() < 1e-12);
    }

    #[test]
    fn initial_offset_is_removed() {
        let t = truth();
        let mut est = as_traj(&t);
        for p in est.points.iter_mut() {
            *p = *p + Point2::new(-0.2, 0.7);
        }
        assert!(trajectory_error(&est, &t).unwrap().p90_m < 1e-12);
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.5);
        assert!((percentile(&v, 0.9) - 3.7).abs() < 1e-12);
        assert_eq!(percentile(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn empty_is_contract_error() {
        assert!(matches!(ErrorStats::from_errors(vec![]), Err(Error::Contract(_))));
    }

    fn white(n: usize, fs: f64) -> BasebandBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) / 2f64.sqrt()
            })
            .collect();
        BasebandBuffer::new(s, fs, 0.0).unwrap()
    }

    #[test]
    fn white_noise_is_flat() {
        let fs = 1e5;
        let b = white(200_000, fs);
        let p = psd(&b, 256, 0.5).unwrap();
        let want = -10.0 * fs.log10();
        for (_, d) in &p {
            assert!((d - want).abs() < 1.0, "{d} vs {want}");
        }
    }

    #[test]
    fn integrates_to_power() {
        let b = white(50_000, 2e4);
        let p = psd(&b, 512, 0.5).unwrap();
        let total: f64 = p.iter().map(|(_, d)| 10f64.powf(d / 10.0)).sum::<f64>() * 2e4 / 512.0;
        assert!((total / b.average_power() - 1.0).abs() < 0.05);
    }

    #[test]
    fn tone_is_a_line() {
        let fs = 1024.0;
        let b = crate::waveform::gen_test_tone(fs, 8.0, 20.0).unwrap();
        let p = psd(&b, 1024, 0.5).unwrap();
        let lin: Vec<f64> = p.iter().map(|(_, d)| 10f64.powf(d / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        let (i, m) = lin.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert_eq!(p[i].0, 20.0);
        // Hann spreads a bin-centred tone over three bins (1/4, 1/2, 1/4 of
        // the amplitude), so the peak bin carries 2/3 of the power.
        assert!(m / total > 0.66);
        let three: f64 = lin[i - 1..=i + 1].iter().sum();
        assert!(three / total > 0.99);
    }

    #[test]
    fn bad_arguments() {
        let b = white(100, 1.0);
        assert!(psd(&b, 101, 0.5).is_err());
        assert!(psd(&b, 64, 0.95).is_err());
    }
}
