//! Sliding-window cross-ambiguity function and adaptive-threshold Doppler
//! detection.
//!
//! For window k starting at sample k·N0 the CAF row is
//!
//!   R(k, f) = max_τ | Σ_{n<N_w} ŷ_s[n]·y_r*[n−τ]·e^{+j2π f n Ts} |
//!
//! so bin f responds to a surveillance component y_r·e^{−j2π f t}, the same
//! sign the channel model uses for a positive Doppler. Rows are computed
//! with one zero-padded FFT of the product sequence per delay; grid bins are
//! exact DFT samples, so the result equals the direct sum to rounding.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::buffer::BasebandBuffer;
use crate::clutter::{ls_clutter_cancel, ClutterConfig, ClutterSpan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingConfig {
    pub sample_rate_hz: f64,
    /// CIT length N_w.
    pub window_len_samples: usize,
    /// Hop N0 between sensing instances.
    pub hop_samples: usize,
    pub doppler_max_hz: f64,
    pub doppler_oversample: usize,
    /// Delays 0..=delay_search_samples are searched.
    pub delay_search_samples: usize,
    pub gamma: f64,
    pub half_train_cells: usize,
}

impl SensingConfig {
    /// 0.1 s windows every 10 ms, ±250 Hz at a quarter of the Doppler
    /// resolution, γ = 3, W = 25, zero-delay only.
    pub fn new(sample_rate_hz: f64) -> Self {
        Self {
            sample_rate_hz,
            window_len_samples: (0.1 * sample_rate_hz).round() as usize,
            hop_samples: (0.01 * sample_rate_hz).round() as usize,
            doppler_max_hz: 250.0,
            doppler_oversample: 4,
            delay_search_samples: 0,
            gamma: 3.0,
            half_train_cells: 25,
        }
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// Doppler resolution Δf = 1/(N_w·Ts).
    pub fn resolution_hz(&self) -> f64 {
        self.sample_rate_hz / self.window_len_samples as f64
    }

    pub fn grid_step_hz(&self) -> f64 {
        self.resolution_hz() / self.doppler_oversample as f64
    }

    /// Bins on each side of zero.
    pub fn half_bins(&self) -> usize {
        (self.doppler_max_hz / self.grid_step_hz() + 1e-9).floor() as usize
    }

    pub fn num_bins(&self) -> usize {
        2 * self.half_bins() + 1
    }

    pub fn doppler_bins(&self) -> Vec<f64> {
        let q = self.half_bins() as i64;
        let step = self.grid_step_hz();
        (-q..=q).map(|i| i as f64 * step).collect()
    }

    /// Sensing interval N0·Ts.
    pub fn hop_s(&self) -> f64 {
        self.hop_samples as f64 / self.sample_rate_hz
    }

    /// Number of complete windows in `len` samples.
    pub fn num_windows(&self, len: usize) -> usize {
        if len < self.window_len_samples {
            0
        } else {
            (len - self.window_len_samples) / self.hop_samples + 1
        }
    }

    /// Time stamp of window k: its centre.
    pub fn window_time(&self, epoch_s: f64, k: usize) -> f64 {
        epoch_s + (k * self.hop_samples) as f64 / self.sample_rate_hz
            + self.window_len_samples as f64 / (2.0 * self.sample_rate_hz)
    }

    pub fn validate(&self) -> Result<()> {
        let fs = self.sample_rate_hz;
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if self.window_len_samples == 0 || self.hop_samples == 0 {
            return Err(Error::Config("window and hop lengths must be positive".into()));
        }
        if self.hop_samples > self.window_len_samples {
            return Err(Error::Config(format!(
                "hop {} exceeds window {}",
                self.hop_samples, self.window_len_samples
            )));
        }
        if self.doppler_oversample == 0 {
            return Err(Error::Config("doppler oversample must be at least 1".into()));
        }
        if !(self.doppler_max_hz >= self.resolution_hz() && self.doppler_max_hz < fs / 2.0) {
            return Err(Error::Config(format!(
                "doppler_max {} Hz must lie in [Δf = {} Hz, fs/2)",
                self.doppler_max_hz,
                self.resolution_hz()
            )));
        }
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return Err(Error::Config(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if self.half_train_cells == 0 {
            return Err(Error::Config("at least one training cell per side is required".into()));
        }
        if self.num_bins() < 2 * self.half_train_cells + 1 {
            return Err(Error::Config(format!(
                "{} Doppler bins cannot hold 2W+1 = {} training cells; raise doppler_max",
                self.num_bins(),
                2 * self.half_train_cells + 1
            )));
        }
        if self.delay_search_samples >= self.window_len_samples {
            return Err(Error::Config("delay search exceeds the window".into()));
        }
        Ok(())
    }
}

/// One CAF row.
#[derive(Debug, Clone, PartialEq)]
pub struct CafRow {
    pub magnitudes: Vec<f64>,
    pub best_delay_samples: usize,
}

/// Time-Doppler magnitude map of one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct CafMap {
    pub sensing_times_s: Vec<f64>,
    pub doppler_bins_hz: Vec<f64>,
    /// `magnitudes[k][q]`.
    pub magnitudes: Vec<Vec<f64>>,
    pub best_delay_samples: Vec<usize>,
}

impl CafMap {
    pub fn num_rows(&self) -> usize {
        self.magnitudes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DopplerTrack {
    pub sensing_times_s: Vec<f64>,
    /// `None` where no bin cleared the threshold.
    pub doppler_hz: Vec<Option<f64>>,
}

impl DopplerTrack {
    pub fn len(&self) -> usize {
        self.sensing_times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensing_times_s.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensing_times_s.len() != self.doppler_hz.len() {
            return Err(Error::Contract("doppler track columns differ in length".into()));
        }
        if self.sensing_times_s.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::Contract("doppler track times must increase".into()));
        }
        Ok(())
    }
}

/// Reusable FFT plan and scratch for computing CAF rows.
pub struct CafProcessor {
    cfg: SensingConfig,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl CafProcessor {
    pub fn new(cfg: &SensingConfig) -> Result<Self> {
        cfg.validate()?;
        let len = cfg.window_len_samples * cfg.doppler_oversample;
        // Forward transforms use e^{−j}; the inverse kernel carries the e^{+j} sign.
        let fft = FftPlanner::new().plan_fft_inverse(len);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Ok(Self {
            cfg: cfg.clone(),
            fft,
            buf: vec![Complex64::new(0.0, 0.0); len],
            scratch,
        })
    }

    pub fn config(&self) -> &SensingConfig {
        &self.cfg
    }

    /// The row for the window starting at `start`, or `None` when the
    /// buffers end before the window does. Reference samples before the
    /// start of `y_r` count as zero.
    pub fn row(&mut self, y_s_hat: &[Complex64], y_r: &[Complex64], start: usize) -> Option<CafRow> {
        let nw = self.cfg.window_len_samples;
        let end = start.checked_add(nw)?;
        if end > y_s_hat.len() || end > y_r.len() {
            return None;
        }
        let half = self.cfg.half_bins();
        let len = self.buf.len();
        let mut best: Option<(Vec<f64>, usize, f64)> = None;
        let mut maxed = vec![0.0f64; 2 * half + 1];
        for tau in 0..=self.cfg.delay_search_samples {
            self.buf.fill(Complex64::new(0.0, 0.0));
            for (n, z) in self.buf[..nw].iter_mut().enumerate() {
                let i = start + n;
                if i >= tau {
                    *z = y_s_hat[i] * y_r[i - tau].conj();
                }
            }
            self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
            let row: Vec<f64> = (0..=2 * half)
                .map(|j| {
                    let q = j as i64 - half as i64;
                    self.buf[q.rem_euclid(len as i64) as usize].norm()
                })
                .collect();
            let peak = row.iter().copied().fold(0.0, f64::max);
            for (m, r) in maxed.iter_mut().zip(&row) {
                *m = m.max(*r);
            }
            if best.as_ref().is_none_or(|b| peak > b.2) {
                best = Some((row, tau, peak));
            }
        }
        let (_, best_delay_samples, _) = best.expect("delay range is never empty");
        Some(CafRow {
            magnitudes: maxed,
            best_delay_samples,
        })
    }
}

/// CAF row of window `k` (samples `k·N0 .. k·N0+N_w`); `None` past the end.
pub fn compute_caf_window(
    y_s_hat: &[Complex64],
    y_r: &[Complex64],
    cfg: &SensingConfig,
    k: usize,
) -> Result<Option<CafRow>> {
    let mut p = CafProcessor::new(cfg)?;
    Ok(p.row(y_s_hat, y_r, k * cfg.hop_samples))
}

fn check_pair(y_s: &BasebandBuffer, y_r: &BasebandBuffer, cfg: &SensingConfig) -> Result<()> {
    cfg.validate()?;
    if y_s.len() != y_r.len() {
        return Err(Error::Contract(format!(
            "surveillance has {} samples, reference {}",
            y_s.len(),
            y_r.len()
        )));
    }
    for b in [y_s, y_r] {
        if (b.sample_rate_hz - cfg.sample_rate_hz).abs() > 1e-9 * cfg.sample_rate_hz {
            return Err(Error::Contract(format!(
                "buffer sampled at {} Hz, sensing config expects {} Hz",
                b.sample_rate_hz, cfg.sample_rate_hz
            )));
        }
    }
    if y_s.len() < cfg.window_len_samples {
        return Err(Error::Contract(format!(
            "{} samples is shorter than one {}-sample window",
            y_s.len(),
            cfg.window_len_samples
        )));
    }
    Ok(())
}

/// CAF rows for every complete window of an already clutter-cancelled
/// surveillance buffer.
pub fn caf_spectrogram(y_s_hat: &BasebandBuffer, y_r: &BasebandBuffer, cfg: &SensingConfig) -> Result<CafMap> {
    check_pair(y_s_hat, y_r, cfg)?;
    let mut proc = CafProcessor::new(cfg)?;
    let rows = (0..cfg.num_windows(y_s_hat.len()))
        .map(|k| proc.row(&y_s_hat.samples, &y_r.samples, k * cfg.hop_samples).expect("window in range"))
        .collect();
    Ok(assemble(rows, y_s_hat.epoch_s, cfg))
}

fn assemble(rows: Vec<CafRow>, epoch_s: f64, cfg: &SensingConfig) -> CafMap {
    let sensing_times_s = (0..rows.len()).map(|k| cfg.window_time(epoch_s, k)).collect();
    let (magnitudes, best_delay_samples) = rows.into_iter().map(|r| (r.magnitudes, r.best_delay_samples)).unzip();
    CafMap {
        sensing_times_s,
        doppler_bins_hz: cfg.doppler_bins(),
        magnitudes,
        best_delay_samples,
    }
}

/// Clutter cancellation followed by the spectrogram, with the fit span
/// chosen by `clutter.span`.
pub fn caf_spectrogram_with_clutter(
    y_s: &BasebandBuffer,
    y_r: &BasebandBuffer,
    sensing: &SensingConfig,
    clutter: &ClutterConfig,
) -> Result<CafMap> {
    check_pair(y_s, y_r, sensing)?;
    match clutter.span {
        ClutterSpan::Buffer => {
            let cleaned = ls_clutter_cancel(&y_s.samples, &y_r.samples, clutter)?;
            let y_s_hat = BasebandBuffer::new(cleaned, y_s.sample_rate_hz, y_s.epoch_s)?;
            caf_spectrogram(&y_s_hat, y_r, sensing)
        }
        ClutterSpan::Window => {
            let nw = sensing.window_len_samples;
            let mut proc = CafProcessor::new(sensing)?;
            let mut rows = Vec::new();
            for k in 0..sensing.num_windows(y_s.len()) {
                let s = k * sensing.hop_samples;
                let yr = &y_r.samples[s..s + nw];
                let cleaned = ls_clutter_cancel(&y_s.samples[s..s + nw], yr, clutter)?;
                rows.push(proc.row(&cleaned, yr, 0).expect("window in range"));
            }
            Ok(assemble(rows, y_s.epoch_s, sensing))
        }
    }
}

/// Index of the strongest bin that clears the cell-averaging threshold
///
///   β(q) = γ/(2W+1)·Σ_{p=−W..W} R(q + p·stride)
///
/// where neighbours beyond the row edge are dropped and the average taken
/// over the cells that remain.
pub fn detect_bin(row: &[f64], gamma: f64, half_train_cells: usize, stride: usize) -> Option<usize> {
    let n = row.len() as i64;
    let w = half_train_cells as i64;
    let s = stride.max(1) as i64;
    let mut best: Option<usize> = None;
    for q in 0..n {
        let (mut sum, mut cells) = (0.0, 0usize);
        for p in -w..=w {
            let i = q + p * s;
            if (0..n).contains(&i) {
                sum += row[i as usize];
                cells += 1;
            }
        }
        let beta = gamma * sum / cells as f64;
        let r = row[q as usize];
        if r >= beta && best.is_none_or(|b| r > row[b]) {
            best = Some(q as usize);
        }
    }
    best
}

/// Detected Doppler of one CAF row, `None` if nothing clears the threshold.
/// Training cells sit one Doppler resolution apart regardless of grid
/// oversampling.
pub fn detect_doppler(row: &[f64], cfg: &SensingConfig) -> Option<f64> {
    let half = (row.len() / 2) as f64;
    detect_bin(row, cfg.gamma, cfg.half_train_cells, cfg.doppler_oversample)
        .map(|q| (q as f64 - half) * cfg.grid_step_hz())
}

pub fn detect_track(map: &CafMap, cfg: &SensingConfig) -> DopplerTrack {
    DopplerTrack {
        sensing_times_s: map.sensing_times_s.clone(),
        doppler_hz: map.magnitudes.iter().map(|r| detect_doppler(r, cfg)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{gen_transmit_signal, TransmitConfig};
    use std::f64::consts::PI;

    fn small_cfg() -> SensingConfig {
        SensingConfig {
            doppler_oversample: 1,
            ..SensingConfig::new(1e4)
        }
    }

    fn ref_signal(fs: f64, seconds: f64) -> Vec<Complex64> {
        gen_transmit_signal(&TransmitConfig::for_sample_rate(fs, seconds, 9))
            .unwrap()
            .samples
    }

    fn shifted(y: &[Complex64], f: f64, fs: f64) -> Vec<Complex64> {
        y.iter()
            .enumerate()
            .map(|(n, v)| v * Complex64::from_polar(1.0, -2.0 * PI * f * n as f64 / fs))
            .collect()
    }

    #[test]
    fn grid_layout() {
        let cfg = SensingConfig::new(1e6);
        assert_eq!(cfg.window_len_samples, 100_000);
        assert_eq!(cfg.hop_samples, 10_000);
        assert!((cfg.resolution_hz() - 10.0).abs() < 1e-12);
        assert_eq!(cfg.num_bins(), 201);
        assert_eq!(cfg.num_windows(1_000_000), 91);
        cfg.validate().unwrap();
    }

    #[test]
    fn narrow_grid_rejected_for_default_training_cells() {
        let cfg = SensingConfig {
            doppler_max_hz: 100.0,
            ..small_cfg()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn pure_shift_peaks_at_its_bin_with_full_energy() {
        let cfg = small_cfg();
        let yr = ref_signal(cfg.sample_rate_hz, 0.1);
        let ys = shifted(&yr, 20.0, cfg.sample_rate_hz);
        let row = compute_caf_window(&ys, &yr, &cfg, 0).unwrap().unwrap();
        let bins = cfg.doppler_bins();
        let q = row.magnitudes.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(bins[q], 20.0);
        let energy: f64 = yr.iter().map(|v| v.norm_sqr()).sum();
        assert!((row.magnitudes[q] / energy - 1.0).abs() < 1e-9);
        assert_eq!(detect_doppler(&row.magnitudes, &cfg), Some(20.0));
    }

    #[test]
    fn identity_peaks_at_zero() {
        let cfg = small_cfg();
        let yr = ref_signal(cfg.sample_rate_hz, 0.1);
        let row = compute_caf_window(&yr, &yr, &cfg, 0).unwrap().unwrap();
        assert_eq!(detect_doppler(&row.magnitudes, &cfg), Some(0.0));
    }

    #[test]
    fn end_of_stream_is_none() {
        let cfg = small_cfg();
        let yr = ref_signal(cfg.sample_rate_hz, 0.1);
        assert!(compute_caf_window(&yr, &yr, &cfg, 1).unwrap().is_none());
    }

    #[test]
    fn flat_row_is_missing() {
        for gamma in [1.0001, 3.0, 10.0] {
            assert_eq!(detect_bin(&[2.5; 101], gamma, 25, 1), None);
        }
    }

    #[test]
    fn spike_detected() {
        let mut row = vec![1.0; 101];
        row[70] = 100.0;
        assert_eq!(detect_bin(&row, 3.0, 10, 1), Some(70));
    }

    #[test]
    fn edge_threshold_renormalized() {
        // At q = 0 only W+1 cells remain; a spike there must still be found.
        let mut row = vec![1.0; 51];
        row[0] = 10.0;
        assert_eq!(detect_bin(&row, 3.0, 25, 1), Some(0));
    }

    #[test]
    fn short_buffer_rejected() {
        let cfg = small_cfg();
        let b = BasebandBuffer::new(vec![Complex64::new(1.0, 0.0); 500], 1e4, 0.0).unwrap();
        assert!(matches!(caf_spectrogram(&b, &b, &cfg), Err(Error::Contract(_))));
    }

    #[test]
    fn spectrogram_rows_and_times() {
        let cfg = small_cfg();
        let yr = BasebandBuffer::new(ref_signal(cfg.sample_rate_hz, 1.0), 1e4, 0.25).unwrap();
        let map = caf_spectrogram(&yr, &yr, &cfg).unwrap();
        assert_eq!(map.num_rows(), 91);
        assert!((map.sensing_times_s[0] - 0.3).abs() < 1e-12);
        assert!((map.sensing_times_s[90] - 1.2).abs() < 1e-12);
        assert!(map.magnitudes.iter().all(|r| r.len() == cfg.num_bins()));
    }
}
