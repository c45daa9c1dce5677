//! Least-squares clutter cancellation.
//!
//! The surveillance signal is projected onto `num_taps` delayed copies of the
//! reference signal and the projection is subtracted. Anything the reference
//! can explain with a fixed short FIR (direct path, static multipath) goes;
//! Doppler-shifted echoes are nearly orthogonal to those columns and stay.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which samples one least-squares fit covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClutterSpan {
    /// One fit over the whole recording.
    #[default]
    Buffer,
    /// A separate fit for every CAF window.
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClutterConfig {
    /// Delay span of the clutter model, samples (lags 0..num_taps-1).
    pub num_taps: usize,
    /// Diagonal loading, relative to the mean diagonal of the normal matrix.
    pub regularization: f64,
    pub span: ClutterSpan,
}

impl Default for ClutterConfig {
    fn default() -> Self {
        Self {
            num_taps: 16,
            regularization: 1e-8,
            span: ClutterSpan::Buffer,
        }
    }
}

/// Minimum ratio of fitted samples to taps.
pub const MIN_SAMPLES_PER_TAP: usize = 100;

/// Eigenvalue ratio below which an unloaded normal matrix is refused.
const MIN_RECIPROCAL_CONDITION: f64 = 1e-12;

impl ClutterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_taps == 0 {
            return Err(Error::Config("clutter model needs at least one tap".into()));
        }
        if !(self.regularization.is_finite() && self.regularization >= 0.0) {
            return Err(Error::Config("clutter regularization must be non-negative".into()));
        }
        Ok(())
    }
}

/// `y_s − Y_r·ĉ`, with `Y_r[n][i] = y_r[n − i]` (zero before the start) and
/// `ĉ = argmin ‖y_s − Y_r c‖² + ε‖c‖²`.
pub fn ls_clutter_cancel(y_s: &[Complex64], y_r: &[Complex64], cfg: &ClutterConfig) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let n = y_s.len();
    let m = cfg.num_taps;
    if y_r.len() != n {
        return Err(Error::Contract(format!(
            "surveillance window has {n} samples, reference {}",
            y_r.len()
        )));
    }
    if n < MIN_SAMPLES_PER_TAP * m {
        return Err(Error::Contract(format!(
            "{m} clutter taps need at least {} samples, got {n}",
            MIN_SAMPLES_PER_TAP * m
        )));
    }

    // Normal matrix G[i][j] = Σ_n conj(y_r[n−i])·y_r[n−j]. For i ≤ j with
    // lag l = j − i this is the full-length lag product minus the i terms
    // that fall off the end of the window.
    let lag: Vec<Complex64> = (0..m)
        .map(|l| (0..n - l).map(|k| y_r[k + l].conj() * y_r[k]).sum())
        .collect();
    let mut g = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let l = j - i;
            let tail: Complex64 = (n - j..n - l).map(|k| y_r[k + l].conj() * y_r[k]).sum();
            let v = lag[l] - tail;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    let b = DVector::from_iterator(
        m,
        (0..m).map(|i| (i..n).map(|k| y_r[k - i].conj() * y_s[k]).sum::<Complex64>()),
    );

    let mean_diag = (0..m).map(|i| g[(i, i)].re).sum::<f64>() / m as f64;
    if cfg.regularization == 0.0 {
        let eig = g.clone().symmetric_eigenvalues();
        let hi = eig.max();
        let lo = eig.min();
        if !(hi > 0.0 && lo > MIN_RECIPROCAL_CONDITION * hi) {
            return Err(Error::IllConditioned(format!(
                "eigenvalue ratio {:.3e} with no regularization; set a positive regularization",
                if hi > 0.0 { lo / hi } else { 0.0 }
            )));
        }
    } else {
        let eps = cfg.regularization * mean_diag;
        for i in 0..m {
            g[(i, i)] += Complex64::new(eps, 0.0);
        }
    }
    let chol = g.cholesky().ok_or_else(|| {
        Error::IllConditioned("normal matrix is not positive definite; increase regularization".into())
    })?;
    let c = chol.solve(&b);

    let mut out = y_s.to_vec();
    for (i, ci) in c.iter().enumerate() {
        for k in i..n {
            out[k] -= ci * y_r[k - i];
        }
    }
    Ok(out)
}
