//! Passive bistatic mmWave Doppler sensing.
//!
//! The crate covers both directions of the chain:
//!
//! * forward: [`waveform`] synthesizes the transmit signal and [`channel`]
//!   produces reference and surveillance beams for two receivers watching a
//!   moving point target whose path comes from [`stroke`];
//! * inverse: [`clutter`] removes static echoes, [`caf`] turns each receiver
//!   into a time-Doppler map and a detected Doppler track, and [`tracker`]
//!   fuses the two tracks into a 2-D trajectory, scored by [`metrics`].
//!
//! [`pipeline`] runs the stages over files on disk (see [`formats`]).

pub mod buffer;
pub mod caf;
pub mod channel;
pub mod clutter;
pub mod error;
pub mod formats;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod scenario;
pub mod stroke;
pub mod tracker;
pub mod waveform;

/// Version stamped into every file this crate writes.
pub const FORMAT_VERSION: u32 = 1;

pub use buffer::{BasebandBuffer, ChannelRole, IqSidecar};
pub use caf::{caf_spectrogram, caf_spectrogram_with_clutter, compute_caf_window, detect_doppler, CafMap, DopplerTrack, SensingConfig};
pub use channel::{bistatic_truth, simulate_reference, simulate_surveillance, ChannelScene, PathSpec, TargetTrack};
pub use clutter::{ls_clutter_cancel, ClutterConfig, ClutterSpan};
pub use error::{Error, Result};
pub use geometry::{Geometry, Point2, Receiver};
pub use scenario::Scenario;
pub use metrics::{psd, trajectory_error, ErrorStats};
pub use stroke::{gen_stroke, StrokeShape, StrokeSpec};
pub use tracker::{
    align_tracks, angles_from_position, doppler_from_motion, initial_position, solve_velocity, step_position,
    track_trajectory, InitialObservation, Trajectory, TrackerConfig,
};
pub use waveform::{gen_test_tone, gen_transmit_signal, TransmitConfig};
