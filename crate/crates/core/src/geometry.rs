use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;
pub const DEFAULT_CARRIER_HZ: f64 = 60e9;

/// A point or vector in the horizontal sensing plane, metres.
/// Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, angle_rad: f64) -> Self {
        Self::new(r * angle_rad.cos(), r * angle_rad.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Direction of `self - from`, four-quadrant.
    pub fn bearing_from(self, from: Point2) -> f64 {
        (self.y - from.y).atan2(self.x - from.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        self + (other - self) * t
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receiver {
    Rx1,
    Rx2,
}

impl Receiver {
    pub const BOTH: [Receiver; 2] = [Receiver::Rx1, Receiver::Rx2];

    pub fn index(self) -> usize {
        match self {
            Receiver::Rx1 => 0,
            Receiver::Rx2 => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Receiver::Rx1 => "rx1",
            Receiver::Rx2 => "rx2",
        }
    }
}

/// Node layout. Receiver 1 sits at the origin and the transmitter on the
/// positive x-axis at `(d, 0)`; in NLoS scenes `tx_pos` is the virtual
/// (mirrored) transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub tx_pos: Point2,
    pub rx2_pos: Point2,
    #[serde(default = "default_fc")]
    pub fc_hz: f64,
    #[serde(default = "default_c")]
    pub c_mps: f64,
}

fn default_fc() -> f64 {
    DEFAULT_CARRIER_HZ
}

fn default_c() -> f64 {
    SPEED_OF_LIGHT_MPS
}

impl Default for Geometry {
    /// Transmitter 2.5 m from receiver 1, receivers 1 m apart, 60 GHz.
    fn default() -> Self {
        Self {
            tx_pos: Point2::new(2.5, 0.0),
            rx2_pos: Point2::new(1.0, 0.0),
            fc_hz: DEFAULT_CARRIER_HZ,
            c_mps: SPEED_OF_LIGHT_MPS,
        }
    }
}

/// Distances below this are treated as coincident nodes.
pub(crate) const COINCIDENCE_TOL_M: f64 = 1e-9;

impl Geometry {
    pub const RX1_POS: Point2 = Point2::ORIGIN;

    pub fn with_tx_distance(d: f64) -> Self {
        Self {
            tx_pos: Point2::new(d, 0.0),
            ..Self::default()
        }
    }

    pub fn rx_pos(&self, rx: Receiver) -> Point2 {
        match rx {
            Receiver::Rx1 => Self::RX1_POS,
            Receiver::Rx2 => self.rx2_pos,
        }
    }

    /// Transmitter x-coordinate `d`.
    pub fn tx_distance(&self) -> f64 {
        self.tx_pos.x
    }

    /// `2·fc/c`: Hz of monostatic Doppler per m/s of radial speed.
    pub fn doppler_scale(&self) -> f64 {
        2.0 * self.fc_hz / self.c_mps
    }

    pub fn wavelength_m(&self) -> f64 {
        self.c_mps / self.fc_hz
    }

    pub fn bistatic_range(&self, p: Point2, rx: Receiver) -> f64 {
        p.dist(self.tx_pos) + p.dist(self.rx_pos(rx))
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_for_simulation()?;
        if self.tx_pos.dist(Self::RX1_POS) < COINCIDENCE_TOL_M
            || self.tx_pos.dist(self.rx2_pos) < COINCIDENCE_TOL_M
        {
            return Err(Error::Config("transmitter coincides with a receiver".into()));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) minus the transmitter separation check.
    pub fn validate_for_simulation(&self) -> Result<()> {
        if !(self.tx_pos.is_finite() && self.rx2_pos.is_finite()) {
            return Err(Error::Config("node positions must be finite".into()));
        }
        if self.rx2_pos.dist(Self::RX1_POS) < COINCIDENCE_TOL_M {
            return Err(Error::Config("receiver 2 coincides with receiver 1".into()));
        }
        if !(self.fc_hz.is_finite() && self.fc_hz > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if !(self.c_mps.is_finite() && self.c_mps > 0.0) {
            return Err(Error::Config("propagation speed must be positive".into()));
        }
        Ok(())
    }

    /// Fails if `p` sits on any node.
    pub fn check_clear_of_nodes(&self, p: Point2) -> Result<()> {
        for (name, node) in [("receiver 1", Self::RX1_POS), ("receiver 2", self.rx2_pos), ("transmitter", self.tx_pos)] {
            if p.dist(node) < COINCIDENCE_TOL_M {
                return Err(Error::DegenerateGeometry(format!(
                    "target at ({}, {}) coincides with {name}",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}
