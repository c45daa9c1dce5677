//! Scripted pen strokes used as ground truth.
//!
//! A stroke is a chain of segments drawn at constant speed; the pen stops
//! for `pause_s` at every junction between segments (the turning points)
//! and the track is sampled every `step_s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::TargetTrack;
use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StrokeShape {
    /// Two stacked bowls, three turning points.
    Digit3,
    /// Ten-vertex star outline drawn from an inner vertex back to itself,
    /// nine turning points.
    Star,
    /// Left-to-right horizontal line.
    Line,
    /// Corner points in units of `scale_m`, relative to `center_m`.
    Polyline { points: Vec<Point2> },
}

impl StrokeShape {
    pub fn name(&self) -> &'static str {
        match self {
            StrokeShape::Digit3 => "digit3",
            StrokeShape::Star => "star",
            StrokeShape::Line => "line",
            StrokeShape::Polyline { .. } => "polyline",
        }
    }

    /// Parses the named shapes (`digit3`, `star`, `line`).
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "digit3" | "3" => Some(StrokeShape::Digit3),
            "star" => Some(StrokeShape::Star),
            "line" => Some(StrokeShape::Line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeSpec {
    pub shape: StrokeShape,
    /// Height of the digit, outer diameter of the star, length of the line.
    pub scale_m: f64,
    pub speed_mps: f64,
    pub pause_s: f64,
    pub center_m: Point2,
    pub step_s: f64,
}

impl Default for StrokeSpec {
    /// A 6 cm digit "3" at 0.1 m/s with 0.2 s stops, centred at (0.5, 0.5).
    fn default() -> Self {
        Self {
            shape: StrokeShape::Digit3,
            scale_m: 0.06,
            speed_mps: 0.1,
            pause_s: 0.2,
            center_m: Point2::new(0.5, 0.5),
            step_s: 0.01,
        }
    }
}

/// Chords per degree of arc in the digit template.
const ARC_CHORD_DEG: f64 = 10.0;

fn arc(c: Point2, r: f64, from_deg: f64, to_deg: f64) -> Vec<Point2> {
    let n = ((from_deg - to_deg).abs() / ARC_CHORD_DEG).round().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            let a = from_deg + (to_deg - from_deg) * i as f64 / n as f64;
            c + Point2::from_polar(r, a.to_radians())
        })
        .collect()
}

impl StrokeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale_m > 0.01 && self.scale_m <= 0.5) {
            return Err(Error::Config(format!("stroke scale {} m outside (0.01, 0.5]", self.scale_m)));
        }
        if !(self.speed_mps > 0.0 && self.speed_mps <= 1.0) {
            return Err(Error::Config(format!("pen speed {} m/s outside (0, 1]", self.speed_mps)));
        }
        if !(self.pause_s.is_finite() && self.pause_s >= 0.0) {
            return Err(Error::Config("pause must be non-negative".into()));
        }
        if !(self.step_s.is_finite() && self.step_s > 0.0) {
            return Err(Error::Config("sampling step must be positive".into()));
        }
        if !self.center_m.is_finite() {
            return Err(Error::Config("stroke centre must be finite".into()));
        }
        if let StrokeShape::Polyline { points } = &self.shape {
            if points.len() < 2 {
                return Err(Error::Config("polyline needs at least two points".into()));
            }
            if points.windows(2).any(|w| w[0].dist(w[1]) == 0.0 || !w[1].is_finite()) {
                return Err(Error::Config("polyline points must be finite and distinct".into()));
            }
        }
        Ok(())
    }

    /// The stroke as pen-down segments, in scene coordinates. The pen pauses
    /// between consecutive segments.
    pub fn segments(&self) -> Vec<Vec<Point2>> {
        let s = self.scale_m;
        let segs: Vec<Vec<Point2>> = match &self.shape {
            StrokeShape::Digit3 => {
                let h = s / 4.0;
                let top = Point2::new(0.0, h);
                let bottom = Point2::new(0.0, -h);
                vec![
                    arc(top, h, 150.0, 0.0),
                    arc(top, h, 0.0, -90.0),
                    arc(bottom, h, 90.0, 0.0),
                    arc(bottom, h, 0.0, -150.0),
                ]
            }
            StrokeShape::Star => {
                let outer = s / 2.0;
                let inner = outer * (72f64.to_radians().cos() / 36f64.to_radians().cos());
                let vertex = |i: usize| {
                    let a = PI / 2.0 + (i as f64 + 1.0) * PI / 5.0;
                    Point2::from_polar(if i.is_multiple_of(2) { inner } else { outer }, a)
                };
                (0..10).map(|i| vec![vertex(i), vertex((i + 1) % 10)]).collect()
            }
            StrokeShape::Line => vec![vec![Point2::new(-s / 2.0, 0.0), Point2::new(s / 2.0, 0.0)]],
            StrokeShape::Polyline { points } => points.windows(2).map(|w| vec![w[0] * s, w[1] * s]).collect(),
        };
        segs.into_iter()
            .map(|seg| seg.into_iter().map(|p| p + self.center_m).collect())
            .collect()
    }

    /// Start and end times of every stop at a turning point.
    pub fn pause_intervals(&self) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        let mut t = 0.0;
        let segs = self.segments();
        let mut out = Vec::new();
        for (i, seg) in segs.iter().enumerate() {
            t += path_length(seg) / self.speed_mps;
            if i + 1 < segs.len() {
                out.push((t, t + self.pause_s));
                t += self.pause_s;
            }
        }
        Ok(out)
    }

    /// Time from pen-down to pen-up.
    pub fn duration_s(&self) -> f64 {
        let segs = self.segments();
        segs.iter().map(|s| path_length(s)).sum::<f64>() / self.speed_mps
            + self.pause_s * segs.len().saturating_sub(1) as f64
    }
}

fn path_length(p: &[Point2]) -> f64 {
    p.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Position along a polyline at arc length `d`, clamped to its ends.
fn point_at(p: &[Point2], mut d: f64) -> Point2 {
    for w in p.windows(2) {
        let l = w[0].dist(w[1]);
        if d <= l {
            return w[0].lerp(w[1], d / l);
        }
        d -= l;
    }
    *p.last().unwrap()
}

/// Samples the stroke every `step_s` from pen-down (t = 0) until the
/// first sample at or after pen-up.
pub fn gen_stroke(spec: &StrokeSpec) -> Result<TargetTrack> {
    spec.validate()?;
    let segs = spec.segments();
    let lengths: Vec<f64> = segs.iter().map(|s| path_length(s)).collect();
    let total = spec.duration_s();
    let n = (total / spec.step_s - 1e-9).ceil().max(0.0) as usize + 1;

    let mut times = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    let (mut seg, mut seg_start) = (0usize, 0.0f64);
    for k in 0..n {
        let t = k as f64 * spec.step_s;
        // Advance past segments (and their trailing pause) that end before t.
        while seg + 1 < segs.len() && t >= seg_start + lengths[seg] / spec.speed_mps + spec.pause_s {
            seg_start += lengths[seg] / spec.speed_mps + spec.pause_s;
            seg += 1;
        }
        let d = ((t - seg_start) * spec.speed_mps).min(lengths[seg]);
        times.push(t);
        positions.push(point_at(&segs[seg], d));
    }
    TargetTrack::new(times, positions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(shape: StrokeShape) -> StrokeSpec {
        StrokeSpec {
            shape,
            ..StrokeSpec::default()
        }
    }

    fn steps(track: &TargetTrack) -> Vec<f64> {
        track.positions.windows(2).map(|w| w[0].dist(w[1])).collect()
    }

    #[test]
    fn line_length_arithmetic() {
        let s = StrokeSpec {
            scale_m: 0.05,
            pause_s: 0.0,
            ..spec(StrokeShape::Line)
        };
        let t = gen_stroke(&s).unwrap();
        assert!((s.duration_s() - 0.5).abs() < 1e-12);
        assert_eq!(t.len(), 51);
        assert!(t.positions[50].dist(Point2::new(0.525, 0.5)) < 1e-12);
    }

    #[test]
    fn turning_point_counts() {
        assert_eq!(spec(StrokeShape::Digit3).pause_intervals().unwrap().len(), 3);
        assert_eq!(spec(StrokeShape::Star).pause_intervals().unwrap().len(), 9);
        assert_eq!(spec(StrokeShape::Line).pause_intervals().unwrap().len(), 0);
    }

    #[test]
    fn digit3_dwells_are_still() {
        let s = spec(StrokeShape::Digit3);
        let t = gen_stroke(&s).unwrap();
        for (a, b) in s.pause_intervals().unwrap() {
            assert!((b - a - 0.2).abs() < 1e-12);
            let idx: Vec<usize> = (0..t.len())
                .filter(|&k| t.times_s[k] >= a - 1e-12 && t.times_s[k] <= b + 1e-12)
                .collect();
            assert!(idx.len() >= 20);
            for w in idx.windows(2) {
                assert!(t.positions[w[0]].dist(t.positions[w[1]]) < 1e-15);
            }
        }
    }

    #[test]
    fn constant_speed() {
        for shape in [StrokeShape::Digit3, StrokeShape::Star, StrokeShape::Line] {
            let s = spec(shape);
            let max = steps(&gen_stroke(&s).unwrap()).into_iter().fold(0.0, f64::max);
            assert!((max - s.speed_mps * s.step_s).abs() < 1e-9, "{}: {max}", s.shape.name());
        }
    }

    #[test]
    fn digit3_template_geometry() {
        let s = spec(StrokeShape::Digit3);
        let segs = s.segments();
        let c = s.center_m;
        let h = s.scale_m / 4.0;
        // Middle cusp joins the two bowls.
        assert!(segs[1].last().unwrap().dist(c) < 1e-12);
        assert!(segs[2][0].dist(c) < 1e-12);
        assert!(segs[0].last().unwrap().dist(c + Point2::new(h, h)) < 1e-12);
        let ys: Vec<f64> = segs.iter().flatten().map(|p| p.y - c.y).collect();
        let span = ys.iter().cloned().fold(f64::MIN, f64::max) - ys.iter().cloned().fold(f64::MAX, f64::min);
        assert!((span - s.scale_m).abs() < 1e-12);
    }

    #[test]
    fn star_is_closed() {
        let s = spec(StrokeShape::Star);
        let segs = s.segments();
        assert_eq!(segs.len(), 10);
        assert!(segs[0][0].dist(segs[9][1]) < 1e-12);
        let t = gen_stroke(&s).unwrap();
        assert!(t.positions[0].dist(*t.positions.last().unwrap()) < 1e-12);
    }

    #[test]
    fn polyline_scaled_about_centre() {
        let s = StrokeSpec {
            shape: StrokeShape::Polyline {
                points: vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)],
            },
            scale_m: 0.04,
            ..StrokeSpec::default()
        };
        let segs = s.segments();
        assert!(segs[1][1].dist(Point2::new(0.54, 0.54)) < 1e-12);
        assert_eq!(s.pause_intervals().unwrap().len(), 1);
    }

    #[test]
    fn invalid_specs() {
        for bad in [
            StrokeSpec { scale_m: 0.01, ..StrokeSpec::default() },
            StrokeSpec { scale_m: 0.6, ..StrokeSpec::default() },
            StrokeSpec { speed_mps: 0.0, ..StrokeSpec::default() },
            StrokeSpec { speed_mps: 1.5, ..StrokeSpec::default() },
            StrokeSpec { pause_s: -0.1, ..StrokeSpec::default() },
        ] {
            assert!(matches!(gen_stroke(&bad), Err(Error::Config(_))));
        }
    }

    #[test]
    fn shape_serialization() {
        let j = serde_json::to_string(&StrokeShape::Digit3).unwrap();
        assert_eq!(j, r#"{"kind":"digit3"}"#);
        let p: StrokeShape = serde_json::from_str(r#"{"kind":"polyline","points":[[0,0],[1,1]]}"#).unwrap();
        assert_eq!(p.name(), "polyline");
    }
}
