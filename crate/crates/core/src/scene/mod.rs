//! Geometric multipath scenes.
//!
//! A scene is a 2-D floor plan with a transmitter, a receiver, point
//! reflectors and one disc-shaped blocker. Every path (line of sight, and
//! transmitter to reflector to receiver) becomes one multipath component
//! with amplitude `1 / length` and carrier phase `-2 pi f_c tau`; a path
//! with any segment passing within the blocker radius is attenuated by a
//! constant factor. Components are summed onto the nearest sampled tap,
//! measured relative to the line-of-sight delay, which lands on the
//! pre-cursor index.

mod depth_file;
mod render;
mod walk;

pub use depth_file::{read_depth, write_depth, DepthFrame, DEPTH_MAGIC};
pub use render::{render_depth, render_depth_in, DepthTensor, Viewport, DEPTH_COLS, DEPTH_ROWS};
pub use walk::{generate_scene_trace, SceneTrace, SceneTraceConfig, SceneTraceGenerator, WalkModel};

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::modem::CHIP_RATE_HZ;
use crate::trace::Cir;

pub const CARRIER_HZ: f64 = 2.45e9;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_BLOCKAGE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Distance from `p` to the segment `a`-`b`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(Point::new(a.x + t * dx, a.y + t * dy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneState {
    pub tx_pos: Point,
    pub rx_pos: Point,
    pub reflectors: Vec<Point>,
    pub blocker_pos: Point,
    pub blocker_radius: f64,
    /// Amplitude factor applied to blocked paths.
    pub blockage_factor: f64,
}

impl Default for SceneState {
    /// Eight-metre link with reflectors far enough away to reach the first
    /// two post-cursor taps at 4 samples per chip.
    fn default() -> Self {
        SceneState {
            tx_pos: Point::new(0.0, 0.0),
            rx_pos: Point::new(8.0, 0.0),
            reflectors: vec![
                Point::new(4.0, 12.0),
                Point::new(-10.0, 5.0),
                Point::new(20.0, -8.0),
                Point::new(4.0, -25.0),
                Point::new(30.0, 20.0),
            ],
            blocker_pos: Point::new(4.0, 2.0),
            blocker_radius: 0.3,
            blockage_factor: DEFAULT_BLOCKAGE,
        }
    }
}

impl SceneState {
    pub fn validate(&self) -> Result<()> {
        let points = [self.tx_pos, self.rx_pos, self.blocker_pos];
        if points.iter().chain(&self.reflectors).any(|p| !p.is_finite()) {
            return Err(Error::invalid("position", "coordinates must be finite"));
        }
        if !(self.blocker_radius.is_finite() && self.blocker_radius > 0.0) {
            return Err(Error::invalid("blocker_radius", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.blockage_factor) {
            return Err(Error::invalid("blockage_factor", "must lie in [0, 1]"));
        }
        if self.tx_pos == self.rx_pos {
            return Err(Error::arg("transmitter and receiver coincide"));
        }
        Ok(())
    }

    pub fn with_blocker(&self, pos: Point) -> Self {
        SceneState {
            blocker_pos: pos,
            ..self.clone()
        }
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathContribution {
    /// `None` for line of sight.
    pub reflector: Option<usize>,
    pub length_m: f64,
    pub delay_s: f64,
    pub blocked: bool,
    pub gain: Complex64,
}

fn path(s: &SceneState, reflector: Option<usize>) -> PathContribution {
    let corners: Vec<Point> = match reflector {
        None => vec![s.tx_pos, s.rx_pos],
        Some(i) => vec![s.tx_pos, s.reflectors[i], s.rx_pos],
    };
    let length_m: f64 = corners.windows(2).map(|w| w[0].distance(w[1])).sum();
    let blocked = corners
        .windows(2)
        .any(|w| segment_distance(s.blocker_pos, w[0], w[1]) <= s.blocker_radius);
    let delay_s = length_m / SPEED_OF_LIGHT;
    let mut amp = 1.0 / length_m;
    if blocked {
        amp *= s.blockage_factor;
    }
    PathContribution {
        reflector,
        length_m,
        delay_s,
        blocked,
        gain: Complex64::from_polar(amp, -2.0 * PI * CARRIER_HZ * delay_s),
    }
}

/// Line of sight first, then one entry per reflector in order.
pub fn path_contributions(s: &SceneState) -> Result<Vec<PathContribution>> {
    s.validate()?;
    let mut out = vec![path(s, None)];
    out.extend((0..s.reflectors.len()).map(|i| path(s, Some(i))));
    Ok(out)
}

/// Samples the scene's multipath onto the configured tap grid. Paths that
/// fall outside the tap window are dropped.
pub fn scene_to_cir(s: &SceneState, cfg: &ChannelConfig) -> Result<Cir> {
    cfg.validate()?;
    let paths = path_contributions(s)?;
    let tap_spacing = 1.0 / (CHIP_RATE_HZ * cfg.samples_per_chip as f64);
    let los_delay = paths[0].delay_s;
    let mut taps = vec![Complex64::new(0.0, 0.0); cfg.n_taps];
    for p in &paths {
        let offset = ((p.delay_s - los_delay) / tap_spacing).round() as i64;
        let idx = cfg.pre_cursor as i64 + offset;
        if (0..cfg.n_taps as i64).contains(&idx) {
            taps[idx as usize] += p.gain;
        }
    }
    Cir::new(taps, cfg.pre_cursor)
}
