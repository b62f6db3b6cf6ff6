use super::{Point, SceneState};

pub const DEPTH_ROWS: usize = 50;
pub const DEPTH_COLS: usize = 90;

const BACKGROUND_MAX: f64 = 0.5;
const BLOCKER_MIN: f64 = 0.6;

/// Normalized inverse depth, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthTensor {
    values: Vec<f64>,
}

impl DepthTensor {
    pub fn from_values(values: Vec<f64>) -> crate::Result<Self> {
        if values.len() != DEPTH_ROWS * DEPTH_COLS {
            return Err(crate::Error::invalid(
                "depth",
                format!("expected {} values, got {}", DEPTH_ROWS * DEPTH_COLS, values.len()),
            ));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(crate::Error::invalid("depth", "values must lie in [0, 1]"));
        }
        Ok(DepthTensor { values })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * DEPTH_COLS + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        (DEPTH_ROWS, DEPTH_COLS)
    }
}

/// Floor area seen by the camera. The camera sits beyond the `min.y` edge
/// looking towards `max.y`; rows run from far (row 0) to near.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub min: Point,
    pub max: Point,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport {
            min: Point::new(-0.5, -2.5),
            max: Point::new(8.5, 2.5),
        }
    }
}

impl Viewport {
    fn pixel_centre(&self, row: usize, col: usize) -> Point {
        let fx = (col as f64 + 0.5) / DEPTH_COLS as f64;
        let fy = (row as f64 + 0.5) / DEPTH_ROWS as f64;
        Point::new(
            self.min.x + fx * (self.max.x - self.min.x),
            self.max.y - fy * (self.max.y - self.min.y),
        )
    }

    /// 1 at the camera edge, 0 at the far edge.
    fn proximity(&self, p: Point) -> f64 {
        ((self.max.y - p.y) / (self.max.y - self.min.y)).clamp(0.0, 1.0)
    }
}

fn background(row: usize, col: usize) -> f64 {
    // floor gradient plus a fixed ripple so pixels are not all alike
    let near = row as f64 / (DEPTH_ROWS - 1) as f64;
    let ripple = 0.5 + 0.5 * (col as f64 * 0.37).sin() * (row as f64 * 0.21).cos();
    BACKGROUND_MAX * (0.8 * near + 0.2 * ripple)
}

/// Renders with the default viewport.
pub fn render_depth(s: &SceneState) -> DepthTensor {
    render_depth_in(s, &Viewport::default())
}

/// Background field with the blocker drawn as a filled disc whose
/// intensity grows as it nears the camera. Background pixels stay in
/// `[0, 0.5]`, disc pixels in `[0.6, 1]`.
pub fn render_depth_in(s: &SceneState, view: &Viewport) -> DepthTensor {
    let disc = BLOCKER_MIN + (1.0 - BLOCKER_MIN) * view.proximity(s.blocker_pos);
    let mut values = Vec::with_capacity(DEPTH_ROWS * DEPTH_COLS);
    for row in 0..DEPTH_ROWS {
        for col in 0..DEPTH_COLS {
            let c = view.pixel_centre(row, col);
            values.push(if c.distance(s.blocker_pos) <= s.blocker_radius {
                disc
            } else {
                background(row, col)
            });
        }
    }
    DepthTensor { values }
}
