use serde::{Deserialize, Serialize};

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    /// A `w × h` box centred on `(cx, cy)`, clipped to `[0, W) × [0, H)`.
    ///
    /// The unclipped left edge is `floor(cx − w/2 + ½)`, so an unclipped box
    /// is exactly `w × h` and always covers the pixel containing the centre.
    pub fn centered(cx: f64, cy: f64, w: u32, h: u32, bounds: (u32, u32)) -> Self {
        let span = |c: f64, len: u32, limit: u32| {
            let lo = (c - f64::from(len) / 2.0 + 0.5).floor() as i64;
            let hi = lo + i64::from(len);
            (lo.clamp(0, i64::from(limit)) as u32, hi.clamp(0, i64::from(limit)) as u32)
        };
        let (x0, x1) = span(cx, w, bounds.0);
        let (y0, y1) = span(cy, h, bounds.1);
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> u32 {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> u32 {
        self.y1.saturating_sub(self.y0)
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }

    pub fn within(&self, bounds: (u32, u32)) -> bool {
        self.x0 <= self.x1 && self.y0 <= self.y1 && self.x1 <= bounds.0 && self.y1 <= bounds.1
    }
}
