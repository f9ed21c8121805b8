use core::convert::TryFrom;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Axis-aligned pixel box, `x0 < x1`, `y0 < y1`. Serialized as `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateBox;

impl fmt::Display for DegenerateBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("bounding box needs x0 < x1 and y0 < y1")
    }
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Option<BBox> {
        let ok = [x0, y0, x1, y1].iter().all(|v| v.is_finite()) && x0 < x1 && y0 < y1;
        ok.then_some(BBox { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    /// Clip to `[0, width] × [0, height]`; `None` if nothing is left.
    pub fn clamp(&self, width: f64, height: f64) -> Option<BBox> {
        BBox::new(
            self.x0.clamp(0.0, width),
            self.y0.clamp(0.0, height),
            self.x1.clamp(0.0, width),
            self.y1.clamp(0.0, height),
        )
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = DegenerateBox;
    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3]).ok_or(DegenerateBox)
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

pub fn bbox_area(b: &BBox) -> f64 {
    b.width() * b.height()
}

pub fn bbox_iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let ih = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = iw * ih;
    let union = bbox_area(a) + bbox_area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Grow `b` about its center by `s` per dimension, then clip to the image.
/// Factors below 1 are treated as 1.
pub fn scale_bbox(b: &BBox, s: f64, width: f64, height: f64) -> BBox {
    let s = s.max(1.0);
    let (cx, cy) = b.center();
    let hw = b.width() * s / 2.0;
    let hh = b.height() * s / 2.0;
    let grown = BBox {
        x0: cx - hw,
        y0: cy - hh,
        x1: cx + hw,
        y1: cy + hh,
    };
    // A valid box keeps positive extent inside the image unless it lay
    // entirely outside; then fall back to the unclipped input.
    grown.clamp(width, height).unwrap_or(*b)
}

/// Translate a crop-local box into image coordinates.
pub fn to_global(b: &BBox, origin: (f64, f64)) -> BBox {
    BBox {
        x0: b.x0 + origin.0,
        y0: b.y0 + origin.1,
        x1: b.x1 + origin.0,
        y1: b.y1 + origin.1,
    }
}
