use std::fmt;

use serde::{Deserialize, Serialize};

/// Axis-aligned pixel box. `x_max`/`y_max` are exclusive, so the area is
/// `(x_max - x_min) * (y_max - y_min)` with no off-by-one adjustments.
///
/// Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    x_min: u32,
    y_min: u32,
    x_max: u32,
    y_max: u32,
}

impl BBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Result<Self, String> {
        if x_min >= x_max || y_min >= y_max {
            return Err(format!(
                "degenerate box [{x_min},{y_min},{x_max},{y_max}]: min must be below max"
            ));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> u32 {
        self.x_min
    }
    pub fn y_min(&self) -> u32 {
        self.y_min
    }
    pub fn x_max(&self) -> u32 {
        self.x_max
    }
    pub fn y_max(&self) -> u32 {
        self.y_max
    }

    pub fn width(&self) -> u32 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        self.x_max <= width && self.y_max <= height
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        let w = self
            .x_max
            .min(other.x_max)
            .saturating_sub(self.x_min.max(other.x_min));
        let h = self
            .y_max
            .min(other.y_max)
            .saturating_sub(self.y_min.max(other.y_min));
        u64::from(w) * u64::from(h)
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.intersection_area(other) > 0
    }

    /// Intersection over union, in `[0, 1]`.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }

    /// Fraction of `self` covered by `other` (intersection over own area).
    pub fn coverage_by(&self, other: &BBox) -> f64 {
        self.intersection_area(other) as f64 / self.area() as f64
    }

    /// Grows every edge by `ratio` times the side length along that axis,
    /// rounded to the nearest pixel, then clamps to `[0,width] x [0,height]`.
    pub fn expand(&self, ratio: f64, width: u32, height: u32) -> BBox {
        let dx = (ratio.max(0.0) * f64::from(self.width())).round() as u32;
        let dy = (ratio.max(0.0) * f64::from(self.height())).round() as u32;
        BBox {
            x_min: self.x_min.saturating_sub(dx),
            y_min: self.y_min.saturating_sub(dy),
            x_max: self.x_max.saturating_add(dx).min(width.max(self.x_max)),
            y_max: self.y_max.saturating_add(dy).min(height.max(self.y_max)),
        }
    }

    pub fn scaled(&self, factor: u32) -> BBox {
        BBox {
            x_min: self.x_min * factor,
            y_min: self.y_min * factor,
            x_max: self.x_max * factor,
            y_max: self.y_max * factor,
        }
    }

    pub fn as_array(&self) -> [u32; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

impl TryFrom<[u32; 4]> for BBox {
    type Error = String;

    fn try_from(v: [u32; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        b.as_array()
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{},{},{}]",
            self.x_min, self.y_min, self.x_max, self.y_max
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x0: u32, y0: u32, x1: u32, y1: u32) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn iou_examples() {
        assert_eq!(b(0, 0, 10, 10).iou(&b(0, 0, 10, 10)), 1.0);
        assert_eq!(b(0, 0, 10, 10).iou(&b(20, 20, 30, 30)), 0.0);
        assert!((b(0, 0, 10, 10).iou(&b(5, 0, 15, 10)) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn expand_examples() {
        assert_eq!(b(10, 10, 20, 20).expand(0.2, 100, 100), b(8, 8, 22, 22));
        assert_eq!(b(0, 0, 50, 50).expand(0.5, 60, 60), b(0, 0, 60, 60));
        assert_eq!(b(10, 10, 20, 20).expand(0.0, 100, 100), b(10, 10, 20, 20));
    }

    #[test]
    fn degenerate_boxes_rejected() {
        assert!(BBox::new(5, 0, 5, 10).is_err());
        assert!(BBox::new(0, 9, 10, 3).is_err());
        assert!(serde_json::from_str::<BBox>("[3,3,1,1]").is_err());
        assert_eq!(serde_json::to_string(&b(1, 2, 3, 4)).unwrap(), "[1,2,3,4]");
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0u32..500, 0u32..500, 1u32..300, 1u32..300)
            .prop_map(|(x, y, w, h)| BBox::new(x, y, x + w, y + h).unwrap())
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), c in arb_box()) {
            let ab = a.iou(&c);
            prop_assert_eq!(ab, c.iou(&a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(a.iou(&a), 1.0);
        }

        #[test]
        fn expand_is_monotone(a in arb_box(), ratio in 0.0f64..2.0) {
            let (w, h) = (a.x_max().max(800), a.y_max().max(800));
            let grown = a.expand(ratio, w, h);
            prop_assert!(grown.contains(&a));
            prop_assert!(grown.fits_within(w, h));
            prop_assert_eq!(a.expand(0.0, w, h), a);
        }
    }
}
