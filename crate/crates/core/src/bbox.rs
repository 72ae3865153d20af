//! Axis-aligned pixel boxes and detector outputs.

use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle in continuous pixel coordinates.
///
/// Area semantics are half-open: a box spans `[x_min, x_max) x [y_min, y_max)`,
/// so its area is `(x_max - x_min) * (y_max - y_min)` with no `+1` correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    /// Builds a box, swapping coordinates so that `min <= max` holds.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            x_min: x0.min(x1),
            y_min: y0.min(y1),
            x_max: x0.max(x1),
            y_max: y0.max(y1),
        }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn is_valid(&self) -> bool {
        self.x_min.is_finite()
            && self.y_min.is_finite()
            && self.x_max.is_finite()
            && self.y_max.is_finite()
            && self.x_max >= self.x_min
            && self.y_max >= self.y_min
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            x_min: self.x_min * factor,
            y_min: self.y_min * factor,
            x_max: self.x_max * factor,
            y_max: self.y_max * factor,
        }
    }

    pub fn intersection_area(&self, other: &Self) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Corners in clockwise image order: top-left, top-right, bottom-right, bottom-left.
    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.x_min, self.y_min),
            (self.x_max, self.y_min),
            (self.x_max, self.y_max),
            (self.x_min, self.y_max),
        ]
    }

    /// Smallest box containing all given points. `None` for an empty iterator.
    pub fn hull<I: IntoIterator<Item = (f64, f64)>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let (x, y) = it.next()?;
        let mut b = Self::new(x, y, x, y);
        for (x, y) in it {
            b.x_min = b.x_min.min(x);
            b.y_min = b.y_min.min(y);
            b.x_max = b.x_max.max(x);
            b.y_max = b.y_max.max(y);
        }
        Some(b)
    }

    /// Clips the box to `[0, width) x [0, height)`. `None` if nothing remains.
    pub fn clamp_to(&self, width: f64, height: f64) -> Option<Self> {
        let b = Self {
            x_min: self.x_min.max(0.0),
            y_min: self.y_min.max(0.0),
            x_max: self.x_max.min(width),
            y_max: self.y_max.min(height),
        };
        (b.x_max > b.x_min && b.y_max > b.y_min).then_some(b)
    }
}

/// Intersection over union. Zero for disjoint boxes and for degenerate pairs.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spectrum {
    Optical,
    Thermal,
}

impl std::fmt::Display for Spectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Spectrum::Optical => f.write_str("optical"),
            Spectrum::Thermal => f.write_str("thermal"),
        }
    }
}

/// A single detector output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    /// Confidence in `[0, 1]`.
    pub score: f64,
    pub spectrum: Spectrum,
    pub frame: u64,
    /// Capture time in seconds.
    pub timestamp: f64,
    pub human_id: Option<u64>,
}

impl Detection {
    pub fn new(bbox: BoundingBox, score: f64, spectrum: Spectrum, frame: u64, timestamp: f64) -> Self {
        Self {
            bbox,
            score,
            spectrum,
            frame,
            timestamp,
            human_id: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iou_examples() {
        let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        let b = BoundingBox::new(5.0, 0.0, 15.0, 10.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        let c = BoundingBox::new(20.0, 20.0, 30.0, 30.0);
        assert_eq!(iou(&a, &c), 0.0);
        let d = BoundingBox::new(3.0, 3.0, 3.0, 3.0);
        assert_eq!(iou(&d, &d), 0.0);
    }

    #[test]
    fn hull_and_clamp() {
        let h = BoundingBox::hull([(3.0, 1.0), (-1.0, 5.0), (2.0, 2.0)]).unwrap();
        assert_eq!(h, BoundingBox::new(-1.0, 1.0, 3.0, 5.0));
        assert_eq!(h.clamp_to(2.0, 10.0).unwrap(), BoundingBox::new(0.0, 1.0, 2.0, 5.0));
        assert!(h.translate(100.0, 0.0).clamp_to(10.0, 10.0).is_none());
    }

    /// Rasterized area estimate on a fine sampling grid.
    fn monte_carlo_iou(a: &BoundingBox, b: &BoundingBox, rng: &mut ChaCha8Rng) -> f64 {
        let hull = BoundingBox::hull(a.corners().into_iter().chain(b.corners())).unwrap();
        let (mut inter, mut union) = (0usize, 0usize);
        for _ in 0..40_000 {
            let x = rng.random_range(hull.x_min..hull.x_max);
            let y = rng.random_range(hull.y_min..hull.y_max);
            let ia = x >= a.x_min && x < a.x_max && y >= a.y_min && y < a.y_max;
            let ib = x >= b.x_min && x < b.x_max && y >= b.y_min && y < b.y_max;
            inter += (ia && ib) as usize;
            union += (ia || ib) as usize;
        }
        inter as f64 / union as f64
    }

    #[test]
    fn iou_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let a = BoundingBox::from_center(
                rng.random_range(0.0..20.0),
                rng.random_range(0.0..20.0),
                rng.random_range(4.0..20.0),
                rng.random_range(4.0..20.0),
            );
            let b = BoundingBox::from_center(
                rng.random_range(0.0..20.0),
                rng.random_range(0.0..20.0),
                rng.random_range(4.0..20.0),
                rng.random_range(4.0..20.0),
            );
            let exact = iou(&a, &b);
            let est = monte_carlo_iou(&a, &b, &mut rng);
            assert!((exact - est).abs() < 0.02, "{exact} vs {est}");
        }
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (-100.0..100.0f64, -100.0..100.0f64, 0.0..50.0f64, 0.0..50.0f64)
            .prop_map(|(x, y, w, h)| BoundingBox::new(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_bounded_translation_invariant(
            a in arb_box(), b in arb_box(), dx in -50.0..50.0f64, dy in -50.0..50.0f64
        ) {
            let v = iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&b, &a));
            let moved = iou(&a.translate(dx, dy), &b.translate(dx, dy));
            prop_assert!((v - moved).abs() < 1e-9);
        }
    }
}
