//! Axis-aligned boxes and the IoU affinity used for association.
//!
//! Boxes are stored as top-left corner plus width/height, the layout of the
//! MOT CSV columns. The `(cx, cy, aspect, h)` form only exists at the Kalman
//! boundary.

use crate::error::{Error, Result};

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BBox {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

/// Kalman measurement parameterization: center, aspect ratio (w/h), height.
pub type StateVector = [f64; 4];

impl BBox {
    pub const fn new(left: f64, top: f64, width: f64, height: f64) -> Self {
        Self {
            left,
            top,
            width,
            height,
        }
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    pub fn area(&self) -> f64 {
        self.width.max(0.0) * self.height.max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.left + self.width / 2.0, self.top + self.height / 2.0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.left + dx, self.top + dy, self.width, self.height)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.left * s, self.top * s, self.width * s, self.height * s)
    }

    pub fn to_state_vector(&self) -> Result<StateVector> {
        if self.height <= 0.0 || self.height.is_nan() {
            return Err(Error::DegenerateBox {
                height: self.height,
            });
        }
        let (cx, cy) = self.center();
        Ok([cx, cy, self.width / self.height, self.height])
    }

    pub fn from_state_vector(v: StateVector) -> Result<Self> {
        let [_, _, aspect, h] = v;
        if !(h > 0.0 && aspect > 0.0) {
            return Err(Error::DegenerateState { aspect, height: h });
        }
        Ok(Self::from_state_unchecked(v))
    }

    /// Same conversion without the positivity check. Used for Kalman
    /// predictions, which may drift to a non-positive size while a track is
    /// lost; such a box has zero area and therefore zero IoU.
    pub(crate) fn from_state_unchecked(v: StateVector) -> Self {
        let [cx, cy, aspect, h] = v;
        let w = aspect * h;
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }
}

/// Intersection over union; 0 when the union has zero area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = a.right().min(b.right()) - a.left.max(b.left);
    let ih = a.bottom().min(b.bottom()) - a.top.max(b.top);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Pixel-count IoU on integer boxes: independent of the interval arithmetic above.
    fn raster_iou(a: (i32, i32, i32, i32), b: (i32, i32, i32, i32)) -> f64 {
        let inside = |r: (i32, i32, i32, i32), x: i32, y: i32| {
            x >= r.0 && x < r.0 + r.2 && y >= r.1 && y < r.1 + r.3
        };
        let (mut inter, mut union) = (0u32, 0u32);
        for y in -5..45 {
            for x in -5..45 {
                let (ia, ib) = (inside(a, x, y), inside(b, x, y));
                inter += (ia && ib) as u32;
                union += (ia || ib) as u32;
            }
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    fn b(l: f64, t: f64, w: f64, h: f64) -> BBox {
        BBox::new(l, t, w, h)
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&b(0., 0., 10., 10.), &b(0., 0., 10., 10.)), 1.0);
        assert_eq!(iou(&b(0., 0., 10., 10.), &b(20., 20., 5., 5.)), 0.0);
        let half = iou(&b(0., 0., 10., 10.), &b(5., 0., 10., 10.));
        assert!((half - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(raster_iou((0, 0, 10, 10), (5, 0, 10, 10)), 1.0 / 3.0);
    }

    #[test]
    fn degenerate_boxes_have_zero_iou() {
        let z = b(3., 3., 0., 0.);
        assert_eq!(iou(&z, &z), 0.0);
        assert_eq!(iou(&z, &b(0., 0., 10., 10.)), 0.0);
        assert_eq!(iou(&b(0., 0., 10., 0.), &b(0., 0., 10., 10.)), 0.0);
    }

    #[test]
    fn state_vector_examples() {
        assert_eq!(b(0., 0., 10., 20.).to_state_vector().unwrap(), [5., 10., 0.5, 20.]);
        assert_eq!(b(0., 0., 10., 10.).to_state_vector().unwrap(), [5., 5., 1., 10.]);
        assert_eq!(BBox::from_state_vector([5., 10., 0.5, 20.]).unwrap(), b(0., 0., 10., 20.));
        assert_eq!(BBox::from_state_vector([0., 0., 1., 2.]).unwrap(), b(-1., -1., 2., 2.));
    }

    #[test]
    fn state_vector_errors() {
        assert!(matches!(
            b(0., 0., 10., 0.).to_state_vector(),
            Err(Error::DegenerateBox { .. })
        ));
        assert!(matches!(
            BBox::from_state_vector([0., 0., 1., 0.]),
            Err(Error::DegenerateState { .. })
        ));
        assert!(matches!(
            BBox::from_state_vector([0., 0., -1., 3.]),
            Err(Error::DegenerateState { .. })
        ));
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-500.0..500.0f64, -500.0..500.0f64, 0.0..200.0f64, 0.0..200.0f64)
            .prop_map(|(l, t, w, h)| BBox::new(l, t, w, h))
    }

    proptest! {
        #[test]
        fn iou_matches_raster_on_integer_grid(
            a in (0..30i32, 0..30i32, 1..15i32, 1..15i32),
            c in (0..30i32, 0..30i32, 1..15i32, 1..15i32),
        ) {
            let fa = b(a.0 as f64, a.1 as f64, a.2 as f64, a.3 as f64);
            let fc = b(c.0 as f64, c.1 as f64, c.2 as f64, c.3 as f64);
            prop_assert!((iou(&fa, &fc) - raster_iou(a, c)).abs() < 1e-12);
        }

        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), c in arb_box()) {
            let v = iou(&a, &c);
            prop_assert_eq!(v, iou(&c, &a));
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn self_iou_is_one(a in arb_box()) {
            prop_assume!(a.area() > 1e-6);
            prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn iou_translation_and_scale_invariant(
            a in arb_box(), c in arb_box(),
            dx in -300.0..300.0f64, dy in -300.0..300.0f64, s in 0.1..10.0f64,
        ) {
            let base = iou(&a, &c);
            prop_assert!((iou(&a.translate(dx, dy), &c.translate(dx, dy)) - base).abs() < 1e-9);
            prop_assert!((iou(&a.scale(s), &c.scale(s)) - base).abs() < 1e-9);
        }

        #[test]
        fn state_vector_round_trip(a in arb_box()) {
            prop_assume!(a.height > 1e-3 && a.width > 1e-3);
            let back = BBox::from_state_vector(a.to_state_vector().unwrap()).unwrap();
            let scale = a.left.abs().max(a.top.abs()).max(a.width).max(a.height);
            for (x, y) in [(a.left, back.left), (a.top, back.top), (a.width, back.width), (a.height, back.height)] {
                prop_assert!((x - y).abs() <= 1e-9 * scale);
            }
        }
    }
}
