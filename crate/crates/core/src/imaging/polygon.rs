use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle `[min_x, max_x] x [min_y, max_y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox<T> {
    pub min_x: T,
    pub min_y: T,
    pub max_x: T,
    pub max_y: T,
}

impl<T: Scalar> BBox<T> {
    pub fn of(points: &[Point<T>]) -> Self {
        let mut b = BBox {
            min_x: T::infinity(),
            min_y: T::infinity(),
            max_x: T::neg_infinity(),
            max_y: T::neg_infinity(),
        };
        for p in points {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        b
    }

    pub fn width(&self) -> T {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> T {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> Point<T> {
        let half = T::lit(0.5);
        Point::new((self.min_x + self.max_x) * half, (self.min_y + self.max_y) * half)
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    /// Pixel index range `[x0, x1) x [y0, y1)` of pixels whose centers may fall inside,
    /// clipped to a `width x height` raster.
    pub fn pixel_span(&self, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let clip = |v: T, hi: usize| -> usize {
            let v = v.to_f64_lossy();
            if v.is_nan() || v <= 0.0 {
                0
            } else if v >= hi as f64 {
                hi
            } else {
                v as usize
            }
        };
        let x0 = clip(self.min_x.floor(), width);
        let y0 = clip(self.min_y.floor(), height);
        let x1 = clip(self.max_x.ceil(), width);
        let y1 = clip(self.max_y.ceil(), height);
        (x0, x1, y0, y1)
    }
}

/// Closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon<T> {
    vertices: Vec<Point<T>>,
}

impl<T: Scalar> Polygon<T> {
    pub fn new(vertices: Vec<Point<T>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon(vertices.len()));
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle as a 4-vertex polygon.
    pub fn rect(x0: T, y0: T, x1: T, y1: T) -> Self {
        Self {
            vertices: vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
        }
    }

    /// `n`-gon sampled on an axis-aligned ellipse, starting at angle 0.
    pub fn ellipse(center: Point<T>, semi_x: T, semi_y: T, n: usize) -> Result<Self> {
        let n_t = T::from_count(n);
        let tau = T::lit(std::f64::consts::TAU);
        let vertices = (0..n)
            .map(|i| {
                let t = tau * T::from_count(i) / n_t;
                Point::new(center.x + semi_x * t.cos(), center.y + semi_y * t.sin())
            })
            .collect();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn bbox(&self) -> BBox<T> {
        BBox::of(&self.vertices)
    }

    /// Shoelace area (absolute value).
    pub fn area(&self) -> T {
        let n = self.vertices.len();
        let mut twice = T::zero();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            twice += a.x * b.y - b.x * a.y;
        }
        (twice * T::lit(0.5)).abs()
    }

    /// X coordinates where the horizontal line `y = yc` crosses an edge, with the
    /// half-open vertex rule `(yi > yc) != (yj > yc)`. Unsorted.
    fn crossings(&self, yc: T, out: &mut Vec<T>) {
        out.clear();
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let (pi, pj) = (self.vertices[i], self.vertices[j]);
            if (pi.y > yc) != (pj.y > yc) {
                out.push((pj.x - pi.x) * (yc - pi.y) / (pj.y - pi.y) + pi.x);
            }
            j = i;
        }
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Point<T>) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (pi, pj) = (self.vertices[i], self.vertices[j]);
            if (pi.y > p.y) != (pj.y > p.y) && p.x < (pj.x - pi.x) * (p.y - pi.y) / (pj.y - pi.y) + pi.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// Calls `f(x, y)` for every pixel of a `width x height` raster whose center lies
    /// inside the polygon (even-odd). Agrees exactly with [`Polygon::contains`] at
    /// `(x + 0.5, y + 0.5)`.
    pub fn for_each_inside(&self, width: usize, height: usize, mut f: impl FnMut(usize, usize)) {
        let (x0, x1, y0, y1) = self.bbox().pixel_span(width, height);
        let half = T::lit(0.5);
        let mut xs = Vec::with_capacity(8);
        for y in y0..y1 {
            let yc = T::from_count(y) + half;
            self.crossings(yc, &mut xs);
            if xs.is_empty() {
                continue;
            }
            xs.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));
            for x in x0..x1 {
                let xc = T::from_count(x) + half;
                let right = xs.len() - xs.partition_point(|&v| v <= xc);
                if right % 2 == 1 {
                    f(x, y);
                }
            }
        }
    }

    /// Boolean raster of pixel centers inside the polygon.
    pub fn mask(&self, width: usize, height: usize) -> Vec<bool> {
        let mut m = vec![false; width * height];
        self.for_each_inside(width, height, |x, y| m[y * width + x] = true);
        m
    }

    pub fn map(&self, f: impl Fn(Point<T>) -> Point<T>) -> Self {
        Self {
            vertices: self.vertices.iter().copied().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn too_few_vertices_is_degenerate() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        assert!(matches!(Polygon::new(pts), Err(Error::DegeneratePolygon(2))));
    }

    #[test]
    fn unit_square_area() {
        assert_eq!(Polygon::rect(0.0, 0.0, 1.0, 1.0).area(), 1.0);
        assert_eq!(Polygon::rect(2.0f32, 1.0, 5.0, 3.0).area(), 6.0);
    }

    #[test]
    fn rect_rasterizes_pixel_centers() {
        // centers 0.5..3.5 inside [0.2, 3.7] in x, and 0.5, 1.5 inside [0.0, 2.0] in y
        let r = Polygon::rect(0.2, 0.0, 3.7, 2.0);
        let mut hits = vec![];
        r.for_each_inside(10, 10, |x, y| hits.push((x, y)));
        let expected: Vec<_> = (0..2).flat_map(|y| (0..4).map(move |x| (x, y))).collect();
        assert_eq!(hits, expected);
    }

    proptest! {
        #[test]
        fn scanline_matches_point_test(
            pts in proptest::collection::vec((-3.0f64..15.0, -3.0f64..15.0), 3..9)
        ) {
            let poly = Polygon::new(pts.into_iter().map(|(x, y)| Point::new(x, y)).collect()).unwrap();
            let m = poly.mask(12, 12);
            for y in 0..12 {
                for x in 0..12 {
                    let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                    prop_assert_eq!(m[y * 12 + x], poly.contains(c));
                }
            }
        }
    }
}
