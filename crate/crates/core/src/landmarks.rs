//! 68-point facial landmarks (dlib / iBUG ordering), their JSON Lines
//! serialization, and the face regions derived from them.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::imaging::{resize_bilinear, to_grayscale, BBox, Image, Point, Polygon};
use crate::scalar::Scalar;

pub const NUM_POINTS: usize = 68;
pub const JAW: Range<usize> = 0..17;
pub const BROWS: Range<usize> = 17..27;
pub const NOSE: Range<usize> = 27..36;
pub const LEFT_EYE: Range<usize> = 36..42;
pub const RIGHT_EYE: Range<usize> = 42..48;
pub const MOUTH: Range<usize> = 48..68;
pub const NOSE_BRIDGE: usize = 28;
pub const NOSE_TIP: usize = 30;
pub const SUBNASALE: usize = 33;
pub const CHIN: usize = 8;

/// Frames whose landmark box has a larger side below this are discarded.
pub const MIN_FACE_SIZE: f64 = 64.0;
/// Relative margin added on each side of the landmark box before cropping.
pub const CROP_MARGIN: f64 = 0.10;

/// Exactly 68 finite landmark points.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet<T> {
    points: Vec<Point<T>>,
}

impl<T: Scalar> LandmarkSet<T> {
    pub fn new(points: Vec<Point<T>>) -> Result<Self> {
        if points.len() != NUM_POINTS {
            return Err(Error::LandmarkCount {
                frame: -1,
                found: points.len(),
            });
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::LandmarkFormat {
                frame: -1,
                message: format!("point {i} is not finite"),
            });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point<T> {
        self.points[i]
    }

    pub fn centroid(&self, range: Range<usize>) -> Point<T> {
        let n = T::from_count(range.len());
        let (sx, sy) = self.points[range]
            .iter()
            .fold((T::zero(), T::zero()), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / n, sy / n)
    }

    pub fn bbox(&self) -> BBox<T> {
        BBox::of(&self.points)
    }

    /// True when every point lies within `[0, width] x [0, height]`. Detectors may
    /// place points slightly outside the frame; such sets stay usable.
    pub fn within_frame(&self, width: usize, height: usize) -> bool {
        let (w, h) = (T::from_count(width), T::from_count(height));
        self.points
            .iter()
            .all(|p| p.x >= T::zero() && p.y >= T::zero() && p.x <= w && p.y <= h)
    }

    pub fn map(&self, f: impl Fn(Point<T>) -> Point<T>) -> Self {
        Self {
            points: self.points.iter().copied().map(f).collect(),
        }
    }

    pub fn translate(&self, dx: T, dy: T) -> Self {
        self.map(|p| Point::new(p.x + dx, p.y + dy))
    }
}

/// Landmarks of one frame of a video.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLandmarks<T> {
    pub frame: u32,
    pub landmarks: LandmarkSet<T>,
}

/// Reads a JSON Lines landmark file, one `{"frame": k, "points": [[x, y] x 68]}`
/// object per line, sorted by frame. Frames without a line are simply absent.
pub fn parse_landmarks<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<FrameLandmarks<T>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_landmarks_str(&text)
}

pub fn parse_landmarks_str<T: Scalar>(text: &str) -> Result<Vec<FrameLandmarks<T>>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let frame = value.get("frame").and_then(Value::as_u64).ok_or_else(|| Error::Parse {
            line: lineno + 1,
            message: "missing integer \"frame\"".into(),
        })?;
        let fr = frame as i64;
        let bad = |message: String| Error::LandmarkFormat { frame: fr, message };
        let pts = value
            .get("points")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"points\" array".into()))?;
        if pts.len() != NUM_POINTS {
            return Err(Error::LandmarkCount {
                frame: fr,
                found: pts.len(),
            });
        }
        let mut points = Vec::with_capacity(NUM_POINTS);
        for (i, p) in pts.iter().enumerate() {
            let xy = p
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| bad(format!("point {i} is not an [x, y] pair")))?;
            let coord = |v: &Value| {
                v.as_f64()
                    .filter(|f| f.is_finite())
                    .and_then(T::from_f64)
                    .ok_or_else(|| bad(format!("point {i} has a non-numeric coordinate")))
            };
            points.push(Point::new(coord(&xy[0])?, coord(&xy[1])?));
        }
        out.push(FrameLandmarks {
            frame: u32::try_from(frame).map_err(|_| bad("frame index out of range".into()))?,
            landmarks: LandmarkSet { points },
        });
    }
    out.sort_by_key(|f| f.frame);
    Ok(out)
}

/// Inverse of [`parse_landmarks_str`].
pub fn serialize_landmarks<T: Scalar>(frames: &[FrameLandmarks<T>]) -> String {
    let mut s = String::new();
    for f in frames {
        let pts: Vec<[T; 2]> = f.landmarks.points.iter().map(|p| [p.x, p.y]).collect();
        let _ = writeln!(
            s,
            "{{\"frame\":{},\"points\":{}}}",
            f.frame,
            serde_json::to_string(&pts).expect("finite floats serialize")
        );
    }
    s
}

pub fn write_landmarks<T: Scalar>(frames: &[FrameLandmarks<T>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serialize_landmarks(frames)).map_err(|e| Error::io(path, e))
}

/// Convex hull of the landmarks with its bounding box and area.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceRegion<T> {
    pub hull: Polygon<T>,
    pub bbox: BBox<T>,
    pub area: T,
}

fn cross<T: Scalar>(o: Point<T>, a: Point<T>, b: Point<T>) -> T {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain; collinear points are dropped.
pub fn convex_hull<T: Scalar>(points: &[Point<T>]) -> Vec<Point<T>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point<T>> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point<T>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero() {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

pub fn face_hull<T: Scalar>(lms: &LandmarkSet<T>) -> Result<FaceRegion<T>> {
    let hull = convex_hull(&lms.points);
    if hull.len() < 3 {
        return Err(Error::DegenerateFace);
    }
    let hull = Polygon::new(hull)?;
    let area = hull.area();
    if !(area > T::zero()) {
        return Err(Error::DegenerateFace);
    }
    Ok(FaceRegion {
        bbox: hull.bbox(),
        hull,
        area,
    })
}

/// Gray `size x size` crop of the landmark box grown by [`CROP_MARGIN`] on each side.
pub fn face_crop<T: Scalar>(img: &Image, lms: &LandmarkSet<T>, size: usize) -> Result<Image> {
    if size < 16 {
        return Err(Error::InvalidParameter(format!("crop size {size} < 16")));
    }
    let bb = lms.bbox();
    let (w, h) = (T::from_count(img.width()), T::from_count(img.height()));
    if bb.max_x <= T::zero() || bb.max_y <= T::zero() || bb.min_x >= w || bb.min_y >= h {
        return Err(Error::FaceOutsideFrame);
    }
    let side = bb.width().max(bb.height());
    if side < T::lit(MIN_FACE_SIZE) {
        return Err(Error::FaceTooSmall {
            side: side.to_f64_lossy(),
            min: MIN_FACE_SIZE,
        });
    }
    let mx = bb.width() * T::lit(CROP_MARGIN);
    let my = bb.height() * T::lit(CROP_MARGIN);
    let grown = BBox {
        min_x: bb.min_x - mx,
        min_y: bb.min_y - my,
        max_x: bb.max_x + mx,
        max_y: bb.max_y + my,
    };
    let (x0, x1, y0, y1) = grown.pixel_span(img.width(), img.height());
    if x1 <= x0 || y1 <= y0 {
        return Err(Error::FaceOutsideFrame);
    }
    let patch = img.crop(x0, y0, x1 - x0, y1 - y0)?;
    resize_bilinear(&to_grayscale(&patch), size, size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square_set() -> LandmarkSet<f64> {
        // corners plus points along the edges and inside of the unit square
        let mut pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        for i in 0..64 {
            let t = (i % 16) as f64 / 16.0;
            pts.push(match i / 16 {
                0 => Point::new(t, 0.0),
                1 => Point::new(1.0, t),
                2 => Point::new(t, 0.5),
                _ => Point::new(0.25 + t / 2.0, 0.75),
            });
        }
        LandmarkSet::new(pts).unwrap()
    }

    fn random_set(seed: &[f64]) -> LandmarkSet<f64> {
        LandmarkSet::new((0..68).map(|i| Point::new(seed[2 * i], seed[2 * i + 1])).collect()).unwrap()
    }

    /// O(n^3) hull: an ordered pair (i, j) is a hull edge when no point lies strictly
    /// to its right; the area is then the shoelace sum over those edges.
    fn brute_hull_area(pts: &[Point<f64>]) -> f64 {
        let mut twice = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                if i == j || a == b {
                    continue;
                }
                let mut is_edge = true;
                for c in pts {
                    let cr = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
                    let on_segment_beyond = cr == 0.0
                        && ((c.x - a.x) * (b.x - a.x) + (c.y - a.y) * (b.y - a.y) < 0.0
                            || (c.x - b.x) * (a.x - b.x) + (c.y - b.y) * (a.y - b.y) < 0.0);
                    if cr < 0.0 || on_segment_beyond {
                        is_edge = false;
                        break;
                    }
                }
                if is_edge {
                    twice += a.x * b.y - b.x * a.y;
                }
            }
        }
        twice / 2.0
    }

    #[test]
    fn parse_and_errors() {
        let set = square_set();
        let frames = vec![FrameLandmarks {
            frame: 3,
            landmarks: set.clone(),
        }];
        let text = serialize_landmarks(&frames);
        assert_eq!(parse_landmarks_str::<f64>(&text).unwrap(), frames);

        let short: Vec<[f64; 2]> = (0..67).map(|i| [i as f64, 0.0]).collect();
        let line = format!("{{\"frame\":5,\"points\":{}}}", serde_json::to_string(&short).unwrap());
        let err = parse_landmarks_str::<f64>(&line).unwrap_err();
        assert_eq!(err.to_string(), "frame 5: expected 68 points, found 67");

        let bad = text.replacen("[0.0,0.0]", "[\"a\",0.0]", 1);
        let err = parse_landmarks_str::<f64>(&bad).unwrap_err();
        assert!(matches!(err, Error::LandmarkFormat { frame: 3, .. }), "{err}");

        assert!(parse_landmarks_str::<f64>("").unwrap().is_empty());
    }

    #[test]
    fn frames_are_sorted_and_gaps_absent() {
        let set = square_set();
        let frames = vec![
            FrameLandmarks {
                frame: 4,
                landmarks: set.clone(),
            },
            FrameLandmarks {
                frame: 1,
                landmarks: set.clone(),
            },
        ];
        let parsed = parse_landmarks_str::<f64>(&serialize_landmarks(&frames)).unwrap();
        assert_eq!(parsed.iter().map(|f| f.frame).collect::<Vec<_>>(), vec![1, 4]);
    }

    #[test]
    fn unit_square_hull() {
        let region = face_hull(&square_set()).unwrap();
        assert!((region.area - 1.0).abs() < 1e-12);
        assert_eq!(region.hull.len(), 4);
    }

    #[test]
    fn collinear_is_degenerate() {
        let set = LandmarkSet::new((0..68).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect()).unwrap();
        assert!(matches!(face_hull(&set), Err(Error::DegenerateFace)));
    }

    #[test]
    fn crop_shape_and_small_faces() {
        let img = Image::filled(200, 150, 3, 90).unwrap();
        let big = square_set().map(|p| Point::new(20.0 + p.x * 100.0, 10.0 + p.y * 100.0));
        let crop = face_crop(&img, &big, 64).unwrap();
        assert_eq!((crop.width(), crop.height(), crop.channels()), (64, 64, 1));
        let small = square_set().map(|p| Point::new(20.0 + p.x * 40.0, 10.0 + p.y * 40.0));
        assert!(matches!(face_crop(&img, &small, 64), Err(Error::FaceTooSmall { .. })));
        let outside = big.translate(500.0, 0.0);
        assert!(matches!(face_crop(&img, &outside, 64), Err(Error::FaceOutsideFrame)));
    }

    #[test]
    fn full_frame_crop_is_resized_frame() {
        let data: Vec<u8> = (0..128 * 128).map(|i| ((i % 128) * 2) as u8).collect();
        let img = Image::gray(128, 128, data).unwrap();
        let whole = square_set().map(|p| Point::new(p.x * 128.0, p.y * 128.0));
        let crop = face_crop(&img, &whole, 64).unwrap();
        assert_eq!(crop, resize_bilinear(&img, 64, 64).unwrap());
    }

    proptest! {
        #[test]
        fn hull_area_matches_brute_force(seed in proptest::collection::vec(0.0f64..100.0, 136)) {
            let set = random_set(&seed);
            let region = face_hull(&set).unwrap();
            let oracle = brute_hull_area(set.points());
            prop_assert!((region.area - oracle).abs() <= 1e-9 * oracle);
        }

        #[test]
        fn hull_area_translation_and_scaling(
            seed in proptest::collection::vec(0.0f64..100.0, 136),
            dx in -50.0f64..50.0, dy in -50.0f64..50.0, s in 0.2f64..5.0, sy in 0.2f64..5.0,
        ) {
            let set = random_set(&seed);
            let a = face_hull(&set).unwrap().area;
            let moved = face_hull(&set.translate(dx, dy)).unwrap().area;
            prop_assert!((moved - a).abs() <= 1e-9 * a);
            let scaled = face_hull(&set.map(|p| Point::new(p.x * s, p.y * s))).unwrap().area;
            prop_assert!((scaled - a * s * s).abs() <= 1e-9 * a * s * s);
            let stretched = face_hull(&set.map(|p| Point::new(p.x * s, p.y * sy))).unwrap().area;
            prop_assert!((stretched - a * s * sy).abs() <= 1e-9 * a * s * sy);
        }

        #[test]
        fn landmark_serialization_round_trips(seed in proptest::collection::vec(-1e4f64..1e4, 136), frame in 0u32..10_000) {
            let frames = vec![FrameLandmarks { frame, landmarks: random_set(&seed) }];
            prop_assert_eq!(parse_landmarks_str::<f64>(&serialize_landmarks(&frames)).unwrap(), frames);
        }
    }
}
