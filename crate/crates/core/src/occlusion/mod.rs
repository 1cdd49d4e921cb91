//! Landmark-anchored occlusion attacks: flat 2-D masks at three nose
//! coverages, a round respirator-style mask, textured masks with a shading
//! cue, and glasses; plus the facial coverage measure used to calibrate them.

mod assets;

pub use assets::{AssetPack, GlassesStyle, LensShape, MIN_GLASSES, MIN_TEXTURES};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::{blit_textured, fill_polygon, Image, Point, Polygon, Rgb, Shading};
use crate::landmarks::{self, face_hull, FaceRegion, LandmarkSet};
use crate::scalar::Scalar;

/// Downward offset of the low-coverage mask edge below the subnasale, as a
/// fraction of the landmark box height.
pub const LOW_MASK_OFFSET: f64 = 0.04;
pub const DEFAULT_MASK_COLOR: Rgb = Rgb([80, 80, 80]);
const ROUND_MASK_VERTICES: usize = 64;
const LENS_VERTICES: usize = 24;
/// Lens height relative to its width when the eye box is flatter than that.
const LENS_MIN_ASPECT: f64 = 0.65;
/// Frame bar thickness relative to the face width.
const BAR_THICKNESS: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OcclusionKind {
    Low2D,
    Medium2D,
    High2D,
    Round2D,
    Mask3D(String),
    Glasses(String),
}

impl fmt::Display for OcclusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OcclusionKind::Low2D => f.write_str("low"),
            OcclusionKind::Medium2D => f.write_str("medium"),
            OcclusionKind::High2D => f.write_str("high"),
            OcclusionKind::Round2D => f.write_str("round"),
            OcclusionKind::Mask3D(id) => write!(f, "mask3d:{id}"),
            OcclusionKind::Glasses(id) => write!(f, "glasses:{id}"),
        }
    }
}

impl FromStr for OcclusionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidOcclusion(s.to_string());
        Ok(match s.split_once(':') {
            None => match s {
                "low" => OcclusionKind::Low2D,
                "medium" => OcclusionKind::Medium2D,
                "high" => OcclusionKind::High2D,
                "round" => OcclusionKind::Round2D,
                _ => return Err(bad()),
            },
            Some(("mask3d", id)) if !id.is_empty() => OcclusionKind::Mask3D(id.to_string()),
            Some(("glasses", id)) if !id.is_empty() => OcclusionKind::Glasses(id.to_string()),
            _ => return Err(bad()),
        })
    }
}

/// One concrete attack.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionSpec<T> {
    pub kind: OcclusionKind,
    /// Fill color of the flat 2-D masks.
    pub color: Rgb,
    /// Opacity of the flat masks; glasses take their lens opacity from the style.
    pub alpha: T,
}

impl<T: Scalar> OcclusionSpec<T> {
    pub fn new(kind: OcclusionKind) -> Self {
        Self {
            kind,
            color: DEFAULT_MASK_COLOR,
            alpha: T::one(),
        }
    }

    /// Checks that referenced assets exist in `assets`.
    pub fn validate(&self, assets: &AssetPack<T>) -> Result<()> {
        match &self.kind {
            OcclusionKind::Mask3D(id) => assets.texture(id).map(|_| ()),
            OcclusionKind::Glasses(id) => assets.glasses(id).map(|_| ()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    Low,
    Medium,
    High,
}

/// X where the line `y = level` first crosses the jaw contour walking from the chin
/// toward jaw point `end`; the end point's x if the line passes above the contour.
fn jaw_crossing<T: Scalar>(lms: &LandmarkSet<T>, level: T, end: usize) -> T {
    let chin = landmarks::CHIN;
    let path: Vec<usize> = if end < chin {
        (end..=chin).rev().collect()
    } else {
        (chin..=end).collect()
    };
    for w in path.windows(2) {
        let (a, b) = (lms.point(w[0]), lms.point(w[1]));
        if (a.y - level) * (b.y - level) <= T::zero() && a.y != b.y {
            let t = (level - a.y) / (b.y - a.y);
            return a.x + t * (b.x - a.x);
        }
    }
    lms.point(end).x
}

/// Flat mask polygon: jaw points 2..=14 closed by a horizontal upper edge through the
/// subnasale (pushed down by [`LOW_MASK_OFFSET`]), the nose tip, or the nose bridge.
pub fn mask_polygon<T: Scalar>(lms: &LandmarkSet<T>, coverage: Coverage) -> Result<Polygon<T>> {
    let face = face_hull(lms)?;
    let level = match coverage {
        Coverage::Low => lms.point(landmarks::SUBNASALE).y + T::lit(LOW_MASK_OFFSET) * face.bbox.height(),
        Coverage::Medium => lms.point(landmarks::NOSE_TIP).y,
        Coverage::High => lms.point(landmarks::NOSE_BRIDGE).y,
    };
    let mut vertices: Vec<Point<T>> = lms.points()[2..=14].to_vec();
    vertices.push(Point::new(jaw_crossing(lms, level, 16), level));
    vertices.push(Point::new(jaw_crossing(lms, level, 0), level));
    Polygon::new(vertices)
}

/// 64-gon ellipse centered on the mouth, half as wide as jaw points 4..12 apart and
/// 1.1 times as tall as the subnasale-to-chin distance.
pub fn round_mask_ellipse<T: Scalar>(lms: &LandmarkSet<T>) -> Result<Polygon<T>> {
    face_hull(lms)?;
    let center = lms.centroid(landmarks::MOUTH);
    let semi_x = T::lit(0.5) * lms.point(4).distance(lms.point(12));
    let semi_y = T::lit(1.1) * lms.point(landmarks::SUBNASALE).distance(lms.point(landmarks::CHIN)) / T::lit(2.0);
    Polygon::ellipse(center, semi_x, semi_y, ROUND_MASK_VERTICES)
}

/// One blended piece of a pair of glasses.
#[derive(Debug, Clone, PartialEq)]
pub struct GlassesPart<T> {
    pub polygon: Polygon<T>,
    pub alpha: T,
    pub color: Rgb,
}

fn bar<T: Scalar>(a: Point<T>, b: Point<T>, thickness: T) -> Option<Polygon<T>> {
    let len = a.distance(b);
    if !(len > T::zero()) {
        return None;
    }
    let h = thickness * T::lit(0.5);
    let (nx, ny) = (-(b.y - a.y) / len * h, (b.x - a.x) / len * h);
    Polygon::new(vec![
        Point::new(a.x + nx, a.y + ny),
        Point::new(b.x + nx, b.y + ny),
        Point::new(b.x - nx, b.y - ny),
        Point::new(a.x - nx, a.y - ny),
    ])
    .ok()
}

/// Two lenses over the eye boxes (grown by the style's scale), a bridge and two
/// temples reaching jaw points 0 and 16. Lenses use the style's opacity; the frame
/// is opaque.
pub fn glasses_geometry<T: Scalar>(lms: &LandmarkSet<T>, style: &GlassesStyle<T>) -> Result<Vec<GlassesPart<T>>> {
    let face = face_hull(lms)?;
    let thickness = (face.bbox.width() * T::lit(BAR_THICKNESS)).max(T::one());
    let half = T::lit(0.5);
    let mut lenses = Vec::with_capacity(2);
    for eye in [landmarks::LEFT_EYE, landmarks::RIGHT_EYE] {
        let bb = crate::imaging::BBox::of(&lms.points()[eye]);
        let c = bb.center();
        let hw = style.scale * bb.width() * half;
        let hh = (style.scale * bb.height()).max(T::lit(LENS_MIN_ASPECT) * style.scale * bb.width()) * half;
        let lens = match style.shape {
            LensShape::Rect => Polygon::rect(c.x - hw, c.y - hh, c.x + hw, c.y + hh),
            LensShape::Ellipse => {
                let k = T::lit(std::f64::consts::SQRT_2);
                Polygon::ellipse(c, hw * k, hh * k, LENS_VERTICES)?
            }
        };
        lenses.push((lens, c));
    }
    let frame = style.rgb();
    let mut parts: Vec<GlassesPart<T>> = lenses
        .iter()
        .map(|(p, _)| GlassesPart {
            polygon: p.clone(),
            alpha: style.alpha,
            color: frame,
        })
        .collect();
    let (left, right) = (&lenses[0], &lenses[1]);
    let inner_l = left.0.bbox().max_x;
    let inner_r = right.0.bbox().min_x;
    let mid_y = (left.1.y + right.1.y) * half;
    let mut bars = Vec::new();
    if inner_r > inner_l {
        bars.extend(bar(Point::new(inner_l, mid_y), Point::new(inner_r, mid_y), thickness));
    }
    bars.extend(bar(Point::new(left.0.bbox().min_x, left.1.y), lms.point(0), thickness));
    bars.extend(bar(
        Point::new(right.0.bbox().max_x, right.1.y),
        lms.point(16),
        thickness,
    ));
    parts.extend(bars.into_iter().map(|polygon| GlassesPart {
        polygon,
        alpha: T::one(),
        color: frame,
    }));
    Ok(parts)
}

/// Polygons (with opacity) that [`apply_occlusion`] paints for `spec`.
pub fn occlusion_geometry<T: Scalar>(
    lms: &LandmarkSet<T>,
    spec: &OcclusionSpec<T>,
    assets: &AssetPack<T>,
) -> Result<Vec<GlassesPart<T>>> {
    let solid = |polygon| {
        vec![GlassesPart {
            polygon,
            alpha: spec.alpha,
            color: spec.color,
        }]
    };
    Ok(match &spec.kind {
        OcclusionKind::Low2D => solid(mask_polygon(lms, Coverage::Low)?),
        OcclusionKind::Medium2D => solid(mask_polygon(lms, Coverage::Medium)?),
        OcclusionKind::High2D => solid(mask_polygon(lms, Coverage::High)?),
        OcclusionKind::Round2D => solid(round_mask_ellipse(lms)?),
        OcclusionKind::Mask3D(id) => {
            assets.texture(id)?;
            solid(mask_polygon(lms, Coverage::Medium)?)
        }
        OcclusionKind::Glasses(id) => glasses_geometry(lms, assets.glasses(id)?)?,
    })
}

/// Paints the attack described by `spec` onto `img`. Pixels outside the occlusion
/// geometry are left bit-identical.
pub fn apply_occlusion<T: Scalar>(
    img: &Image,
    lms: &LandmarkSet<T>,
    spec: &OcclusionSpec<T>,
    assets: &AssetPack<T>,
) -> Result<Image> {
    let parts = occlusion_geometry(lms, spec, assets)?;
    match &spec.kind {
        OcclusionKind::Mask3D(id) => blit_textured(img, &parts[0].polygon, assets.texture(id)?, Shading::Vertical),
        _ => parts
            .iter()
            .try_fold(img.clone(), |acc, p| fill_polygon(&acc, &p.polygon, p.color, p.alpha)),
    }
}

/// Outcome of [`apply_occlusion_or_fallback`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Occluded,
    /// No landmarks were available; the frame is passed through unmodified.
    UnoccludedFallback,
}

pub fn apply_occlusion_or_fallback<T: Scalar>(
    img: &Image,
    lms: Option<&LandmarkSet<T>>,
    spec: &OcclusionSpec<T>,
    assets: &AssetPack<T>,
) -> Result<(Image, Applied)> {
    match lms {
        Some(l) => Ok((apply_occlusion(img, l, spec, assets)?, Applied::Occluded)),
        None => Ok((img.clone(), Applied::UnoccludedFallback)),
    }
}

/// Fraction of face-hull pixels (by pixel center) that also fall inside `poly`.
pub fn coverage_fraction<T: Scalar>(poly: &Polygon<T>, face: &FaceRegion<T>, dims: (usize, usize)) -> Result<T> {
    let (w, h) = dims;
    let hull = face.hull.mask(w, h);
    let total = hull.iter().filter(|&&b| b).count();
    if total == 0 {
        return Err(Error::ZeroAreaHull);
    }
    let mut both = 0usize;
    poly.for_each_inside(w, h, |x, y| {
        if hull[y * w + x] {
            both += 1;
        }
    });
    Ok(T::from_count(both) / T::from_count(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdata::reference_landmarks;

    fn assets() -> AssetPack<f64> {
        AssetPack::builtin()
    }

    #[test]
    fn occlusion_names_round_trip() {
        for s in [
            "low",
            "medium",
            "high",
            "round",
            "mask3d:noise-4",
            "glasses:rect-s-opaque",
        ] {
            assert_eq!(s.parse::<OcclusionKind>().unwrap().to_string(), s);
        }
        assert!("mask3d".parse::<OcclusionKind>().is_err());
        assert!("square".parse::<OcclusionKind>().is_err());
    }

    #[test]
    fn mask_polygon_vertex_set() {
        let lms = reference_landmarks::<f64>();
        for cov in [Coverage::Low, Coverage::Medium, Coverage::High] {
            let poly = mask_polygon(&lms, cov).unwrap();
            assert_eq!(poly.len(), 15);
            assert_eq!(&poly.vertices()[..13], &lms.points()[2..=14]);
            let top = poly.vertices()[13].y;
            assert_eq!(poly.vertices()[14].y, top);
        }
    }

    #[test]
    fn low_mask_leaves_subnasale_visible() {
        let lms = reference_landmarks::<f64>();
        let poly = mask_polygon(&lms, Coverage::Low).unwrap();
        assert!(lms.point(landmarks::SUBNASALE).y < poly.vertices()[13].y);
        assert!(!poly.contains(lms.point(landmarks::SUBNASALE)));
    }

    #[test]
    fn high_mask_covers_the_nose() {
        let lms = reference_landmarks::<f64>();
        let poly = mask_polygon(&lms, Coverage::High).unwrap();
        let top = poly.vertices()[13].y;
        for i in landmarks::NOSE {
            let p = lms.point(i);
            assert!(p.y <= top || poly.contains(p), "nose point {i}");
        }
        for i in 29..36 {
            assert!(poly.contains(lms.point(i)), "nose point {i} not covered");
        }
    }

    #[test]
    fn round_mask_center_and_scaling() {
        let lms = reference_landmarks::<f64>();
        let poly = round_mask_ellipse(&lms).unwrap();
        let (sx, sy) = lms.points()[48..68]
            .iter()
            .fold((0.0, 0.0), |a, p| (a.0 + p.x, a.1 + p.y));
        let c = poly.bbox().center();
        assert!((c.x - sx / 20.0).abs() < 1e-9 && (c.y - sy / 20.0).abs() < 1e-6);
        assert_eq!(poly.len(), 64);
        let doubled = round_mask_ellipse(&lms.map(|p| Point::new(2.0 * p.x, 2.0 * p.y))).unwrap();
        assert!((doubled.bbox().width() - 2.0 * poly.bbox().width()).abs() < 1e-9);
        assert!((doubled.bbox().height() - 2.0 * poly.bbox().height()).abs() < 1e-9);
    }

    #[test]
    fn opaque_glasses_cover_every_eye_point() {
        let lms = reference_landmarks::<f64>();
        let pack = assets();
        for id in pack.glasses_ids() {
            let style = pack.glasses(id).unwrap();
            let parts = glasses_geometry(&lms, style).unwrap();
            assert_eq!(parts.len(), 5, "{id}");
            for i in 36..48 {
                assert!(
                    parts[..2].iter().any(|p| p.polygon.contains(lms.point(i))),
                    "{id} misses eye point {i}"
                );
            }
            assert_eq!(parts[0].alpha, style.alpha);
            assert!(parts[2..].iter().all(|p| p.alpha == 1.0));
        }
    }

    #[test]
    fn translucent_lens_blends() {
        let lms = reference_landmarks::<f64>();
        let style = GlassesStyle {
            id: "t".into(),
            shape: LensShape::Rect,
            scale: 1.2,
            alpha: 0.5,
            color: [0, 0, 0],
        };
        let parts = glasses_geometry(&lms, &style).unwrap();
        let img = Image::filled(320, 240, 1, 200).unwrap();
        let out = fill_polygon(&img, &parts[0].polygon, parts[0].color, parts[0].alpha).unwrap();
        let eye = lms.centroid(landmarks::LEFT_EYE);
        assert_eq!(out.at(eye.x as usize, eye.y as usize), 100);
    }

    #[test]
    fn unknown_assets_error() {
        let lms = reference_landmarks::<f64>();
        let img = Image::filled(320, 240, 3, 0).unwrap();
        let spec = OcclusionSpec::new(OcclusionKind::Glasses("missing".into()));
        assert!(matches!(
            apply_occlusion(&img, &lms, &spec, &assets()),
            Err(Error::UnknownStyle(_))
        ));
        let spec = OcclusionSpec::new(OcclusionKind::Mask3D("missing".into()));
        assert!(matches!(
            apply_occlusion(&img, &lms, &spec, &assets()),
            Err(Error::UnknownTexture(_))
        ));
    }

    #[test]
    fn low_mask_paints_below_nose_only() {
        let lms = reference_landmarks::<f64>();
        let img = Image::filled(320, 240, 3, 200).unwrap();
        let out = apply_occlusion(&img, &lms, &OcclusionSpec::new(OcclusionKind::Low2D), &assets()).unwrap();
        let mouth = lms.centroid(landmarks::MOUTH);
        assert_eq!(out.pixel(mouth.x as usize, mouth.y as usize), &[80, 80, 80]);
        let brow = lms.centroid(landmarks::BROWS);
        assert_eq!(out.pixel(brow.x as usize, brow.y as usize), &[200, 200, 200]);
    }

    #[test]
    fn mask3d_with_white_texture_is_shaded_fill() {
        let lms = reference_landmarks::<f64>();
        let mut pack_tex: Vec<(String, Image)> = (0..9)
            .map(|i| (format!("t{i}"), Image::filled(8, 8, 3, 255).unwrap()))
            .collect();
        pack_tex[0].0 = "white".into();
        let pack = AssetPack::new(
            pack_tex,
            assets()
                .glasses_ids()
                .map(|id| assets().glasses(id).unwrap().clone())
                .collect(),
        )
        .unwrap();
        let img = Image::filled(320, 240, 3, 10).unwrap();
        let spec = OcclusionSpec::new(OcclusionKind::Mask3D("white".into()));
        let out = apply_occlusion(&img, &lms, &spec, &pack).unwrap();
        let poly = mask_polygon(&lms, Coverage::Medium).unwrap();
        let expected = blit_textured(&img, &poly, pack.texture("white").unwrap(), Shading::Vertical).unwrap();
        assert_eq!(out, expected);
        let unshaded = fill_polygon(&img, &poly, Rgb::WHITE, 1.0).unwrap();
        assert_ne!(out, unshaded);
    }

    #[test]
    fn fallback_passes_frame_through() {
        let img = Image::filled(8, 8, 3, 33).unwrap();
        let (out, how) =
            apply_occlusion_or_fallback::<f64>(&img, None, &OcclusionSpec::new(OcclusionKind::High2D), &assets())
                .unwrap();
        assert_eq!(out, img);
        assert_eq!(how, Applied::UnoccludedFallback);
    }

    #[test]
    fn coverage_extremes() {
        let lms = reference_landmarks::<f64>();
        let face = face_hull(&lms).unwrap();
        assert_eq!(coverage_fraction(&face.hull, &face, (320, 240)).unwrap(), 1.0);
        let far = Polygon::rect(0.0, 0.0, 5.0, 5.0);
        assert_eq!(coverage_fraction(&far, &face, (320, 240)).unwrap(), 0.0);
        let low = mask_polygon(&lms, Coverage::Low).unwrap();
        let c = coverage_fraction(&low, &face, (320, 240)).unwrap();
        assert!((0.25..=0.35).contains(&c), "low coverage {c}");
        let tiny = face_hull(&lms.map(|p| Point::new(p.x * 1e-3, p.y * 1e-3))).unwrap();
        assert!(matches!(
            coverage_fraction(&low, &tiny, (320, 240)),
            Err(Error::ZeroAreaHull)
        ));
    }
}
