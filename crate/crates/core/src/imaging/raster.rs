use super::{resize_bilinear, Image, Polygon, Rgb};
use crate::error::{Error, Result};
use crate::scalar::{to_u8, Scalar};

/// Vertical shading applied by [`blit_textured`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shading {
    Off,
    /// Texels are scaled by a factor falling linearly from 1.0 on the top row of the
    /// polygon's bounding box to 0.6 on its bottom row.
    Vertical,
}

const SHADE_BOTTOM: f64 = 0.6;

/// Blends `color` into every pixel whose center lies inside `poly` (even-odd):
/// `round(alpha * color + (1 - alpha) * old)`. Gray images receive the color's luma.
pub fn fill_polygon<T: Scalar>(img: &Image, poly: &Polygon<T>, color: Rgb, alpha: T) -> Result<Image> {
    if poly.len() < 3 {
        return Err(Error::DegeneratePolygon(poly.len()));
    }
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(Error::InvalidAlpha(alpha.to_f64_lossy()));
    }
    let mut out = img.clone();
    let gray = [color.luma()];
    let src: &[u8] = if img.is_gray() { &gray } else { &color.0 };
    let keep = T::one() - alpha;
    poly.for_each_inside(img.width(), img.height(), |x, y| {
        for (dst, &c) in out.pixel_mut(x, y).iter_mut().zip(src) {
            *dst = to_u8(alpha * T::from_byte(c) + keep * T::from_byte(*dst));
        }
    });
    Ok(out)
}

/// Pastes `texture` (RGB), bilinearly scaled to the polygon's pixel bounding box,
/// onto the pixels inside `poly`.
pub fn blit_textured<T: Scalar>(img: &Image, poly: &Polygon<T>, texture: &Image, shading: Shading) -> Result<Image> {
    if poly.len() < 3 {
        return Err(Error::DegeneratePolygon(poly.len()));
    }
    if texture.channels() != 3 {
        return Err(Error::InvalidImage("texture must be RGB".into()));
    }
    let bb = poly.bbox();
    let bx0 = bb.min_x.floor();
    let by0 = bb.min_y.floor();
    let bw = (bb.max_x.ceil() - bx0).max(T::one()).to_usize().unwrap_or(1);
    let bh = (bb.max_y.ceil() - by0).max(T::one()).to_usize().unwrap_or(1);
    let scaled = resize_bilinear(texture, bw, bh)?;
    let gray_tex = img.is_gray().then(|| super::to_grayscale(&scaled));
    let shade_span = T::one() - T::lit(SHADE_BOTTOM);
    let mut out = img.clone();
    poly.for_each_inside(img.width(), img.height(), |x, y| {
        let tx = (T::from_count(x) - bx0).to_usize().unwrap_or(0).min(bw - 1);
        let ty = (T::from_count(y) - by0).to_usize().unwrap_or(0).min(bh - 1);
        let factor = match shading {
            Shading::Off => T::one(),
            Shading::Vertical if bh > 1 => T::one() - shade_span * T::from_count(ty) / T::from_count(bh - 1),
            Shading::Vertical => T::one(),
        };
        let texel = match &gray_tex {
            Some(g) => g.pixel(tx, ty),
            None => scaled.pixel(tx, ty),
        };
        for (dst, &c) in out.pixel_mut(x, y).iter_mut().zip(texel) {
            *dst = to_u8(T::from_byte(c) * factor);
        }
    });
    Ok(out)
}
