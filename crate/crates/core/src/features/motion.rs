use crate::error::{Error, Result};
use crate::imaging::{BBox, Image};
use crate::scalar::Scalar;

use super::{Extractor, FeatureVector};

pub const MOTION_DIM: usize = 5;
/// Frames per motion window; a video yields one vector per window start.
pub const MOTION_WINDOW: usize = 5;
const EPS: f64 = 1e-6;

/// Mean absolute frame difference inside `face` (Df) and outside it (Db), one
/// pair per consecutive frame transition.
pub fn motion_signal<T: Scalar>(frames: &[Image], face: &BBox<T>) -> Result<Vec<(T, T)>> {
    if frames.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            found: frames.len(),
        });
    }
    let (w, h) = frames[0].dims();
    let ch = frames[0].channels();
    for f in &frames[1..] {
        if f.dims() != (w, h) || f.channels() != ch {
            return Err(Error::DimensionMismatch {
                expected: format!("{w}x{h}x{ch}"),
                found: format!("{}x{}x{}", f.width(), f.height(), f.channels()),
            });
        }
    }
    let (x0, x1, y0, y1) = face.pixel_span(w, h);
    let n_face = (x1 - x0) * (y1 - y0) * ch;
    let n_total = w * h * ch;
    if n_face == 0 {
        return Err(Error::FaceOutsideFrame);
    }
    if n_face == n_total {
        return Err(Error::NoBackground);
    }
    let n_back = n_total - n_face;
    Ok(frames
        .windows(2)
        .map(|pair| {
            let (a, b) = (pair[0].data(), pair[1].data());
            let (mut sf, mut sb) = (0u64, 0u64);
            for y in 0..h {
                let inside_row = y >= y0 && y < y1;
                for x in 0..w {
                    let inside = inside_row && x >= x0 && x < x1;
                    for c in 0..ch {
                        let i = (y * w + x) * ch + c;
                        let d = u64::from(a[i].abs_diff(b[i]));
                        if inside {
                            sf += d;
                        } else {
                            sb += d;
                        }
                    }
                }
            }
            (
                T::lit(sf as f64) / T::from_count(n_face),
                T::lit(sb as f64) / T::from_count(n_back),
            )
        })
        .collect())
}

/// `[mean R, std R, mean Df, mean Db, mean Df / (mean Db + eps)]` with
/// `R = Df / (Df + Db + eps)` and the population standard deviation.
pub fn motion_features<T: Scalar>(signal: &[(T, T)]) -> Result<FeatureVector<T>> {
    if signal.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            found: signal.len(),
        });
    }
    let eps = T::lit(EPS);
    let n = T::from_count(signal.len());
    let ratios: Vec<T> = signal.iter().map(|&(f, b)| f / (f + b + eps)).collect();
    let mean_r = ratios.iter().copied().sum::<T>() / n;
    let std_r = (ratios.iter().map(|&r| (r - mean_r) * (r - mean_r)).sum::<T>() / n).sqrt();
    let mean_f = signal.iter().map(|s| s.0).sum::<T>() / n;
    let mean_b = signal.iter().map(|s| s.1).sum::<T>() / n;
    FeatureVector::new(
        Extractor::Motion5,
        vec![mean_r, std_r, mean_f, mean_b, mean_f / (mean_b + eps)],
        "",
        0,
    )
}
