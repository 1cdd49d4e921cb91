use crate::error::{Error, Result};
use crate::imaging::{gaussian_blur, Image};
use crate::scalar::Scalar;

use super::{Extractor, FeatureVector};

pub const IQM_DIM: usize = 12;
pub const PSNR_CAP: f64 = 100.0;
const REFERENCE_SIGMA: f64 = 0.5;
const EPS: f64 = 1e-12;
const HIST_BINS: usize = 32;
const MIN_SIDE: usize = 16;

fn plane<T: Scalar>(img: &Image) -> Vec<T> {
    img.data().iter().map(|&v| T::from_byte(v)).collect()
}

/// Applies a 3x3 operator to every interior pixel.
fn interior<T: Scalar>(p: &[T], w: usize, h: usize, f: impl Fn(&dyn Fn(isize, isize) -> T) -> T) -> Vec<T> {
    let mut out = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let at = |dx: isize, dy: isize| p[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            out.push(f(&at));
        }
    }
    out
}

fn laplacian<T: Scalar>(p: &[T], w: usize, h: usize) -> Vec<T> {
    interior(p, w, h, |at| {
        at(0, -1) + at(-1, 0) + at(1, 0) + at(0, 1) - T::lit(4.0) * at(0, 0)
    })
}

fn sobel_magnitude<T: Scalar>(p: &[T], w: usize, h: usize) -> Vec<T> {
    let two = T::lit(2.0);
    interior(p, w, h, |at| {
        let gx = at(1, -1) + two * at(1, 0) + at(1, 1) - at(-1, -1) - two * at(-1, 0) - at(-1, 1);
        let gy = at(-1, 1) + two * at(0, 1) + at(1, 1) - at(-1, -1) - two * at(0, -1) - at(1, -1);
        gx.hypot(gy)
    })
}

fn central_gradient<T: Scalar>(p: &[T], w: usize, h: usize) -> Vec<T> {
    let half = T::lit(0.5);
    interior(p, w, h, |at| {
        (half * (at(1, 0) - at(-1, 0))).hypot(half * (at(0, 1) - at(0, -1)))
    })
}

fn histogram<T: Scalar>(img: &Image) -> [T; HIST_BINS] {
    let mut counts = [0usize; HIST_BINS];
    for &v in img.data() {
        counts[usize::from(v) * HIST_BINS / 256] += 1;
    }
    let n = T::from_count(img.data().len());
    counts.map(|c| T::from_count(c) / n)
}

fn mean<T: Scalar>(v: impl Iterator<Item = T>, n: usize) -> T {
    v.sum::<T>() / T::from_count(n)
}

/// Twelve full-reference measures between `img` and its sigma-0.5 Gaussian blur:
/// MSE, PSNR, SNR, structural content, maximum difference, average difference,
/// normalized absolute error, Laplacian MSE, normalized cross-correlation, total
/// edge difference, gradient magnitude error and 32-bin histogram chi-square.
pub fn iqm_vector<T: Scalar>(img: &Image) -> Result<FeatureVector<T>> {
    let (w, h) = img.dims();
    if !img.is_gray() {
        return Err(Error::InvalidImage("IQM needs a gray image".into()));
    }
    if w < MIN_SIDE || h < MIN_SIDE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: MIN_SIDE,
        });
    }
    let reference = gaussian_blur(img, REFERENCE_SIGMA)?;
    Ok(iqm_between(img, &reference))
}

/// Measures between `img` and an arbitrary same-size gray `reference`.
pub(crate) fn iqm_between<T: Scalar>(img: &Image, reference: &Image) -> FeatureVector<T> {
    let (w, h) = img.dims();
    let n = w * h;
    let eps = T::lit(EPS);
    let cap = T::lit(PSNR_CAP);
    let i = plane::<T>(img);
    let r = plane::<T>(reference);
    let diff: Vec<T> = i.iter().zip(&r).map(|(&a, &b)| a - b).collect();

    let sq_err: T = diff.iter().map(|&d| d * d).sum();
    let mse = sq_err / T::from_count(n);
    let psnr = if mse == T::zero() {
        cap
    } else {
        (T::lit(10.0) * (T::lit(255.0 * 255.0) / mse).log10()).min(cap)
    };
    let energy_i: T = i.iter().map(|&a| a * a).sum();
    let energy_r: T = r.iter().map(|&b| b * b).sum();
    let snr = (T::lit(10.0) * ((energy_i + eps) / (sq_err + eps)).log10()).min(cap);
    let sc = energy_i / (energy_r + eps);
    let md = diff.iter().fold(T::zero(), |m, &d| m.max(d.abs()));
    let ad = mean(diff.iter().copied(), n);
    let nae = diff.iter().map(|d| d.abs()).sum::<T>() / (i.iter().map(|a| a.abs()).sum::<T>() + eps);

    let m = (w - 2) * (h - 2);
    let lmse = mean(
        laplacian(&i, w, h)
            .into_iter()
            .zip(laplacian(&r, w, h))
            .map(|(a, b)| (a - b) * (a - b)),
        m,
    );
    let ncc = i.iter().zip(&r).map(|(&a, &b)| a * b).sum::<T>() / (energy_i + eps);
    let ted = mean(
        sobel_magnitude(&i, w, h)
            .into_iter()
            .zip(sobel_magnitude(&r, w, h))
            .map(|(a, b)| (a - b).abs()),
        m,
    );
    let gme = mean(
        central_gradient(&i, w, h)
            .into_iter()
            .zip(central_gradient(&r, w, h))
            .map(|(a, b)| (a - b) * (a - b)),
        m,
    );
    let chi2 = histogram::<T>(img)
        .into_iter()
        .zip(histogram::<T>(reference))
        .filter(|(p, q)| *p + *q > T::zero())
        .map(|(p, q)| (p - q) * (p - q) / (p + q))
        .sum();

    FeatureVector::new(
        Extractor::Iqm,
        vec![mse, psnr, snr, sc, md, ad, nae, lmse, ncc, ted, gme, chi2],
        "",
        0,
    )
    .expect("guarded measures are finite")
}
