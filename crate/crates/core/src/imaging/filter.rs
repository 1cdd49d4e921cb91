use super::{luma, Image};
use crate::error::{Error, Result};

/// BT.601 luma `round(0.299R + 0.587G + 0.114B)`; gray input is returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.is_gray() {
        return img.clone();
    }
    let data = img.data().chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
    Image::new(img.width(), img.height(), 1, data).expect("same dimensions")
}

/// Bilinear resampling with the half-pixel-center convention and clamped sources.
pub fn resize_bilinear(img: &Image, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!("resize target {width}x{height}")));
    }
    if (width, height) == img.dims() {
        return Ok(img.clone());
    }
    let (sw, sh, c) = (img.width(), img.height(), img.channels());
    let taps = |dst: usize, src: usize| -> Vec<(usize, usize, f64)> {
        let scale = src as f64 / dst as f64;
        (0..dst)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(src - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xt = taps(width, sw);
    let yt = taps(height, sh);
    let src = img.data();
    let mut out = Vec::with_capacity(width * height * c);
    for &(y0, y1, fy) in &yt {
        for &(x0, x1, fx) in &xt {
            for ch in 0..c {
                let p = |x: usize, y: usize| f64::from(src[(y * sw + x) * c + ch]);
                let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
                let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                out.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(width, height, c, out)
}

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidSigma(sigma));
    }
    let r = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / sum).collect())
}

/// Separable Gaussian blur with clamp-to-edge borders, returned unrounded:
/// one `f64` plane per channel, row-major.
pub fn gaussian_blur_planes(img: &Image, sigma: f64) -> Result<Vec<Vec<f64>>> {
    let k = gaussian_kernel(sigma)?;
    let r = (k.len() / 2) as i64;
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut planes = Vec::with_capacity(c);
    for ch in 0..c {
        let mut tmp = vec![0.0f64; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (t, kv) in k.iter().enumerate() {
                    let sx = clamp(x as i64 + t as i64 - r, w);
                    acc += kv * f64::from(img.data()[(y * w + sx) * c + ch]);
                }
                tmp[y * w + x] = acc;
            }
        }
        let mut plane = vec![0.0f64; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (t, kv) in k.iter().enumerate() {
                    let sy = clamp(y as i64 + t as i64 - r, h);
                    acc += kv * tmp[sy * w + x];
                }
                plane[y * w + x] = acc;
            }
        }
        planes.push(plane);
    }
    Ok(planes)
}

/// Gaussian blur rounded back to 8 bits.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    let planes = gaussian_blur_planes(img, sigma)?;
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut out = vec![0u8; w * h * c];
    for (ch, plane) in planes.iter().enumerate() {
        for (i, v) in plane.iter().enumerate() {
            out[i * c + ch] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
        }
    }
    Image::new(w, h, c, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grayscale_values() {
        let img = Image::rgb(3, 1, vec![255, 255, 255, 255, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(to_grayscale(&img).data(), &[255, 76, 0]);
        let g = Image::gray(2, 1, vec![3, 250]).unwrap();
        assert_eq!(to_grayscale(&g), g);
    }

    #[test]
    fn resize_identity_and_hand_values() {
        let img = Image::gray(64, 64, (0..64 * 64).map(|i| (i % 251) as u8).collect()).unwrap();
        assert_eq!(resize_bilinear(&img, 64, 64).unwrap(), img);
        // sources at -0.25 (clamped), 0.25, 0.75, 1.25 (clamped)
        let row = Image::gray(2, 1, vec![0, 255]).unwrap();
        assert_eq!(resize_bilinear(&row, 4, 1).unwrap().data(), &[0, 64, 191, 255]);
    }

    #[test]
    fn resize_keeps_constants() {
        let img = Image::filled(7, 5, 3, 91).unwrap();
        let out = resize_bilinear(&img, 13, 2).unwrap();
        assert!(out.data().iter().all(|&v| v == 91));
    }

    #[test]
    fn blur_rejects_nonpositive_sigma() {
        let img = Image::filled(4, 4, 1, 0).unwrap();
        assert!(matches!(gaussian_blur(&img, 0.0), Err(Error::InvalidSigma(_))));
        assert!(matches!(gaussian_blur(&img, -1.0), Err(Error::InvalidSigma(_))));
    }

    #[test]
    fn blur_constant_is_identity() {
        let img = Image::filled(9, 6, 3, 200).unwrap();
        assert_eq!(gaussian_blur(&img, 1.7).unwrap(), img);
    }

    #[test]
    fn blur_impulse_is_kernel_outer_product() {
        let sigma = 0.5f64;
        // closed-form taps for r = ceil(1.5) = 2
        let raw: Vec<f64> = (-2i32..=2)
            .map(|i| (-(f64::from(i * i)) / (2.0 * sigma * sigma)).exp())
            .collect();
        let s: f64 = raw.iter().sum();
        let k: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let mut data = vec![0u8; 81];
        data[4 * 9 + 4] = 255;
        let img = Image::gray(9, 9, data).unwrap();
        let planes = gaussian_blur_planes(&img, sigma).unwrap();
        let out = gaussian_blur(&img, sigma).unwrap();
        for y in 0..9 {
            for x in 0..9 {
                let (dy, dx) = (y as i32 - 4, x as i32 - 4);
                let expected = if dx.abs() <= 2 && dy.abs() <= 2 {
                    255.0 * k[(dy + 2) as usize] * k[(dx + 2) as usize]
                } else {
                    0.0
                };
                assert!((planes[0][y * 9 + x] - expected).abs() < 1e-9);
                assert_eq!(out.at(x, y), (expected + 0.5).floor() as u8);
            }
        }
    }

    proptest! {
        #[test]
        fn resize_stays_within_input_range(
            w in 1usize..9, h in 1usize..9, tw in 1usize..20, th in 1usize..20,
            seed in proptest::collection::vec(any::<u8>(), 81)
        ) {
            let img = Image::gray(w, h, seed[..w * h].to_vec()).unwrap();
            let lo = *img.data().iter().min().unwrap();
            let hi = *img.data().iter().max().unwrap();
            let out = resize_bilinear(&img, tw, th).unwrap();
            prop_assert!(out.data().iter().all(|&v| v >= lo && v <= hi));
        }

        #[test]
        fn blur_preserves_mean_away_from_borders(
            inner in proptest::collection::vec(any::<u8>(), 36),
            border in any::<u8>(),
            sigma in 0.3f64..1.0
        ) {
            // content sits at least ceil(3 sigma) = 3 pixels from every edge
            let (w, h) = (12usize, 12usize);
            let mut data = vec![border; w * h];
            for y in 0..6 {
                for x in 0..6 {
                    data[(y + 3) * w + x + 3] = inner[y * 6 + x];
                }
            }
            let img = Image::gray(w, h, data).unwrap();
            let mean_in: f64 = img.data().iter().map(|&v| f64::from(v)).sum::<f64>() / 144.0;
            let plane = &gaussian_blur_planes(&img, sigma).unwrap()[0];
            let mean_out: f64 = plane.iter().sum::<f64>() / 144.0;
            prop_assert!((mean_out - mean_in).abs() <= 1e-6 * mean_in.max(1.0));
        }
    }
}
