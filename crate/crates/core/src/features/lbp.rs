use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::scalar::Scalar;

use super::{Extractor, FeatureVector};

pub const LBP_BINS: usize = 59;
pub const NON_UNIFORM_BIN: usize = 58;
/// Code produced wherever all eight neighbors tie with the center.
pub const ALL_TIES_CODE: u8 = 255;

/// Patch offsets (row-major index into a 3x3 patch) of bits 0..8, clockwise from top-left.
const NEIGHBORS: [usize; 8] = [0, 1, 2, 5, 8, 7, 6, 3];
const OFFSETS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];

/// 8-bit code of a row-major 3x3 patch; a bit is set when its neighbor is >= the center.
pub fn lbp_code(patch: &[u8; 9]) -> u8 {
    let c = patch[4];
    NEIGHBORS
        .iter()
        .enumerate()
        .fold(0u8, |code, (k, &n)| code | (u8::from(patch[n] >= c) << k))
}

fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

fn bin_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [NON_UNIFORM_BIN as u8; 256];
        let mut next = 0u8;
        for code in 0..=255u8 {
            if transitions(code) <= 2 {
                table[code as usize] = next;
                next += 1;
            }
        }
        table
    })
}

/// Histogram bin of `code`: uniform codes (at most two circular transitions) in
/// ascending order take bins 0..58, everything else shares bin 58.
pub fn uniform_bin(code: u8) -> usize {
    bin_table()[code as usize] as usize
}

/// Codes of every interior pixel of a gray image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpMap {
    pub width: usize,
    pub height: usize,
    pub codes: Vec<u8>,
}

impl LbpMap {
    pub fn code(&self, x: usize, y: usize) -> u8 {
        self.codes[y * self.width + x]
    }

    /// Codes as a gray image, for visual inspection.
    pub fn to_image(&self) -> Image {
        Image::gray(self.width, self.height, self.codes.clone()).expect("map dims")
    }
}

pub fn lbp_map(img: &Image) -> Result<LbpMap> {
    let (w, h) = img.dims();
    if !img.is_gray() {
        return Err(Error::InvalidImage("LBP needs a gray image".into()));
    }
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let data = img.data();
    let mut codes = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let c = data[y * w + x];
            let mut code = 0u8;
            for (k, (dx, dy)) in OFFSETS.iter().enumerate() {
                let n = data[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
                code |= u8::from(n >= c) << k;
            }
            codes.push(code);
        }
    }
    Ok(LbpMap {
        width: w - 2,
        height: h - 2,
        codes,
    })
}

/// Normalized 59-bin uniform-LBP histogram of a gray image.
pub fn lbp_histogram<T: Scalar>(img: &Image) -> Result<FeatureVector<T>> {
    let map = lbp_map(img)?;
    let mut counts = [0usize; LBP_BINS];
    for &c in &map.codes {
        counts[uniform_bin(c)] += 1;
    }
    let n = T::from_count(map.codes.len());
    let values = counts.iter().map(|&c| T::from_count(c) / n).collect();
    FeatureVector::new(Extractor::Lbp59, values, "", 0)
}
