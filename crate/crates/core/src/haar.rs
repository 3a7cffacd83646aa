//! Integral images and the five basic Haar-like feature types.
//!
//! Feature polarity conventions:
//!
//! * two-rect horizontal: left half `+1`, right half `-1`
//! * two-rect vertical: top half `+1`, bottom half `-1`
//! * three-rect (either orientation): outer thirds `+1`, middle third `-2`
//! * four-rect diagonal: top-left and bottom-right `+1`, the other two `-1`
//!
//! Every type is area balanced, so adding a constant to all pixels leaves
//! every feature value unchanged.
//!
//! Features are enumerated in `(kind, y, x, h, w)` order; the position of a
//! feature in [`enumerate_features`] is its stable feature index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image must be nonempty"));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                what: "image pixels",
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

/// `(h+1) × (w+1)` table with a zero first row and column; entry `(r, c)` is
/// the sum of all pixels strictly above and to the left of `(r, c)`.
#[derive(Clone, Debug)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<i64>,
}

pub fn integral(image: &GrayImage) -> IntegralImage {
    let (w, h) = (image.width, image.height);
    let stride = w + 1;
    let mut table = vec![0i64; (h + 1) * stride];
    for r in 0..h {
        let mut row_sum = 0i64;
        for c in 0..w {
            row_sum += image.get(r, c) as i64;
            table[(r + 1) * stride + c + 1] = table[r * stride + c + 1] + row_sum;
        }
    }
    IntegralImage {
        width: w,
        height: h,
        table,
    }
}

impl IntegralImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn at(&self, r: usize, c: usize) -> i64 {
        self.table[r * (self.width + 1) + c]
    }

    /// Sum over rows `r1..r2` and columns `c1..c2` (half-open).
    pub fn rect_sum(&self, r1: usize, c1: usize, r2: usize, c2: usize) -> i64 {
        debug_assert!(r1 <= r2 && c1 <= c2 && r2 <= self.height && c2 <= self.width);
        self.at(r2, c2) - self.at(r1, c2) - self.at(r2, c1) + self.at(r1, c1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaarKind {
    TwoRectHorizontal,
    TwoRectVertical,
    ThreeRectHorizontal,
    ThreeRectVertical,
    FourRectDiagonal,
}

impl HaarKind {
    pub const ALL: [HaarKind; 5] = [
        HaarKind::TwoRectHorizontal,
        HaarKind::TwoRectVertical,
        HaarKind::ThreeRectHorizontal,
        HaarKind::ThreeRectVertical,
        HaarKind::FourRectDiagonal,
    ];

    /// Smallest `(width, height)` of the pattern; every placement is an
    /// integer multiple of it in each direction.
    pub fn base_size(self) -> (usize, usize) {
        match self {
            HaarKind::TwoRectHorizontal => (2, 1),
            HaarKind::TwoRectVertical => (1, 2),
            HaarKind::ThreeRectHorizontal => (3, 1),
            HaarKind::ThreeRectVertical => (1, 3),
            HaarKind::FourRectDiagonal => (2, 2),
        }
    }
}

/// A placed feature: top-left corner `(x, y)` and total extent `w × h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaarFeature {
    pub kind: HaarKind,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl HaarFeature {
    pub fn fits(&self, window_w: usize, window_h: usize) -> bool {
        let (bw, bh) = self.kind.base_size();
        self.w > 0
            && self.h > 0
            && self.w.is_multiple_of(bw)
            && self.h.is_multiple_of(bh)
            && self.x + self.w <= window_w
            && self.y + self.h <= window_h
    }

    /// Signed rectangles `(weight, r1, c1, r2, c2)` making up the feature.
    pub fn rectangles(&self) -> Vec<(i64, usize, usize, usize, usize)> {
        let (x, y, w, h) = (self.x, self.y, self.w, self.h);
        match self.kind {
            HaarKind::TwoRectHorizontal => {
                let hw = w / 2;
                vec![(1, y, x, y + h, x + hw), (-1, y, x + hw, y + h, x + w)]
            }
            HaarKind::TwoRectVertical => {
                let hh = h / 2;
                vec![(1, y, x, y + hh, x + w), (-1, y + hh, x, y + h, x + w)]
            }
            HaarKind::ThreeRectHorizontal => {
                let t = w / 3;
                vec![
                    (1, y, x, y + h, x + t),
                    (-2, y, x + t, y + h, x + 2 * t),
                    (1, y, x + 2 * t, y + h, x + w),
                ]
            }
            HaarKind::ThreeRectVertical => {
                let t = h / 3;
                vec![
                    (1, y, x, y + t, x + w),
                    (-2, y + t, x, y + 2 * t, x + w),
                    (1, y + 2 * t, x, y + h, x + w),
                ]
            }
            HaarKind::FourRectDiagonal => {
                let (hw, hh) = (w / 2, h / 2);
                vec![
                    (1, y, x, y + hh, x + hw),
                    (-1, y, x + hw, y + hh, x + w),
                    (-1, y + hh, x, y + h, x + hw),
                    (1, y + hh, x + hw, y + h, x + w),
                ]
            }
        }
    }

    /// Exact integer value; the caller guarantees the feature fits.
    pub fn value_exact(&self, ii: &IntegralImage) -> i64 {
        self.rectangles()
            .into_iter()
            .map(|(wt, r1, c1, r2, c2)| wt * ii.rect_sum(r1, c1, r2, c2))
            .sum()
    }
}

/// All placements and scales of the five kinds inside a `window_w × window_h`
/// window, in `(kind, y, x, h, w)` order.
pub fn enumerate_features(window_w: usize, window_h: usize) -> Vec<HaarFeature> {
    let mut out = Vec::new();
    for kind in HaarKind::ALL {
        let (bw, bh) = kind.base_size();
        for y in 0..window_h {
            for x in 0..window_w {
                for h in (bh..=window_h - y).step_by(bh) {
                    for w in (bw..=window_w - x).step_by(bw) {
                        out.push(HaarFeature { kind, x, y, w, h });
                    }
                }
            }
        }
    }
    out
}

pub fn feature_value(feature: &HaarFeature, ii: &IntegralImage) -> Result<f64> {
    if !feature.fits(ii.width, ii.height) {
        return Err(Error::invalid(format!(
            "feature {feature:?} does not fit a {}x{} window",
            ii.width, ii.height
        )));
    }
    Ok(feature.value_exact(ii) as f64)
}
