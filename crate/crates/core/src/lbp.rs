//! Local-binary-pattern baselines over the 3×3 neighbourhood.
//!
//! Four variants are provided: the original 8-neighbour LBP (256 bins) and
//! three center-symmetric forms (16 bins each) that compare opposite
//! neighbour pairs. Neighbours `g0..g7` are enumerated counter-clockwise
//! starting from the east neighbour, so `g_i` and `g_{i+4}` are opposite.

use thiserror::Error;

use crate::dataset::GrayImage;
use crate::feature::FeatureVector;

/// (dx, dy) offsets counter-clockwise from east, y growing downwards.
const NEIGHBORS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LbpError {
    #[error("image {width}x{height} is smaller than the 3x3 neighbourhood")]
    ImageTooSmall { width: usize, height: usize },
}

/// The descriptor variant. `CsLbp` carries its comparison threshold on the
/// 0–255 intensity scale; the other variants take no parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LbpVariant {
    /// Original LBP: each neighbour compared against the center, 256 bins.
    Olbp,
    /// Center-symmetric LBP: opposite pairs compared with a threshold.
    CsLbp { threshold: f64 },
    /// Center-symmetric local derivative pattern: sign of the product of the
    /// two derivatives through the center.
    CsLdp,
    /// Extended CS-LBP: combines the pair difference with a center term.
    XcsLbp,
}

impl LbpVariant {
    pub fn bin_count(&self) -> usize {
        match self {
            LbpVariant::Olbp => 256,
            _ => 16,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LbpVariant::Olbp => "OLBP",
            LbpVariant::CsLbp { .. } => "CS-LBP",
            LbpVariant::CsLdp => "CS-LDP",
            LbpVariant::XcsLbp => "XCS-LBP",
        }
    }

    fn code(&self, g: &[i32; 8], center: i32) -> u8 {
        // s(v) = 1 iff v >= 0
        let s = |v: i32| u8::from(v >= 0);
        match *self {
            LbpVariant::Olbp => {
                let mut code = 0u8;
                for (p, &gp) in g.iter().enumerate() {
                    code |= s(gp - center) << p;
                }
                code
            }
            LbpVariant::CsLbp { threshold } => {
                let mut code = 0u8;
                for i in 0..4 {
                    code |= u8::from((g[i] - g[i + 4]) as f64 > threshold) << i;
                }
                code
            }
            LbpVariant::CsLdp => {
                let mut code = 0u8;
                for i in 0..4 {
                    code |= s((g[i] - center) * (center - g[i + 4])) << i;
                }
                code
            }
            LbpVariant::XcsLbp => {
                let mut code = 0u8;
                for i in 0..4 {
                    let v = (g[i] - g[i + 4] + center) + (g[i] - center) * (g[i + 4] - center);
                    code |= s(v) << i;
                }
                code
            }
        }
    }
}

/// A code image over the border-1 valid region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpImage {
    width: usize,
    height: usize,
    bin_count: usize,
    codes: Vec<u8>,
}

impl LbpImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn code(&self, x: usize, y: usize) -> u8 {
        self.codes[y * self.width + x]
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }
}

/// Computes the code image for one variant.
pub fn lbp_image(image: &GrayImage, variant: LbpVariant) -> Result<LbpImage, LbpError> {
    if image.width() < 3 || image.height() < 3 {
        return Err(LbpError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
        });
    }
    let out_w = image.width() - 2;
    let out_h = image.height() - 2;
    let mut codes = Vec::with_capacity(out_w * out_h);
    for cy in 1..image.height() - 1 {
        for cx in 1..image.width() - 1 {
            let center = image.get(cx, cy) as i32;
            let mut g = [0i32; 8];
            for (i, &(dx, dy)) in NEIGHBORS.iter().enumerate() {
                let nx = (cx as isize + dx) as usize;
                let ny = (cy as isize + dy) as usize;
                g[i] = image.get(nx, ny) as i32;
            }
            codes.push(variant.code(&g, center));
        }
    }
    Ok(LbpImage {
        width: out_w,
        height: out_h,
        bin_count: variant.bin_count(),
        codes,
    })
}

pub fn histogram(lbp: &LbpImage) -> FeatureVector {
    let mut bins = vec![0u64; lbp.bin_count()];
    for &code in lbp.codes() {
        bins[code as usize] += 1;
    }
    FeatureVector::from_bins(bins)
}

/// Composition of [`lbp_image`] and [`histogram`].
pub fn extract_lbp(image: &GrayImage, variant: LbpVariant) -> Result<FeatureVector, LbpError> {
    Ok(histogram(&lbp_image(image, variant)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(values: [u8; 9]) -> GrayImage {
        GrayImage::new(3, 3, values.to_vec()).unwrap()
    }

    #[test]
    fn constant_image_olbp_all_255() {
        let image = GrayImage::from_fn(10, 8, |_, _| 55);
        let out = lbp_image(&image, LbpVariant::Olbp).unwrap();
        assert_eq!((out.width(), out.height()), (8, 6));
        assert!(out.codes().iter().all(|&c| c == 255));
        let hist = histogram(&out);
        assert_eq!(hist.bins()[255], 48);
    }

    #[test]
    fn constant_image_cslbp_all_zero() {
        let image = GrayImage::from_fn(6, 6, |_, _| 99);
        let out = lbp_image(&image, LbpVariant::CsLbp { threshold: 0.0 }).unwrap();
        assert!(out.codes().iter().all(|&c| c == 0));
    }

    // Hand-evaluated patch: center 50, neighbours CCW from east are
    // 60, 30, 20, 10, 40, 70, 80, 90.
    #[test]
    fn gradient_patch_frozen_codes() {
        let image = patch([10, 20, 30, 40, 50, 60, 70, 80, 90]);
        let at = |v: LbpVariant| lbp_image(&image, v).unwrap().code(0, 0);
        assert_eq!(at(LbpVariant::Olbp), 225);
        assert_eq!(at(LbpVariant::CsLbp { threshold: 0.0 }), 1);
        assert_eq!(at(LbpVariant::CsLdp), 15);
        assert_eq!(at(LbpVariant::XcsLbp), 0);
    }

    // Second patch: center 50, neighbours CCW from east are
    // 30, 80, 10, 90, 20, 70, 40, 60.
    #[test]
    fn mixed_patch_frozen_codes() {
        let image = patch([90, 10, 80, 20, 50, 30, 70, 40, 60]);
        let at = |v: LbpVariant| lbp_image(&image, v).unwrap().code(0, 0);
        assert_eq!(at(LbpVariant::Olbp), 170);
        assert_eq!(at(LbpVariant::CsLbp { threshold: 0.0 }), 11);
        assert_eq!(at(LbpVariant::CsLdp), 0);
        assert_eq!(at(LbpVariant::XcsLbp), 15);
    }

    #[test]
    fn cslbp_threshold_suppresses_small_differences() {
        let image = patch([10, 20, 30, 40, 50, 60, 70, 80, 90]);
        let code = lbp_image(&image, LbpVariant::CsLbp { threshold: 25.0 })
            .unwrap()
            .code(0, 0);
        // the only positive pair difference is 60 - 40 = 20, below 25
        assert_eq!(code, 0);
    }

    #[test]
    fn olbp_invariant_to_constant_shift() {
        let base = GrayImage::from_fn(9, 9, |x, y| ((x * 13 + y * 29) % 100) as u8);
        let shifted = GrayImage::from_fn(9, 9, |x, y| base.get(x, y) + 77);
        assert_eq!(
            lbp_image(&base, LbpVariant::Olbp).unwrap(),
            lbp_image(&shifted, LbpVariant::Olbp).unwrap()
        );
    }

    #[test]
    fn center_symmetric_codes_stay_in_range() {
        let image = GrayImage::from_fn(12, 12, |x, y| ((x * 7 + y * 31) % 256) as u8);
        for variant in [
            LbpVariant::CsLbp { threshold: 0.0 },
            LbpVariant::CsLdp,
            LbpVariant::XcsLbp,
        ] {
            let out = lbp_image(&image, variant).unwrap();
            assert!(out.codes().iter().all(|&c| c < 16), "{}", variant.name());
            assert_eq!(histogram(&out).total(), 100);
        }
    }

    #[test]
    fn too_small_image_rejected() {
        let image = GrayImage::new(2, 3, vec![0; 6]).unwrap();
        assert_eq!(
            lbp_image(&image, LbpVariant::Olbp).unwrap_err(),
            LbpError::ImageTooSmall { width: 2, height: 3 }
        );
    }
}
