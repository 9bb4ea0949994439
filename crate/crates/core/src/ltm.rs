//! The local Tchebichef moment descriptor.
//!
//! For every pixel whose full N×N neighbourhood lies inside the image, a set
//! of k weighted local moments is computed by correlating the window with the
//! configured moment kernels. Instead of keeping the raw values, the rank
//! ordering of the k weighted moments is encoded as a Lehmer code, a single
//! integer in `0..k!`. The histogram of the resulting code image is the
//! feature vector.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::GrayImage;
use crate::feature::FeatureVector;
use crate::tchebichef::{MomentKernel, TchebichefBasis, TchebichefError};

/// Upper bound on the number of moments: 8! = 40320 histogram bins is the
/// largest feature space that stays practical without an image-free encoding.
pub const MAX_MOMENTS: usize = 8;

/// Weights must lie in `(0, 100]`.
pub const MAX_WEIGHT: f64 = 100.0;

const FACTORIALS: [usize; 9] = [1, 1, 2, 6, 24, 120, 720, 5040, 40320];

pub fn factorial(k: usize) -> usize {
    FACTORIALS[k]
}

#[derive(Debug, Error, PartialEq)]
pub enum LtmError {
    #[error(transparent)]
    Kernel(#[from] TchebichefError),
    #[error("orders and weights must have the same length ({orders} vs {weights})")]
    LengthMismatch { orders: usize, weights: usize },
    #[error("at least 2 moments are required, got {0}")]
    TooFewMoments(usize),
    #[error("at most {MAX_MOMENTS} moments are supported, got {0}")]
    TooManyMoments(usize),
    #[error("weight {value} at index {index} must be in (0, {MAX_WEIGHT}]")]
    WeightOutOfRange { index: usize, value: f64 },
    #[error("image {width}x{height} is smaller than the {size}x{size} kernel")]
    ImageTooSmall {
        width: usize,
        height: usize,
        size: usize,
    },
    #[error("the window centered at ({x}, {y}) extends outside the image")]
    WindowOutOfBounds { x: usize, y: usize },
    #[error("moment values contain NaN")]
    NanValue,
}

/// Whether moments are ranked by their signed value or their magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueMode {
    /// Rank the signed weighted moments as-is.
    #[default]
    Raw,
    /// Rank by absolute value, so "strength" ignores sign.
    Absolute,
}

/// How equal weighted moments are ranked. Ties are common on flat regions
/// (every zero-sum moment vanishes there), so the rule must be deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// An equal value at a later index does not count as stronger.
    #[default]
    EarlierIndexStronger,
}

/// Configuration of the descriptor: kernel size, the list of `(p, q)` order
/// pairs (duplicates permitted), one positive weight per order, and the value
/// mode. `orders.len()` is the `k` of the `k!`-bin histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtmConfig {
    pub kernel_size: usize,
    pub orders: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub value_mode: ValueMode,
    #[serde(default)]
    pub tie_rule: TieRule,
}

impl LtmConfig {
    /// Builds and validates a configuration with the default value mode.
    pub fn new(
        kernel_size: usize,
        orders: Vec<(usize, usize)>,
        weights: Vec<f64>,
    ) -> Result<Self, LtmError> {
        let config = Self {
            kernel_size,
            orders,
            weights,
            value_mode: ValueMode::default(),
            tie_rule: TieRule::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_value_mode(mut self, mode: ValueMode) -> Self {
        self.value_mode = mode;
        self
    }

    /// Number of moments `k`.
    pub fn moment_count(&self) -> usize {
        self.orders.len()
    }

    /// Number of distinct codes, `k!`.
    pub fn code_count(&self) -> usize {
        factorial(self.orders.len())
    }

    pub fn validate(&self) -> Result<(), LtmError> {
        if self.orders.len() != self.weights.len() {
            return Err(LtmError::LengthMismatch {
                orders: self.orders.len(),
                weights: self.weights.len(),
            });
        }
        if self.orders.len() < 2 {
            return Err(LtmError::TooFewMoments(self.orders.len()));
        }
        if self.orders.len() > MAX_MOMENTS {
            return Err(LtmError::TooManyMoments(self.orders.len()));
        }
        for (index, &w) in self.weights.iter().enumerate() {
            if !(w > 0.0 && w <= MAX_WEIGHT) {
                return Err(LtmError::WeightOutOfRange { index, value: w });
            }
        }
        let basis = TchebichefBasis::new(self.kernel_size)?;
        for &(p, q) in &self.orders {
            // surfaces the out-of-range error with the offending pair
            MomentKernel::new(&basis, p, q)?;
        }
        Ok(())
    }

    /// One kernel per configured order, in order.
    pub fn kernels(&self) -> Result<Vec<MomentKernel>, LtmError> {
        let basis = TchebichefBasis::new(self.kernel_size)?;
        self.orders
            .iter()
            .map(|&(p, q)| MomentKernel::new(&basis, p, q).map_err(LtmError::from))
            .collect()
    }
}

/// The per-pixel code image over the valid region of the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LtmImage {
    width: usize,
    height: usize,
    moment_count: usize,
    codes: Vec<u16>,
}

impl LtmImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of moments `k` used to produce the codes.
    pub fn moment_count(&self) -> usize {
        self.moment_count
    }

    /// Number of possible codes, `k!`.
    pub fn code_count(&self) -> usize {
        factorial(self.moment_count)
    }

    pub fn code(&self, x: usize, y: usize) -> u16 {
        self.codes[y * self.width + x]
    }

    pub fn codes(&self) -> &[u16] {
        &self.codes
    }
}

/// The local moment at `(x, y)`: the correlation of the kernel with the
/// window centered there. The mask is applied as printed, without flipping.
pub fn moment_at(
    image: &GrayImage,
    x: usize,
    y: usize,
    kernel: &MomentKernel,
) -> Result<f64, LtmError> {
    let r = kernel.size() / 2;
    if x < r || y < r || x + r >= image.width() || y + r >= image.height() {
        return Err(LtmError::WindowOutOfBounds { x, y });
    }
    Ok(correlate(image, x, y, kernel))
}

// The sum is anchored at the center pixel: constant windows must produce an
// exact zero for every zero-sum mask, otherwise accumulation noise (~1e-14)
// would rank the moments arbitrarily instead of engaging the tie rule.
fn correlate(image: &GrayImage, cx: usize, cy: usize, kernel: &MomentKernel) -> f64 {
    let n = kernel.size();
    let r = n / 2;
    let x0 = cx - r;
    let y0 = cy - r;
    let anchor = image.get(cx, cy) as f64;
    let mut acc = 0.0;
    for v in 0..n {
        let pixels = &image.row(y0 + v)[x0..x0 + n];
        let weights = kernel.row(v);
        for u in 0..n {
            acc += weights[u] * (pixels[u] as f64 - anchor);
        }
    }
    acc + anchor * kernel.mass()
}

/// Encodes the rank ordering of `values` as an integer in `0..k!`.
///
/// With `c_i` the number of later positions holding a strictly greater value
/// (ties resolved by `tie_rule`), the code is `sum(c_i * (k-1-i)!)`. A list
/// already in descending strength maps to 0, a fully ascending one to `k!-1`.
pub fn lehmer_code(values: &[f64], tie_rule: TieRule) -> Result<usize, LtmError> {
    let TieRule::EarlierIndexStronger = tie_rule;
    let k = values.len();
    if k < 2 {
        return Err(LtmError::TooFewMoments(k));
    }
    if k > MAX_MOMENTS {
        return Err(LtmError::TooManyMoments(k));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(LtmError::NanValue);
    }
    let mut code = 0;
    for i in 0..k {
        let c = values[i + 1..].iter().filter(|&&v| v > values[i]).count();
        code += c * factorial(k - 1 - i);
    }
    Ok(code)
}

/// Computes the full code image over the valid region.
pub fn ltm_image(image: &GrayImage, config: &LtmConfig) -> Result<LtmImage, LtmError> {
    config.validate()?;
    let kernels = config.kernels()?;
    let n = config.kernel_size;
    if image.width() < n || image.height() < n {
        return Err(LtmError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            size: n,
        });
    }
    let out_w = image.width() - n + 1;
    let out_h = image.height() - n + 1;
    let r = n / 2;
    let k = config.moment_count();

    let mut codes = Vec::with_capacity(out_w * out_h);
    let mut values = vec![0.0f64; k];
    for oy in 0..out_h {
        for ox in 0..out_w {
            for (i, kernel) in kernels.iter().enumerate() {
                let moment = correlate(image, ox + r, oy + r, kernel);
                let v = match config.value_mode {
                    ValueMode::Raw => moment,
                    ValueMode::Absolute => moment.abs(),
                };
                values[i] = config.weights[i] * v;
            }
            let code = lehmer_code(&values, config.tie_rule)?;
            codes.push(code as u16);
        }
    }
    Ok(LtmImage {
        width: out_w,
        height: out_h,
        moment_count: k,
        codes,
    })
}

/// Histogram of the code image: `k!` bins, total mass = valid pixel count.
pub fn histogram(ltm: &LtmImage) -> FeatureVector {
    let mut bins = vec![0u64; ltm.code_count()];
    for &code in ltm.codes() {
        bins[code as usize] += 1;
    }
    FeatureVector::from_bins(bins)
}

/// Convenience composition of [`ltm_image`] and [`histogram`].
pub fn extract_ltm(image: &GrayImage, config: &LtmConfig) -> Result<FeatureVector, LtmError> {
    Ok(histogram(&ltm_image(image, config)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tchebichef;

    fn constant_image(w: usize, h: usize, level: u8) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| level)
    }

    fn noisy_image(w: usize, h: usize, seed: u64) -> GrayImage {
        // small deterministic LCG so tests do not depend on rand
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        GrayImage::from_fn(w, h, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 56) as u8
        })
    }

    fn default_config() -> LtmConfig {
        LtmConfig::new(
            5,
            vec![(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)],
            vec![0.1, 1.0, 1.0, 1.0, 20.0],
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            LtmConfig::new(5, vec![(0, 0)], vec![1.0]),
            Err(LtmError::TooFewMoments(1))
        ));
        assert!(matches!(
            LtmConfig::new(5, vec![(0, 0), (1, 1)], vec![1.0]),
            Err(LtmError::LengthMismatch { .. })
        ));
        assert!(matches!(
            LtmConfig::new(5, vec![(0, 0), (1, 1)], vec![1.0, 0.0]),
            Err(LtmError::WeightOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            LtmConfig::new(5, vec![(0, 0), (5, 1)], vec![1.0, 1.0]),
            Err(LtmError::Kernel(TchebichefError::OrderOutOfRange { .. }))
        ));
        let nine = vec![(0, 0); 9];
        assert!(matches!(
            LtmConfig::new(5, nine, vec![1.0; 9]),
            Err(LtmError::TooManyMoments(9))
        ));
        // duplicates are allowed
        assert!(LtmConfig::new(5, vec![(2, 2), (2, 2)], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn moment_on_constant_image() {
        let image = constant_image(9, 9, 128);
        let basis = tchebichef::TchebichefBasis::new(5).unwrap();
        let k00 = MomentKernel::new(&basis, 0, 0).unwrap();
        let m = moment_at(&image, 4, 4, &k00).unwrap();
        assert!((m - 640.0).abs() < 1e-9);

        for (p, q) in [(0, 1), (1, 0), (2, 3), (4, 4)] {
            let k = MomentKernel::new(&basis, p, q).unwrap();
            assert!(moment_at(&image, 4, 4, &k).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn moment_window_bounds() {
        let image = constant_image(9, 9, 10);
        let basis = tchebichef::TchebichefBasis::new(5).unwrap();
        let k = MomentKernel::new(&basis, 0, 0).unwrap();
        assert!(moment_at(&image, 1, 4, &k).is_err());
        assert!(moment_at(&image, 4, 7, &k).is_err());
        assert!(moment_at(&image, 6, 6, &k).is_ok());
    }

    #[test]
    fn lehmer_frozen_examples() {
        let tie = TieRule::default();
        assert_eq!(lehmer_code(&[5.0, 4.0, 3.0, 2.0, 1.0], tie).unwrap(), 0);
        assert_eq!(lehmer_code(&[1.0, 2.0, 3.0, 4.0, 5.0], tie).unwrap(), 119);
        // ties: the later equal value is not greater
        assert_eq!(lehmer_code(&[1.0, 1.0], tie).unwrap(), 0);
        assert_eq!(lehmer_code(&[0.0, 0.0, 0.0], tie).unwrap(), 0);
        assert!(matches!(
            lehmer_code(&[f64::NAN, 1.0], tie),
            Err(LtmError::NanValue)
        ));
        assert!(matches!(lehmer_code(&[1.0], tie), Err(LtmError::TooFewMoments(1))));
    }

    #[test]
    fn lehmer_bijective_for_small_k() {
        use itertools::Itertools;
        for k in 2..=6usize {
            let values: Vec<f64> = (1..=k).map(|v| v as f64).collect();
            let mut codes: Vec<usize> = values
                .iter()
                .copied()
                .permutations(k)
                .map(|perm| lehmer_code(&perm, TieRule::default()).unwrap())
                .collect();
            codes.sort_unstable();
            assert_eq!(codes, (0..factorial(k)).collect::<Vec<_>>(), "k = {k}");
        }
    }

    #[test]
    fn constant_image_yields_code_zero_everywhere() {
        // M00 first with a positive image: only L_0 > 0, everything else ties at 0
        let image = constant_image(12, 10, 77);
        let config = default_config();
        let out = ltm_image(&image, &config).unwrap();
        assert_eq!((out.width(), out.height()), (8, 6));
        assert!(out.codes().iter().all(|&c| c == 0));
        let hist = histogram(&out);
        assert_eq!(hist.bins()[0], 48);
        assert_eq!(hist.total(), 48);
    }

    #[test]
    fn uniform_weight_scaling_leaves_codes_unchanged() {
        let image = noisy_image(14, 14, 3);
        let config = default_config();
        let mut scaled = config.clone();
        for w in scaled.weights.iter_mut() {
            *w *= 3.75;
        }
        assert_eq!(
            ltm_image(&image, &config).unwrap(),
            ltm_image(&image, &scaled).unwrap()
        );
    }

    #[test]
    fn shift_invariant_without_order_00() {
        // halve the dynamic range so the +40 shift never saturates
        let image = noisy_image(12, 12, 8);
        let base = GrayImage::from_fn(12, 12, |x, y| image.get(x, y) / 2);
        let shifted = GrayImage::from_fn(12, 12, |x, y| base.get(x, y) + 40);

        let config = LtmConfig::new(
            5,
            vec![(0, 1), (1, 0), (1, 1), (2, 0)],
            vec![1.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        assert_eq!(
            ltm_image(&base, &config).unwrap(),
            ltm_image(&shifted, &config).unwrap()
        );
    }

    #[test]
    fn image_smaller_than_kernel_rejected() {
        let image = constant_image(4, 4, 0);
        assert!(matches!(
            ltm_image(&image, &default_config()),
            Err(LtmError::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn histogram_mass_matches_valid_region() {
        let image = noisy_image(17, 13, 5);
        let config = default_config();
        let hist = extract_ltm(&image, &config).unwrap();
        assert_eq!(hist.bin_count(), 120);
        assert_eq!(hist.total(), (17 - 4) as u64 * (13 - 4) as u64);
    }

    #[test]
    fn eight_moments_use_the_full_code_space() {
        // the extended regime: 8 moments, 8! = 40320 bins
        let image = noisy_image(14, 14, 21);
        let orders: Vec<(usize, usize)> = vec![
            (0, 0),
            (0, 1),
            (1, 0),
            (1, 1),
            (0, 2),
            (2, 0),
            (1, 2),
            (2, 1),
        ];
        let config = LtmConfig::new(3, orders, vec![1.0; 8]).unwrap();
        let out = ltm_image(&image, &config).unwrap();
        assert!(out.codes().iter().all(|&c| (c as usize) < 40320));
        let hist = histogram(&out);
        assert_eq!(hist.bin_count(), 40320);
        assert_eq!(hist.total(), 144);
    }
}
