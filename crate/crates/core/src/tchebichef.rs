//! Discrete orthonormal Tchebichef polynomials and separable moment kernels.
//!
//! The basis `t_n(x)` is defined on the integer grid `x = 0..N-1` and built
//! with the three-term recurrence
//!
//! ```text
//! t_n(x) = a1 * x * t_{n-1}(x) + a2 * t_{n-1}(x) + a3 * t_{n-2}(x)
//! ```
//!
//! seeded by the constant `t_0` and the linear `t_1`. An N×N moment kernel is
//! the outer product `w[y][x] = t_m(x) * t_n(y)`; correlating an image window
//! with it yields the local Tchebichef moment of order `(m, n)`.

use thiserror::Error;

/// Smallest supported kernel size.
pub const MIN_KERNEL_SIZE: usize = 3;

/// Largest supported kernel size. The recurrence is well conditioned over
/// this range (orthonormality holds to ~1e-12); larger sizes are rejected
/// rather than silently degrading.
pub const MAX_KERNEL_SIZE: usize = 15;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TchebichefError {
    #[error("kernel size must be odd, got {0}")]
    EvenKernelSize(usize),
    #[error("kernel size must be in {MIN_KERNEL_SIZE}..={MAX_KERNEL_SIZE}, got {0}")]
    KernelSizeOutOfRange(usize),
    #[error("moment order ({m}, {n}) out of range for kernel size {size}")]
    OrderOutOfRange { m: usize, n: usize, size: usize },
}

fn check_kernel_size(size: usize) -> Result<(), TchebichefError> {
    if !(MIN_KERNEL_SIZE..=MAX_KERNEL_SIZE).contains(&size) {
        return Err(TchebichefError::KernelSizeOutOfRange(size));
    }
    if size.is_multiple_of(2) {
        return Err(TchebichefError::EvenKernelSize(size));
    }
    Ok(())
}

/// The orthonormal polynomial table `t[n][x]` for one kernel size.
///
/// Rows are unit-norm and pairwise orthogonal under the plain dot product
/// over the grid; `t[0]` is constant and `t[1]` strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TchebichefBasis {
    size: usize,
    // row n starts at n * size
    values: Vec<f64>,
}

impl TchebichefBasis {
    /// Builds the basis for an odd kernel size in the supported range.
    ///
    /// Note the sign of the `a3` recurrence coefficient: it carries a
    /// `(1 - n) / n` factor. The variant with `(n - 1) / n` breaks
    /// orthonormality already at `n = 2`.
    pub fn new(size: usize) -> Result<Self, TchebichefError> {
        check_kernel_size(size)?;
        let n_f = size as f64;
        let mut values = vec![0.0; size * size];

        let t0 = 1.0 / n_f.sqrt();
        let lin = (3.0 / (n_f * (n_f * n_f - 1.0))).sqrt();
        for x in 0..size {
            values[x] = t0;
            values[size + x] = (2.0 * x as f64 + 1.0 - n_f) * lin;
        }

        for n in 2..size {
            let nf = n as f64;
            let common = ((4.0 * nf * nf - 1.0) / (n_f * n_f - nf * nf)).sqrt();
            let a1 = 2.0 / nf * common;
            let a2 = (1.0 - n_f) / nf * common;
            let a3 = (1.0 - nf) / nf
                * ((2.0 * nf + 1.0) / (2.0 * nf - 3.0)).sqrt()
                * ((n_f * n_f - (nf - 1.0) * (nf - 1.0)) / (n_f * n_f - nf * nf)).sqrt();
            for x in 0..size {
                let prev = values[(n - 1) * size + x];
                let prev2 = values[(n - 2) * size + x];
                values[n * size + x] = a1 * x as f64 * prev + a2 * prev + a3 * prev2;
            }
        }

        let basis = Self { size, values };
        debug_assert!(
            basis.max_orthonormality_error() < 1e-10,
            "recurrence produced a non-orthonormal basis for N = {size}"
        );
        Ok(basis)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `t_n(x)`.
    pub fn value(&self, n: usize, x: usize) -> f64 {
        self.values[n * self.size + x]
    }

    /// The full row `t_n(0..N)`.
    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.size..(n + 1) * self.size]
    }

    /// Largest deviation of any pairwise dot product from the identity.
    pub fn max_orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.size {
            for n in 0..self.size {
                let dot: f64 = self
                    .row(m)
                    .iter()
                    .zip(self.row(n))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// One N×N separable convolution mask `w[y][x] = t_m(x) * t_n(y)`.
///
/// The mask is applied as printed (correlation, no flip). For any order pair
/// other than `(0, 0)` its entries sum to zero, and its Frobenius norm is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentKernel {
    order_x: usize,
    order_y: usize,
    size: usize,
    // row y starts at y * size
    weights: Vec<f64>,
}

impl MomentKernel {
    pub fn new(
        basis: &TchebichefBasis,
        order_x: usize,
        order_y: usize,
    ) -> Result<Self, TchebichefError> {
        let size = basis.size();
        if order_x >= size || order_y >= size {
            return Err(TchebichefError::OrderOutOfRange {
                m: order_x,
                n: order_y,
                size,
            });
        }
        let mut weights = vec![0.0; size * size];
        for y in 0..size {
            let ty = basis.value(order_y, y);
            for x in 0..size {
                weights[y * size + x] = basis.value(order_x, x) * ty;
            }
        }
        Ok(Self {
            order_x,
            order_y,
            size,
            weights,
        })
    }

    /// Moment order along the image x axis (`m`).
    pub fn order_x(&self) -> usize {
        self.order_x
    }

    /// Moment order along the image y axis (`n`).
    pub fn order_y(&self) -> usize {
        self.order_y
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `w[y][x]`.
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.size + x]
    }

    /// The mask row at `y`.
    pub fn row(&self, y: usize) -> &[f64] {
        &self.weights[y * self.size..(y + 1) * self.size]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mathematically exact sum of the mask entries: `N` for the `(0, 0)`
    /// mask, zero for every other order pair (those are orthogonal to the
    /// constant basis). The floating-point [`Self::sum`] only approximates
    /// this; correlation uses the exact value so flat windows produce exact
    /// zeros and the tie rule engages deterministically.
    pub fn mass(&self) -> f64 {
        if self.order_x == 0 && self.order_y == 0 {
            self.size as f64
        } else {
            0.0
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// All N² kernels for one size, sorted by total degree `m + n`, then
/// lexicographically by `(m, n)`. This matches the usual degree-grouped
/// layout and gives a stable external numbering.
pub fn all_kernels(size: usize) -> Result<Vec<MomentKernel>, TchebichefError> {
    let basis = TchebichefBasis::new(size)?;
    let mut orders: Vec<(usize, usize)> = (0..size)
        .flat_map(|m| (0..size).map(move |n| (m, n)))
        .collect();
    orders.sort_by_key(|&(m, n)| (m + n, m, n));
    orders
        .into_iter()
        .map(|(m, n)| MomentKernel::new(&basis, m, n))
        .collect()
}
