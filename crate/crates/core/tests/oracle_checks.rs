// Index-based loops here deliberately mirror the summation formulas.
#![allow(clippy::needless_range_loop)]

//! Oracle-backed checks: the recurrence basis against Gram-Schmidt
//! orthonormalization, kernel completeness, the correlation against a plain
//! double sum, and the full descriptor against a per-pixel brute-force path.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ltmtex::dataset::GrayImage;
use ltmtex::ltm::{self, LtmConfig, ValueMode};
use ltmtex::tchebichef::{all_kernels, MomentKernel, TchebichefBasis};

/// Orthonormalizes the monomials 1, x, x^2, ... over the grid 0..n with
/// modified Gram-Schmidt (two passes), sign fixed so the leading coefficient
/// is positive. Independent of the recurrence under test.
fn gram_schmidt_basis(n: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for degree in 0..n {
        let mut v: Vec<f64> = (0..n).map(|x| (x as f64).powi(degree as i32)).collect();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        // leading coefficient sign: the residual of x^degree against the
        // lower-degree basis keeps the monomial's positive leading term, so
        // only a wholesale flip during normalization needs correcting; probe
        // via the highest-order finite difference, whose sign equals the
        // leading coefficient's.
        let mut diff = v.clone();
        for _ in 0..degree {
            diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
        }
        if diff[0] < 0.0 {
            for vi in v.iter_mut() {
                *vi = -*vi;
            }
        }
        basis.push(v);
    }
    basis
}

#[test]
fn recurrence_matches_gram_schmidt_oracle() {
    for size in [3usize, 5, 7, 9] {
        let basis = TchebichefBasis::new(size).unwrap();
        let oracle = gram_schmidt_basis(size);
        for n in 0..size {
            for x in 0..size {
                let diff = (basis.value(n, x) - oracle[n][x]).abs();
                assert!(diff < 1e-8, "N={size} t[{n}][{x}] differs by {diff:e}");
            }
        }
    }
}

#[test]
fn kernels_reconstruct_identity() {
    // the N^2 masks form an orthonormal basis of N x N images
    for size in [3usize, 5, 7] {
        let kernels = all_kernels(size).unwrap();
        let cells = size * size;
        for a in 0..cells {
            for b in 0..cells {
                let sum: f64 = kernels
                    .iter()
                    .map(|k| {
                        k.value(a % size, a / size) * k.value(b % size, b / size)
                    })
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (sum - target).abs() < 1e-8,
                    "N={size} cells ({a}, {b}): {sum}"
                );
            }
        }
    }
}

fn random_image(rng: &mut ChaCha8Rng, width: usize, height: usize) -> GrayImage {
    GrayImage::from_fn(width, height, |_, _| rng.gen())
}

/// Plain double sum over the window, column-major, straight off the basis.
fn double_sum_moment(
    image: &GrayImage,
    cx: usize,
    cy: usize,
    basis: &TchebichefBasis,
    m: usize,
    n: usize,
) -> f64 {
    let size = basis.size();
    let r = size / 2;
    let mut acc = 0.0;
    for u in 0..size {
        for v in 0..size {
            acc += basis.value(m, u)
                * basis.value(n, v)
                * image.get(cx - r + u, cy - r + v) as f64;
        }
    }
    acc
}

#[test]
fn moment_matches_double_sum_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x07ac1e);
    for size in [3usize, 5, 7] {
        let basis = TchebichefBasis::new(size).unwrap();
        let image = random_image(&mut rng, 16, 16);
        for _ in 0..20 {
            let m = rng.gen_range(0..size);
            let n = rng.gen_range(0..size);
            let kernel = MomentKernel::new(&basis, m, n).unwrap();
            let cx = rng.gen_range(size / 2..16 - size / 2);
            let cy = rng.gen_range(size / 2..16 - size / 2);
            let got = ltm::moment_at(&image, cx, cy, &kernel).unwrap();
            let want = double_sum_moment(&image, cx, cy, &basis, m, n);
            assert!(
                (got - want).abs() < 1e-12,
                "N={size} ({m},{n}) at ({cx},{cy}): {got} vs {want}"
            );
        }
    }
}

/// Strength ranking resolved by explicit enumeration of all permutations in
/// lexicographic order; independent of the factorial-digit encoder.
fn rank_by_enumeration(values: &[f64]) -> usize {
    let k = values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    let mut rank = vec![0usize; k];
    for (pos, &idx) in order.iter().enumerate() {
        rank[idx] = pos;
    }
    (0..k)
        .permutations(k)
        .position(|perm| perm == rank)
        .expect("rank sequence is a permutation")
}

fn oracle_codes(image: &GrayImage, config: &LtmConfig) -> Vec<u16> {
    let basis = TchebichefBasis::new(config.kernel_size).unwrap();
    let size = config.kernel_size;
    let r = size / 2;
    let mut out = Vec::new();
    for cy in r..image.height() - r {
        for cx in r..image.width() - r {
            let anchor = image.get(cx, cy) as f64;
            let values: Vec<f64> = config
                .orders
                .iter()
                .zip(&config.weights)
                .map(|(&(p, q), &w)| {
                    let mut acc = 0.0;
                    for v in 0..size {
                        for u in 0..size {
                            let wk = basis.value(p, u) * basis.value(q, v);
                            acc += wk * (image.get(cx - r + u, cy - r + v) as f64 - anchor);
                        }
                    }
                    let mass = if (p, q) == (0, 0) { size as f64 } else { 0.0 };
                    let moment = acc + anchor * mass;
                    let moment = match config.value_mode {
                        ValueMode::Raw => moment,
                        ValueMode::Absolute => moment.abs(),
                    };
                    w * moment
                })
                .collect();
            out.push(rank_by_enumeration(&values) as u16);
        }
    }
    out
}

#[test]
fn ltm_image_matches_per_pixel_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // mirrors the worked example: 7x7 image, diagonal orders, heavy last weight
    let image = random_image(&mut rng, 7, 7);
    let config = LtmConfig::new(
        5,
        vec![(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)],
        vec![0.1, 1.0, 1.0, 1.0, 20.0],
    )
    .unwrap();
    let got = ltm::ltm_image(&image, &config).unwrap();
    assert_eq!((got.width(), got.height()), (3, 3));
    assert_eq!(got.codes(), oracle_codes(&image, &config).as_slice());

    // a second configuration with duplicate orders and absolute ranking
    let config = LtmConfig::new(
        3,
        vec![(0, 1), (1, 0), (2, 2), (2, 2)],
        vec![2.0, 2.0, 5.0, 0.5],
    )
    .unwrap()
    .with_value_mode(ValueMode::Absolute);
    let image = random_image(&mut rng, 12, 9);
    let got = ltm::ltm_image(&image, &config).unwrap();
    assert_eq!(got.codes(), oracle_codes(&image, &config).as_slice());
}
