//! Texture descriptors built on discrete orthonormal Tchebichef polynomials,
//! a family of LBP baselines, and a small self-contained random-forest
//! evaluation harness.
//!
//! The pipeline mirrors the usual texture-classification setup:
//!
//! 1. [`tchebichef`] generates the orthonormal polynomial basis and the
//!    separable N×N moment kernels.
//! 2. [`ltm`] computes weighted local moments per pixel, encodes their rank
//!    ordering as a Lehmer code, and histograms the resulting code image.
//! 3. [`lbp`] provides four local-binary-pattern baselines over the same
//!    histogram feature interface.
//! 4. [`forest`] trains deterministic random forests and evaluates them with
//!    k-fold cross-validation or a fixed train/test split.
//! 5. [`dataset`] decodes PGM images, loads manifest-driven splits (Outex
//!    style), and generates synthetic textures for desk-scale experiments.
//!
//! Everything is deterministic under explicit seeds; no global RNG state is
//! consulted anywhere.

pub mod dataset;
pub mod feature;
pub mod forest;
pub mod lbp;
pub mod ltm;
pub mod tchebichef;

pub use dataset::GrayImage;
pub use feature::FeatureVector;
