//! Histogram feature vectors shared by the descriptor modules.

use serde::{Deserialize, Serialize};

/// A histogram of descriptor codes.
///
/// Each bin counts how often one code occurred over the valid region of a
/// descriptor image. The bins are used directly as the feature space for
/// classification, one dimension per bin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    bins: Vec<u64>,
}

impl FeatureVector {
    pub fn from_bins(bins: Vec<u64>) -> Self {
        Self { bins }
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    /// Total mass, i.e. the number of pixels that were histogrammed.
    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Bins as floats, the shape the forest trainer consumes.
    pub fn to_features(&self) -> Vec<f64> {
        self.bins.iter().map(|&b| b as f64).collect()
    }
}
