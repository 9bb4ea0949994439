//! Experiment specifications: dataset sources, evaluation modes, descriptor
//! selection, and the JSON experiment file driving `run`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use ltmtex::dataset::{self, DatasetSplit, SYNTHETIC_IMAGE_SIZE};
use ltmtex::feature::FeatureVector;
use ltmtex::forest::ForestParams;
use ltmtex::lbp::{self, LbpVariant};
use ltmtex::ltm::{self, LtmConfig, ValueMode};
use ltmtex::GrayImage;

/// The discrete weight pool random sweeps draw from. Covers the 0.1..20
/// range in the steps the experiment tables actually use, which keeps sweeps
/// enumerable and reproducible.
pub const WEIGHT_CANDIDATES: [f64; 8] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0];

/// Where samples come from: a manifest directory or the built-in generator
/// (`synthetic:<classes>:<per_class>:<seed>`, 64x64 images).
#[derive(Debug, Clone)]
pub enum DatasetSource {
    Synthetic {
        classes: usize,
        per_class: usize,
        seed: u64,
    },
    Directory(PathBuf),
}

impl DatasetSource {
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(rest) = text.strip_prefix("synthetic:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                bail!("dataset: expected synthetic:<classes>:<per_class>:<seed>, got {text:?}");
            }
            let field = |i: usize, what: &str| {
                parts[i]
                    .parse::<u64>()
                    .map_err(|_| anyhow!("dataset: bad synthetic {what} {:?}", parts[i]))
            };
            Ok(DatasetSource::Synthetic {
                classes: field(0, "class count")? as usize,
                per_class: field(1, "per-class count")? as usize,
                seed: field(2, "seed")?,
            })
        } else {
            Ok(DatasetSource::Directory(PathBuf::from(text)))
        }
    }

    pub fn load(&self) -> Result<DatasetSplit> {
        match self {
            DatasetSource::Synthetic {
                classes,
                per_class,
                seed,
            } => dataset::generate_synthetic(*classes, *per_class, SYNTHETIC_IMAGE_SIZE, *seed)
                .context("generating synthetic dataset"),
            DatasetSource::Directory(dir) => {
                dataset::load_split(dir).with_context(|| format!("loading {}", dir.display()))
            }
        }
    }
}

/// Evaluation protocol: `cv:<folds>` pools train and test and cross-validates;
/// `split` trains on the train manifest and tests on the test manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSpec {
    CrossValidation { folds: usize },
    FixedSplit,
}

impl EvalSpec {
    pub fn parse(text: &str) -> Result<Self> {
        if text == "split" {
            return Ok(EvalSpec::FixedSplit);
        }
        if let Some(folds) = text.strip_prefix("cv:") {
            let folds: usize = folds
                .parse()
                .map_err(|_| anyhow!("eval: bad fold count in {text:?}"))?;
            return Ok(EvalSpec::CrossValidation { folds });
        }
        bail!("eval: expected \"cv:<folds>\" or \"split\", got {text:?}")
    }
}

/// A feature extractor choice.
#[derive(Debug, Clone)]
pub enum Descriptor {
    Ltm(LtmConfig),
    Lbp(LbpVariant),
}

impl Descriptor {
    pub fn name(&self) -> &'static str {
        match self {
            Descriptor::Ltm(_) => "LTM",
            Descriptor::Lbp(v) => v.name(),
        }
    }

    pub fn extract(&self, image: &GrayImage) -> Result<FeatureVector> {
        match self {
            Descriptor::Ltm(config) => Ok(ltm::extract_ltm(image, config)?),
            Descriptor::Lbp(variant) => Ok(lbp::extract_lbp(image, *variant)?),
        }
    }
}

/// Builds the LBP variant named on the command line or in a spec file.
pub fn lbp_variant(kind: &str, cslbp_threshold: f64) -> Result<LbpVariant> {
    match kind {
        "olbp" => Ok(LbpVariant::Olbp),
        "cslbp" => Ok(LbpVariant::CsLbp {
            threshold: cslbp_threshold,
        }),
        "csldp" => Ok(LbpVariant::CsLdp),
        "xcslbp" => Ok(LbpVariant::XcsLbp),
        other => bail!("descriptor: expected ltm|olbp|cslbp|csldp|xcslbp, got {other:?}"),
    }
}

pub fn parse_value_mode(text: &str) -> Result<ValueMode> {
    match text {
        "raw" => Ok(ValueMode::Raw),
        "absolute" => Ok(ValueMode::Absolute),
        other => bail!("value-mode: expected raw|absolute, got {other:?}"),
    }
}

/// Parses an order list like `00,01,10,11,20`. Each token is an optional `M`
/// followed by either two digits or `p-q` (needed once orders pass 9).
pub fn parse_orders(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|raw| {
            let token = raw.trim();
            let body = token
                .strip_prefix('M')
                .or_else(|| token.strip_prefix('m'))
                .unwrap_or(token);
            if let Some((p, q)) = body.split_once('-') {
                let p = p.parse().map_err(|_| anyhow!("orders: bad token {token:?}"))?;
                let q = q.parse().map_err(|_| anyhow!("orders: bad token {token:?}"))?;
                return Ok((p, q));
            }
            let digits: Vec<char> = body.chars().collect();
            if digits.len() == 2 && digits.iter().all(|c| c.is_ascii_digit()) {
                Ok((
                    digits[0].to_digit(10).unwrap() as usize,
                    digits[1].to_digit(10).unwrap() as usize,
                ))
            } else {
                bail!("orders: bad token {token:?} (expected e.g. 01 or 10-2)")
            }
        })
        .collect()
}

pub fn parse_weights(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|raw| {
            let token = raw.trim();
            token
                .parse::<f64>()
                .map_err(|_| anyhow!("weights: bad value {token:?}"))
        })
        .collect()
}

/// One sweep entry: an order list and matching weights.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRow {
    pub orders: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
}

/// Either explicit rows or `random:<count>:<seed>`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SweepSpec {
    Random(String),
    Rows(Vec<SweepRow>),
}

/// The JSON experiment file consumed by `run`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dataset: String,
    pub descriptor: String,
    #[serde(default)]
    pub ltm: Option<LtmConfig>,
    #[serde(default = "default_eval")]
    pub eval: String,
    #[serde(default)]
    pub forest: ForestParams,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub cslbp_threshold: f64,
}

fn default_eval() -> String {
    "cv:10".to_string()
}

impl ExperimentSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading spec file {}", path.display()))?;
        let spec: ExperimentSpec = serde_json::from_str(&text)
            .with_context(|| format!("parsing spec file {}", path.display()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.descriptor.as_str() {
            "ltm" => {
                if self.ltm.is_none() {
                    bail!("ltm: required when descriptor is \"ltm\"");
                }
            }
            "olbp" | "cslbp" | "csldp" | "xcslbp" => {
                if self.ltm.is_some() {
                    bail!("ltm: only valid when descriptor is \"ltm\"");
                }
                if self.sweep.is_some() {
                    bail!("sweep: only valid when descriptor is \"ltm\"");
                }
            }
            other => bail!("descriptor: expected ltm|olbp|cslbp|csldp|xcslbp, got {other:?}"),
        }
        if let Some(config) = &self.ltm {
            config.validate().context("ltm")?;
        }
        self.eval_spec()?;
        self.dataset_source()?;
        Ok(())
    }

    pub fn descriptor(&self) -> Result<Descriptor> {
        match self.descriptor.as_str() {
            "ltm" => {
                let config = self
                    .ltm
                    .clone()
                    .ok_or_else(|| anyhow!("ltm: required when descriptor is \"ltm\""))?;
                config.validate().context("ltm")?;
                Ok(Descriptor::Ltm(config))
            }
            kind => Ok(Descriptor::Lbp(lbp_variant(kind, self.cslbp_threshold)?)),
        }
    }

    pub fn eval_spec(&self) -> Result<EvalSpec> {
        EvalSpec::parse(&self.eval)
    }

    pub fn dataset_source(&self) -> Result<DatasetSource> {
        DatasetSource::parse(&self.dataset)
    }

    /// Expands the sweep into concrete rows; `None` when the spec runs a
    /// single configuration.
    pub fn sweep_rows(&self) -> Result<Option<Vec<SweepRow>>> {
        let Some(sweep) = &self.sweep else {
            return Ok(None);
        };
        match sweep {
            SweepSpec::Rows(rows) => {
                if rows.is_empty() {
                    bail!("sweep: row list is empty");
                }
                Ok(Some(rows.clone()))
            }
            SweepSpec::Random(text) => {
                let rest = text
                    .strip_prefix("random:")
                    .ok_or_else(|| anyhow!("sweep: expected \"random:<count>:<seed>\" or a row list, got {text:?}"))?;
                let (count, seed) = rest
                    .split_once(':')
                    .ok_or_else(|| anyhow!("sweep: expected \"random:<count>:<seed>\", got {text:?}"))?;
                let count: usize = count
                    .parse()
                    .map_err(|_| anyhow!("sweep: bad count in {text:?}"))?;
                let seed: u64 = seed
                    .parse()
                    .map_err(|_| anyhow!("sweep: bad seed in {text:?}"))?;
                if count == 0 {
                    bail!("sweep: count must be positive");
                }
                let base = self
                    .ltm
                    .as_ref()
                    .ok_or_else(|| anyhow!("sweep: requires an ltm configuration"))?;
                Ok(Some(random_rows(
                    count,
                    seed,
                    base.kernel_size,
                    base.moment_count(),
                )))
            }
        }
    }
}

/// Draws `count` random (orders, weights) rows. Orders are drawn with
/// replacement over all pairs for the kernel size (repeats are legitimate
/// configurations); weights come from [`WEIGHT_CANDIDATES`].
pub fn random_rows(count: usize, seed: u64, kernel_size: usize, k: usize) -> Vec<SweepRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let orders = (0..k)
                .map(|_| (rng.gen_range(0..kernel_size), rng.gen_range(0..kernel_size)))
                .collect();
            let weights = (0..k)
                .map(|_| WEIGHT_CANDIDATES[rng.gen_range(0..WEIGHT_CANDIDATES.len())])
                .collect();
            SweepRow { orders, weights }
        })
        .collect()
}
