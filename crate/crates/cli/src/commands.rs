//! The four subcommands. Every output file is written with stable
//! formatting so reruns with identical inputs are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use ltmtex::dataset::{self, DatasetSplit};
use ltmtex::feature::FeatureVector;
use ltmtex::forest::{self, EvalReport, ForestParams};
use ltmtex::lbp::{self, LbpVariant};
use ltmtex::ltm::{self, LtmConfig};
use ltmtex::tchebichef::all_kernels;
use ltmtex::GrayImage;

use crate::spec::{DatasetSource, Descriptor, EvalSpec, ExperimentSpec, SweepRow};

// ---------------------------------------------------------------------------
// shared formatting
// ---------------------------------------------------------------------------

/// `M00 M01 M10 ...`; double-digit orders get an explicit separator.
pub fn format_orders(orders: &[(usize, usize)]) -> String {
    orders
        .iter()
        .map(|&(p, q)| {
            if p < 10 && q < 10 {
                format!("M{p}{q}")
            } else {
                format!("M{p}-{q}")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Plain space-separated weights, trailing zeros trimmed (`0.1 5 5 5 20`).
pub fn format_weights(weights: &[f64]) -> String {
    weights
        .iter()
        .map(|w| w.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

// ---------------------------------------------------------------------------
// dump-kernels
// ---------------------------------------------------------------------------

fn order_tag(size: usize, m: usize, n: usize) -> String {
    if size <= 10 {
        format!("M{m}{n}")
    } else {
        format!("M{m:02}{n:02}")
    }
}

// drop the sign off IEEE negative zero so CSVs read 0.000000
fn unsigned_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn format_sig3(v: f64) -> String {
    let v = unsigned_zero(v);
    if v == 0.0 {
        return "0".to_string();
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (2 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Writes one CSV per moment kernel (6 decimals), an index of the files, and
/// a single text rendering of every mask at 3 significant digits.
pub fn dump_kernels(size: usize, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let kernels = all_kernels(size)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let mut index = String::from("file,order_x,order_y,degree\n");
    let mut rendering = String::new();
    let mut written = Vec::new();
    for kernel in &kernels {
        let tag = order_tag(size, kernel.order_x(), kernel.order_y());
        let file_name = format!("{tag}.csv");
        let mut csv = String::new();
        for y in 0..size {
            let row: Vec<String> = (0..size)
                .map(|x| format!("{:.6}", unsigned_zero(kernel.value(x, y))))
                .collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        let path = out_dir.join(&file_name);
        write_file(&path, &csv)?;
        written.push(path);

        let _ = writeln!(
            index,
            "{file_name},{},{},{}",
            kernel.order_x(),
            kernel.order_y(),
            kernel.order_x() + kernel.order_y()
        );

        let _ = writeln!(rendering, "{tag}");
        for y in 0..size {
            let row: Vec<String> = (0..size).map(|x| format_sig3(kernel.value(x, y))).collect();
            let _ = writeln!(rendering, "{}", row.join(" "));
        }
        rendering.push('\n');
    }

    let index_path = out_dir.join("index.csv");
    write_file(&index_path, &index)?;
    written.push(index_path);
    let rendering_path = out_dir.join("masks_3sig.txt");
    write_file(&rendering_path, &rendering)?;
    written.push(rendering_path);
    Ok(written)
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

fn histogram_csv(hist: &FeatureVector) -> String {
    let mut out = String::from("bin,count\n");
    for (bin, &count) in hist.bins().iter().enumerate() {
        let _ = writeln!(out, "{bin},{count}");
    }
    out
}

/// Extracts one descriptor histogram from one image; optionally renders the
/// code image as 8-bit PGM. LTM renders need `k <= 5` so codes fit a byte;
/// `k = 5` codes are stretched by 2 (0..=238) for visibility.
pub fn extract(
    image_path: &Path,
    descriptor: &Descriptor,
    histogram_path: &Path,
    render_path: Option<&Path>,
) -> Result<()> {
    let image = dataset::load_image(image_path)?;
    match descriptor {
        Descriptor::Ltm(config) => {
            let codes = ltm::ltm_image(&image, config)?;
            write_file(histogram_path, &histogram_csv(&ltm::histogram(&codes)))?;
            if let Some(path) = render_path {
                let k = codes.moment_count();
                if k > 5 {
                    bail!("rendering requires at most 5 moments so codes fit one byte, got {k}");
                }
                let stretch: u16 = if k == 5 { 2 } else { 1 };
                let rendered = GrayImage::from_fn(codes.width(), codes.height(), |x, y| {
                    (codes.code(x, y) * stretch) as u8
                });
                dataset::save_image(path, &rendered)?;
            }
        }
        Descriptor::Lbp(variant) => {
            let codes = lbp::lbp_image(&image, *variant)?;
            write_file(histogram_path, &histogram_csv(&lbp::histogram(&codes)))?;
            if let Some(path) = render_path {
                let rendered =
                    GrayImage::from_fn(codes.width(), codes.height(), |x, y| codes.code(x, y));
                dataset::save_image(path, &rendered)?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluation shared by run and compare
// ---------------------------------------------------------------------------

fn extract_features(
    samples: &[(GrayImage, usize)],
    descriptor: &Descriptor,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut features = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for (image, label) in samples {
        features.push(descriptor.extract(image)?.to_features());
        labels.push(*label);
    }
    Ok((features, labels))
}

fn evaluate(
    split: &DatasetSplit,
    descriptor: &Descriptor,
    params: &ForestParams,
    eval: EvalSpec,
) -> Result<EvalReport> {
    match eval {
        EvalSpec::CrossValidation { folds } => {
            let mut pooled: Vec<(GrayImage, usize)> = split.train.clone();
            pooled.extend(split.test.iter().cloned());
            let (features, labels) = extract_features(&pooled, descriptor)?;
            Ok(forest::cross_validate(&features, &labels, params, folds)?)
        }
        EvalSpec::FixedSplit => {
            let (train_f, train_l) = extract_features(&split.train, descriptor)?;
            let (test_f, test_l) = extract_features(&split.test, descriptor)?;
            Ok(forest::evaluate_split(
                &train_f, &train_l, &test_f, &test_l, params,
            )?)
        }
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// One line of the results table. `experiment` is the 1-based position in
/// the sweep; the labels are absent for LBP rows.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub experiment: usize,
    pub orders: Option<Vec<(usize, usize)>>,
    pub weights: Option<Vec<f64>>,
    pub outcome: Result<(f64, f64), String>,
}

impl RunRow {
    fn orders_text(&self) -> String {
        self.orders
            .as_deref()
            .map_or_else(|| "-".to_string(), format_orders)
    }

    fn weights_text(&self) -> String {
        self.weights
            .as_deref()
            .map_or_else(|| "-".to_string(), format_weights)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    /// Rows sorted by mean accuracy descending; failures last.
    pub rows: Vec<RunRow>,
    pub csv_path: PathBuf,
    pub markdown_path: PathBuf,
}

/// Runs a spec: a single configuration or every sweep row, each evaluated
/// with an independently trained forest. Row failures are recorded in the
/// table and do not abort the run.
pub fn run(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunOutcome> {
    spec.validate()?;
    let descriptor = spec.descriptor()?;
    let eval = spec.eval_spec()?;
    let split = spec.dataset_source()?.load()?;
    let sweep = spec.sweep_rows()?;

    // (experiment number, row label, descriptor or per-row failure)
    let jobs: Vec<(usize, Option<SweepRow>, Result<Descriptor, String>)> = match (&descriptor, sweep)
    {
        (Descriptor::Ltm(base), Some(rows)) => rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let built = LtmConfig::new(base.kernel_size, row.orders.clone(), row.weights.clone())
                    .map(|c| Descriptor::Ltm(c.with_value_mode(base.value_mode)))
                    .map_err(|e| e.to_string());
                (i + 1, Some(row), built)
            })
            .collect(),
        (d, None) => {
            let row = match d {
                Descriptor::Ltm(c) => Some(SweepRow {
                    orders: c.orders.clone(),
                    weights: c.weights.clone(),
                }),
                Descriptor::Lbp(_) => None,
            };
            vec![(1, row, Ok(d.clone()))]
        }
        (Descriptor::Lbp(_), Some(_)) => unreachable!("validated: sweep requires ltm"),
    };

    let mut rows: Vec<RunRow> = jobs
        .into_par_iter()
        .map(|(experiment, row, built)| {
            let outcome = built.and_then(|d| {
                evaluate(&split, &d, &spec.forest, eval)
                    .map(|report| (report.mean, report.std))
                    .map_err(|e| format!("{e:#}"))
            });
            RunRow {
                experiment,
                orders: row.as_ref().map(|r| r.orders.clone()),
                weights: row.map(|r| r.weights),
                outcome,
            }
        })
        .collect();

    rows.sort_by(|a, b| match (&a.outcome, &b.outcome) {
        (Ok((ma, _)), Ok((mb, _))) => mb
            .total_cmp(ma)
            .then_with(|| a.experiment.cmp(&b.experiment)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.experiment.cmp(&b.experiment),
    });

    let mut csv = String::from("experiment,orders,weights,mean,std,error\n");
    for row in &rows {
        match &row.outcome {
            Ok((mean, std)) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{mean:.4},{std:.4},",
                    row.experiment,
                    csv_field(&row.orders_text()),
                    csv_field(&row.weights_text()),
                );
            }
            Err(error) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},,,{}",
                    row.experiment,
                    csv_field(&row.orders_text()),
                    csv_field(&row.weights_text()),
                    csv_field(error),
                );
            }
        }
    }
    if let Some(best) = rows.iter().find(|r| r.outcome.is_ok()) {
        let (mean, std) = best.outcome.as_ref().expect("found ok row");
        let _ = writeln!(
            csv,
            "best,{},{},{mean:.4},{std:.4},",
            csv_field(&best.orders_text()),
            csv_field(&best.weights_text()),
        );
    }

    let mut md = format!(
        "# Results: {} on {}\n\n| Experiment | Orders | Weights | Accuracy |\n|---|---|---|---|\n",
        descriptor.name(),
        split.name,
    );
    for row in &rows {
        let accuracy = match &row.outcome {
            Ok((mean, std)) => format!("{mean:.4} ± {std:.4}"),
            Err(error) => format!("failed: {error}"),
        };
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} |",
            row.experiment,
            row.orders_text(),
            row.weights_text(),
            accuracy
        );
    }
    if let Some(best) = rows.iter().find(|r| r.outcome.is_ok()) {
        let (mean, std) = best.outcome.as_ref().expect("found ok row");
        let _ = writeln!(
            md,
            "\n**Best:** experiment {} — {}, weights {}, accuracy {mean:.4} ± {std:.4}",
            best.experiment,
            best.orders_text(),
            best.weights_text(),
        );
    }

    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_dir.join("results.csv");
    let markdown_path = out_dir.join("results.md");
    write_file(&csv_path, &csv)?;
    write_file(&markdown_path, &md)?;
    Ok(RunOutcome {
        rows,
        csv_path,
        markdown_path,
    })
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub descriptor: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug)]
pub struct CompareOutcome {
    /// LTM first, then the LBP baselines in fixed order.
    pub rows: Vec<CompareRow>,
    pub csv_path: PathBuf,
    pub markdown_path: PathBuf,
}

/// Evaluates the LTM configuration and the four LBP baselines under the same
/// dataset, forest parameters, and evaluation protocol.
pub fn compare(
    source: &DatasetSource,
    ltm_config: &LtmConfig,
    cslbp_threshold: f64,
    params: &ForestParams,
    eval: EvalSpec,
    out_dir: &Path,
) -> Result<CompareOutcome> {
    ltm_config.validate().context("ltm")?;
    let split = source.load()?;
    let descriptors = [
        Descriptor::Ltm(ltm_config.clone()),
        Descriptor::Lbp(LbpVariant::Olbp),
        Descriptor::Lbp(LbpVariant::CsLbp {
            threshold: cslbp_threshold,
        }),
        Descriptor::Lbp(LbpVariant::CsLdp),
        Descriptor::Lbp(LbpVariant::XcsLbp),
    ];

    let rows: Vec<CompareRow> = descriptors
        .par_iter()
        .map(|d| {
            evaluate(&split, d, params, eval).map(|report| CompareRow {
                descriptor: d.name().to_string(),
                mean: report.mean,
                std: report.std,
            })
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("descriptor,mean,std\n");
    for row in &rows {
        let _ = writeln!(csv, "{},{:.4},{:.4}", row.descriptor, row.mean, row.std);
    }

    let mut md = format!(
        "# Descriptor comparison on {}\n\nLTM: {} with weights {}\n\n| Descriptor | Accuracy |\n|---|---|\n",
        split.name,
        format_orders(&ltm_config.orders),
        format_weights(&ltm_config.weights),
    );
    for row in &rows {
        let _ = writeln!(md, "| {} | {:.4} ± {:.4} |", row.descriptor, row.mean, row.std);
    }

    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_dir.join("comparison.csv");
    let markdown_path = out_dir.join("comparison.md");
    write_file(&csv_path, &csv)?;
    write_file(&markdown_path, &md)?;
    Ok(CompareOutcome {
        rows,
        csv_path,
        markdown_path,
    })
}
