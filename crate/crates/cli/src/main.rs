use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use ltmtex::forest::ForestParams;
use ltmtex::ltm::LtmConfig;
use ltmtex_cli::spec::{
    lbp_variant, parse_orders, parse_value_mode, parse_weights, DatasetSource, Descriptor,
    EvalSpec, ExperimentSpec,
};
use ltmtex_cli::{compare, dump_kernels, extract, run};

#[derive(Parser)]
#[command(
    name = "ltmtex",
    version,
    about = "Texture classification toolkit: local Tchebichef moment descriptors, \
             LBP baselines, and a deterministic random-forest evaluation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LtmFlags {
    /// Odd moment kernel size (3..=15)
    #[arg(long, default_value_t = 5)]
    kernel_size: usize,
    /// Comma-separated moment orders, e.g. 00,01,10,11,20
    #[arg(long, default_value = "00,01,10,11,20")]
    orders: String,
    /// Comma-separated weights, one per order
    #[arg(long, default_value = "0.1,5,5,5,5")]
    weights: String,
    /// raw (signed moments) or absolute
    #[arg(long, default_value = "raw")]
    value_mode: String,
}

impl LtmFlags {
    fn config(&self) -> Result<LtmConfig> {
        let config = LtmConfig::new(
            self.kernel_size,
            parse_orders(&self.orders)?,
            parse_weights(&self.weights)?,
        )?;
        Ok(config.with_value_mode(parse_value_mode(&self.value_mode)?))
    }
}

#[derive(Args)]
struct ForestFlags {
    /// Decision trees per forest
    #[arg(long, default_value_t = 10)]
    trees: usize,
    /// Minimum samples needed to split a node
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    /// Optional depth cap
    #[arg(long)]
    max_depth: Option<usize>,
    /// Seed for bootstrapping, feature sampling, and fold shuffling
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl ForestFlags {
    fn params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            min_samples_split: self.min_samples_split,
            max_depth: self.max_depth,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write every moment kernel for a size as CSV plus a 3-significant-digit rendering
    DumpKernels {
        /// Odd kernel size (3..=15)
        #[arg(long)]
        size: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Extract a descriptor histogram (and optionally the code image) from one PGM image
    Extract {
        /// Input image (binary or ASCII PGM)
        #[arg(long)]
        image: PathBuf,
        /// ltm | olbp | cslbp | csldp | xcslbp
        #[arg(long, default_value = "ltm")]
        descriptor: String,
        #[command(flatten)]
        ltm: LtmFlags,
        /// CS-LBP comparison threshold on the 0-255 scale
        #[arg(long, default_value_t = 0.0)]
        cslbp_threshold: f64,
        /// Histogram output (CSV, bin,count)
        #[arg(long, default_value = "histogram.csv")]
        histogram_csv: PathBuf,
        /// Render the code image to this path (8-bit PGM)
        #[arg(long)]
        render: Option<PathBuf>,
    },
    /// Run a JSON experiment spec (single config or sweep) and write result tables
    Run {
        /// Experiment spec file
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Evaluate LTM and the four LBP baselines under identical settings
    Compare {
        /// Manifest directory or synthetic:<classes>:<per_class>:<seed>
        #[arg(long)]
        dataset: String,
        #[command(flatten)]
        ltm: LtmFlags,
        /// CS-LBP comparison threshold on the 0-255 scale
        #[arg(long, default_value_t = 0.0)]
        cslbp_threshold: f64,
        #[command(flatten)]
        forest: ForestFlags,
        /// cv:<folds> or split
        #[arg(long, default_value = "cv:10")]
        eval: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DumpKernels { size, out_dir } => {
            let files = dump_kernels(size, &out_dir)?;
            println!("wrote {} files to {}", files.len(), out_dir.display());
        }
        Command::Extract {
            image,
            descriptor,
            ltm,
            cslbp_threshold,
            histogram_csv,
            render,
        } => {
            let descriptor = match descriptor.as_str() {
                "ltm" => Descriptor::Ltm(ltm.config()?),
                kind => Descriptor::Lbp(lbp_variant(kind, cslbp_threshold)?),
            };
            extract(&image, &descriptor, &histogram_csv, render.as_deref())?;
            println!("wrote {}", histogram_csv.display());
            if let Some(render) = render {
                println!("wrote {}", render.display());
            }
        }
        Command::Run { spec, out_dir } => {
            let spec = ExperimentSpec::from_path(&spec)?;
            let outcome = run(&spec, &out_dir)?;
            for row in &outcome.rows {
                match &row.outcome {
                    Ok((mean, std)) => println!(
                        "experiment {}: {mean:.4} ± {std:.4}",
                        row.experiment
                    ),
                    Err(error) => println!("experiment {}: failed: {error}", row.experiment),
                }
            }
            println!("wrote {}", outcome.csv_path.display());
            println!("wrote {}", outcome.markdown_path.display());
        }
        Command::Compare {
            dataset,
            ltm,
            cslbp_threshold,
            forest,
            eval,
            out_dir,
        } => {
            let outcome = compare(
                &DatasetSource::parse(&dataset)?,
                &ltm.config()?,
                cslbp_threshold,
                &forest.params(),
                EvalSpec::parse(&eval)?,
                &out_dir,
            )?;
            for row in &outcome.rows {
                println!("{}: {:.4} ± {:.4}", row.descriptor, row.mean, row.std);
            }
            println!("wrote {}", outcome.csv_path.display());
            println!("wrote {}", outcome.markdown_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
