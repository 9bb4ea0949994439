//! Library surface of the `ltmtex` command-line tool, split out so the
//! commands can be driven directly from integration tests.

pub mod commands;
pub mod spec;

pub use commands::{compare, dump_kernels, extract, run};
pub use spec::{DatasetSource, Descriptor, EvalSpec, ExperimentSpec};
