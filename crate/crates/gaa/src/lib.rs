//! Dataset IO, file formats, the stage runner and the `gaa` command line
//! around [`gaa_core`].

pub mod error;
pub mod io;
pub mod model_file;
pub mod overlay;
pub mod pipeline;

pub use error::{GaaError, Result};
pub use pipeline::{Pipeline, PipelineConfig, RunReport, Stage};
