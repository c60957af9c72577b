use std::io;
use std::path::PathBuf;

use relgraph_core::config::ConfigInvalid;
use relgraph_core::corpus::{DatasetError, LayoutError, ParseError};
use relgraph_core::eval::{PipelineError, SplitError, SynthError};
use relgraph_core::gnn::GnnError;
use relgraph_core::graph::GraphError;
use relgraph_core::scorer::{ExtractError, HeadError};
use thiserror::Error;

/// Every failure a subcommand can report, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigInvalid),
    #[error("corpus_ingest: {0}")]
    Dataset(#[from] DatasetError),
    #[error("corpus_ingest: {0}")]
    Parse(#[from] ParseError),
    #[error("corpus_ingest: {0}")]
    Layout(#[from] LayoutError),
    #[error("page_graph: {0}")]
    Graph(#[from] GraphError),
    #[error("graph_net: {0}")]
    Gnn(#[from] GnnError),
    #[error("pair_scorer: {0}")]
    Head(#[from] HeadError),
    #[error("pair_scorer: {0}")]
    Extract(#[from] ExtractError),
    #[error("eval_harness: {0}")]
    Pipeline(#[from] PipelineError),
    #[error("eval_harness: {0}")]
    Split(#[from] SplitError),
    #[error("eval_harness: {0}")]
    Synth(#[from] SynthError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    BadInput { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
