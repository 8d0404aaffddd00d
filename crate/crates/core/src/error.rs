use std::path::PathBuf;

use thiserror::Error;

/// Certificate layer in which a degenerate design was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    State,
    Lifted,
    Regression,
    Target,
}

impl std::fmt::Display for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Layer::State => "state",
            Layer::Lifted => "lifted",
            Layer::Regression => "regression",
            Layer::Target => "target",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("simulation diverged at step {step}: state {state:?}")]
    Divergence { step: usize, state: Vec<f64> },

    #[error("degenerate design in {layer} layer: {reason}")]
    Degenerate { layer: Layer, reason: String },

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn degenerate(layer: Layer, reason: impl Into<String>) -> Self {
        Error::Degenerate {
            layer,
            reason: reason.into(),
        }
    }

    /// Tags a degenerate-design error with the layer it surfaced in.
    pub(crate) fn in_layer(self, layer: Layer) -> Self {
        match self {
            Error::Degenerate { reason, .. } => Error::Degenerate { layer, reason },
            other => other,
        }
    }
}
