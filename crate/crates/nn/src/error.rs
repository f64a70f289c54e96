use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{layer}: {axis} extent mismatch (expected {expected}, found {found})")]
    Shape {
        layer: String,
        axis: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{layer}: {message}")]
    Config { layer: String, message: String },

    #[error("training diverged: non-finite gradient in parameter `{tag}`")]
    Divergence { tag: String },

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NnError {
    pub(crate) fn shape(layer: &str, axis: &'static str, expected: usize, found: usize) -> Self {
        NnError::Shape {
            layer: layer.to_string(),
            axis,
            expected,
            found,
        }
    }

    pub(crate) fn config(layer: &str, message: impl Into<String>) -> Self {
        NnError::Config {
            layer: layer.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, NnError>;
