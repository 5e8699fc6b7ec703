use std::path::{Path, PathBuf};

/// Errors raised while reading, writing or orchestrating.
#[derive(Debug, thiserror::Error)]
pub enum GaaError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Core {
        path: PathBuf,
        #[source]
        source: gaa_core::Error,
    },
    #[error(transparent)]
    Algorithm(#[from] gaa_core::Error),
    /// Bad configuration or arguments, detected before any work is done.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<GaaError>,
    },
}

pub type Result<T> = std::result::Result<T, GaaError>;

impl GaaError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn format(path: impl AsRef<Path>, msg: impl Into<String>) -> Self {
        Self::Format { path: path.as_ref().to_path_buf(), msg: msg.into() }
    }

    pub fn core(path: impl AsRef<Path>, source: gaa_core::Error) -> Self {
        Self::Core { path: path.as_ref().to_path_buf(), source }
    }

    /// True for errors a user fixes by changing configuration or arguments.
    pub fn is_validation(&self) -> bool {
        matches!(self, Self::Config(_) | Self::Locked(_))
    }
}

pub(crate) trait IoContext<T> {
    fn at(self, path: impl AsRef<Path>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl AsRef<Path>) -> Result<T> {
        self.map_err(|e| GaaError::io(path, e))
    }
}
