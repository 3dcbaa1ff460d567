use std::io;
use std::path::{Path, PathBuf};

/// Errors of the IO, service and command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] d2wgan_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {reason}", path.display())]
    Audio { path: PathBuf, reason: String },

    #[error("{}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Self::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime
    /// failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Self::Config(_) | Self::Parse { .. } => true,
            Self::Core(e) => matches!(
                e,
                d2wgan_core::Error::InvalidParameter { .. }
                    | d2wgan_core::Error::NyquistViolation { .. }
                    | d2wgan_core::Error::EvenTapCount(_)
                    | d2wgan_core::Error::ConfigHashMismatch { .. }
                    | d2wgan_core::Error::FormatVersion { .. }
                    | d2wgan_core::Error::OutOfRange { .. }
                    | d2wgan_core::Error::Empty(_)
            ),
            _ => false,
        }
    }
}

/// Attach a path to IO errors.
pub(crate) trait IoContext<T> {
    fn at(self, path: impl AsRef<Path>) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: impl AsRef<Path>) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}
