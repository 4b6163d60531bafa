use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pedi_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("io: {0}")]
    Stream(#[from] std::io::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("not a pedi dataset (bad magic)")]
    BadMagic,
    #[error("dataset version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("dataset truncated while reading {what} at byte {offset}")]
    Truncated { what: String, offset: usize },
    #[error("dataset header checksum mismatch")]
    HeaderChecksum,
    #[error("checksum mismatch in trajectory {trajectory} record {record}")]
    RecordChecksum { trajectory: usize, record: usize },
    #[error("checksum mismatch in trajectory {trajectory}")]
    TrajectoryChecksum { trajectory: usize },
    #[error("dataset header: {0}")]
    Header(String),
    #[error("{0} unexpected trailing bytes after the last trajectory")]
    TrailingBytes(usize),
    #[error("collection gave up after {attempts} episodes with {collected} of {wanted} successful")]
    TooManyFailures { attempts: usize, collected: usize, wanted: usize },
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
