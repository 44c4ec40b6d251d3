use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("vertex {0} is not in the conflict graph")]
    UnknownVertex(String),

    #[error("improper coloring: vertices {0} and {1} are adjacent and share color {2}")]
    ImproperColoring(usize, usize, usize),

    #[error("graph has {vertices} vertices, exhaustive search is limited to {limit}")]
    GraphTooLarge { vertices: usize, limit: usize },

    #[error("field GF(2^{bits}) has {available} distinct nonzero points, {needed} required")]
    FieldTooSmall {
        bits: u32,
        needed: usize,
        available: usize,
    },

    #[error("no payload symbol for file {file} packet {packet}")]
    MissingPayload { file: usize, packet: usize },

    #[error("user {user} cannot decode: {unknowns} unknown classes against {rows} transmissions")]
    NotDecodable {
        user: usize,
        unknowns: usize,
        rows: usize,
    },

    #[error("user {user} decoded file {file} packet {packet} incorrectly")]
    DecodeMismatch {
        user: usize,
        file: usize,
        packet: usize,
    },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when a user failed to recover its requested packets.
    pub fn is_decode_failure(&self) -> bool {
        match self {
            Self::NotDecodable { .. } | Self::DecodeMismatch { .. } => true,
            Self::Trial { source, .. } => source.is_decode_failure(),
            _ => false,
        }
    }
}
