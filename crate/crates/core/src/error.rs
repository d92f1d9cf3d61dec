use std::path::PathBuf;

use crate::backends::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A backend call failed; `context` names the pipeline step.
    #[error("{}{source}", context.as_deref().map(|c| format!("{c}: ")).unwrap_or_default())]
    Backend {
        context: Option<String>,
        #[source]
        source: BackendError,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A record failed schema validation.
    #[error("record `{record}`: invalid field `{field}`: {reason}")]
    Schema {
        record: String,
        field: String,
        reason: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl From<BackendError> for Error {
    fn from(source: BackendError) -> Self {
        Error::Backend {
            context: None,
            source,
        }
    }
}

impl Error {
    pub(crate) fn backend(context: impl Into<String>, source: BackendError) -> Self {
        Error::Backend {
            context: Some(context.into()),
            source,
        }
    }

    /// Prefixes the message with `ctx`, keeping the error category.
    pub fn context(self, ctx: impl Into<String>) -> Self {
        let ctx = ctx.into();
        match self {
            Error::Backend { context, source } => Error::Backend {
                context: Some(match context {
                    Some(c) => format!("{ctx}: {c}"),
                    None => ctx,
                }),
                source,
            },
            Error::Precondition(m) => Error::Precondition(format!("{ctx}: {m}")),
            Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
