use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("decode failure: {0}")]
    Decode(String),
    #[error("audit failure: {0}")]
    Audit(String),
    #[error("{0}")]
    Core(cachecoder::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<cachecoder::Error> for CliError {
    fn from(e: cachecoder::Error) -> CliError {
        use cachecoder::Error as E;
        match e {
            E::InvalidParams(msg) => CliError::Invalid(msg),
            E::OutOfRegion(_)
            | E::NoRoot(_)
            | E::InvalidField(_)
            | E::DegenerateField(_)
            | E::CounterExhausted(_) => CliError::Invalid(e.to_string()),
            E::SingularDecode { .. }
            | E::MissingKey { .. }
            | E::IncompleteFile { .. }
            | E::NonOrthogonalityFailure => CliError::Decode(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Decode(_) => 3,
            CliError::Audit(_) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}
