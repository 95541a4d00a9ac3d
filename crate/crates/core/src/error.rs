use crate::gateway::GatewayError;
use crate::vault::VaultError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Vault(#[from] VaultError),

    #[error(transparent)]
    Gateway(#[from] GatewayError),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("archetype `{0}` is not invocable")]
    NotInvocable(String),

    #[error("no invocable archetype in registry")]
    NoInvocableArchetype,

    #[error("constitution scoring rejected for {interaction_id}: {reason}")]
    ScoreRejected {
        interaction_id: String,
        reason: String,
    },

    #[error("skill `{0}` has no reflexion episodes to learn from")]
    NoEpisodes(String),

    #[error("an improve run is already in progress for skill `{0}`")]
    ImproveInProgress(String),

    #[error("revision {0} is blocked: it would reset learning history without a human-authorised reset")]
    RevisionBlocked(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("malformed {what}: {message}")]
    Parse { what: &'static str, message: String },
}

impl Error {
    pub(crate) fn parse(what: &'static str, message: impl Into<String>) -> Self {
        Error::Parse {
            what,
            message: message.into(),
        }
    }
}
