use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("alpha schedule has {len} entries, round {t} requested")]
    ScheduleExhausted { t: usize, len: usize },

    #[error("alpha schedule must be non-increasing: {0}")]
    IncreasingSchedule(String),

    #[error("the first gradient g0 must be nonzero")]
    InvalidFirstGradient,

    #[error("gradient at round {t} is not finite ({value})")]
    NonFiniteGradient { t: usize, value: f64 },

    #[error("learner state is degenerate: {0}")]
    DegenerateState(String),

    #[error("round {t} exceeds the oracle horizon {horizon}; use the discounted learner instead")]
    OracleOverflow { t: usize, horizon: usize },

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("singular parameters: {0}")]
    SingularParameter(String),

    #[error("point outside the lemma domain: {0}")]
    OutOfDomain(String),

    #[error("per-round inequality not applicable at round {t}: clipping binds")]
    InequalityNotApplicable { t: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sweep grid has no regime-coherent points")]
    EmptyGrid,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
