use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{name} is not Hermitian positive semi-definite: {detail}")]
    NotPsd { name: String, detail: String },

    #[error(
        "radar budget infeasible: P_max = {p_max:.6e} W but the SINR constraints alone need {min_required:.6e} W"
    )]
    RadarInfeasible { p_max: f64, min_required: f64 },

    #[error("outer iteration {iteration}: {source}")]
    AoRadarStep {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
