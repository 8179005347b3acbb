use rdreg::Error;
use thiserror::Error;

/// Pipeline stage an error surfaced in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Design,
    Simulate,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(Error, Stage),
    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
    #[error("{0}")]
    Checks(String),
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_CONDITION: i32 = 4;
pub const EXIT_SIMULATION: i32 = 5;
pub const EXIT_OUTPUT: i32 = 6;
pub const EXIT_NUMERICAL: i32 = 7;
pub const EXIT_CHECKS: i32 = 8;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Output(_) => EXIT_OUTPUT,
            CliError::Checks(_) => EXIT_CHECKS,
            CliError::Core(e, stage) => match e {
                Error::NotFeasibleUpToNMax { .. } | Error::NotHurwitz { .. } | Error::AlphaTooSmall { .. } => {
                    EXIT_INFEASIBLE
                }
                Error::Uncontrollable { .. } | Error::IllConditioned { .. } | Error::CauchyConditionFailed { .. } => {
                    EXIT_CONDITION
                }
                Error::Instability { .. }
                | Error::IncompatibleInitialCondition(_)
                | Error::IntegrationFailure(_)
                | Error::WindowTooShort(_) => EXIT_SIMULATION,
                _ if *stage == Stage::Simulate => EXIT_SIMULATION,
                Error::InvalidArgument(_)
                | Error::NonPositiveDiffusion { .. }
                | Error::NegativeReaction { .. }
                | Error::ResolutionTooCoarse { .. }
                | Error::DimensionMismatch(_)
                | Error::BoundaryViolation(_) => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            },
        }
    }
}

pub trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T, CliError>;
}

impl<T> StageExt<T> for rdreg::Result<T> {
    fn at(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|e| CliError::Core(e, stage))
    }
}
