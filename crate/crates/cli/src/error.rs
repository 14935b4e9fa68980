use compint_core::closedforms::{ClosedFormError, ProductError};
use compint_core::field::DependsOnState;
use compint_core::harness::HarnessError;
use compint_core::oracle::OracleError;
use compint_core::{FlowError, ParseError};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Success = 0,
    /// I/O failure writing results.
    Io = 1,
    /// Bad flags, unparsable integrand, or arguments outside an operation's domain.
    Usage = 2,
    /// The integrand left its domain (log of non-positive, sqrt of negative, ...).
    Domain = 3,
    /// A composed state left the state domain or stopped being finite.
    StateEscape = 4,
    /// Refinement or the reference solver did not converge.
    NoConvergence = 5,
    /// A group-law audit recorded failures.
    AuditFailure = 6,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse `{source_text}`: {error}")]
    Parse {
        source_text: String,
        error: ParseError,
    },
    #[error(transparent)]
    NeedsTimeOnly(#[from] DependsOnState),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("reference solve failed: {0}")]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("group-law audit failed: {0}")]
    AuditFailed(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

fn flow_exit(e: &FlowError) -> Exit {
    match e {
        FlowError::Domain { .. } | FlowError::GammaDomain(_) => Exit::Domain,
        FlowError::StateEscape { .. } | FlowError::InitialOutsideDomain(_) => Exit::StateEscape,
        FlowError::NoConvergence { .. } => Exit::NoConvergence,
        FlowError::BadInterval { .. }
        | FlowError::BadDomain { .. }
        | FlowError::IntervalMismatch { .. }
        | FlowError::BadRefinement(_)
        | FlowError::GammaEndpoint { .. }
        | FlowError::Partition(_) => Exit::Usage,
    }
}

fn oracle_exit(e: &OracleError) -> Exit {
    match e {
        OracleError::Domain { .. } => Exit::Domain,
        OracleError::StepLimit { .. }
        | OracleError::StepUnderflow { .. }
        | OracleError::NonFinite { .. } => Exit::NoConvergence,
        OracleError::BadConfig | OracleError::BadInterval { .. } => Exit::Usage,
    }
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Usage(_)
            | CliError::Parse { .. }
            | CliError::NeedsTimeOnly(_)
            | CliError::Product(_) => Exit::Usage,
            CliError::Flow(e) => flow_exit(e),
            CliError::Oracle(e) => oracle_exit(e),
            CliError::ClosedForm(e) => match e {
                ClosedFormError::OutOfDomain { .. } => Exit::Usage,
                ClosedFormError::Domain(_) => Exit::Domain,
                ClosedFormError::Oracle(e) => oracle_exit(e),
            },
            CliError::Harness(e) => match e {
                HarnessError::BadSchedule | HarnessError::BadReference => Exit::Usage,
                HarnessError::Aborted { error, .. } => flow_exit(error),
            },
            CliError::AuditFailed(_) => Exit::AuditFailure,
            CliError::Io(_) => Exit::Io,
        }
    }
}
