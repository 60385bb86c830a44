use allocq::alloc::AllocError;
use allocq::inputs::InputsError;
use allocq::lifecycle::LifecycleError;
use allocq::scenarios::ScenarioError;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration (exit 2).
    Config(String),
    /// Inputs that fail a hard validation (exit 3).
    Validation(String),
    /// No allocation satisfies the constraints (exit 4).
    Infeasible(String),
    /// Anything else, including missing prerequisites (exit 1).
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("i/o error: {e}"))
    }
}

impl From<AllocError> for CliError {
    fn from(e: AllocError) -> Self {
        let m = e.to_string();
        match e {
            AllocError::Assumption(_) | AllocError::Malformed(_) => CliError::Validation(m),
            AllocError::InfeasibleLowerBounds { .. } => CliError::Infeasible(m),
            AllocError::InvalidLambda(_) | AllocError::InvalidArgument(_) => CliError::Config(m),
            _ => CliError::Other(m),
        }
    }
}

impl From<LifecycleError> for CliError {
    fn from(e: LifecycleError) -> Self {
        match e {
            LifecycleError::Config(m) => CliError::Config(m),
            LifecycleError::Calibration(_) => CliError::Config(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<InputsError> for CliError {
    fn from(e: InputsError) -> Self {
        match e {
            InputsError::Alloc(e) => e.into(),
            InputsError::Lifecycle(e) => e.into(),
            InputsError::Overlap(m) => CliError::Config(m),
            e => CliError::Other(e.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Config(m) => CliError::Config(m),
            ScenarioError::Infeasible(m) => CliError::Infeasible(m),
            ScenarioError::Inputs(e) => e.into(),
            ScenarioError::Alloc(e) => e.into(),
            ScenarioError::Lifecycle(e) => e.into(),
            e => CliError::Other(e.to_string()),
        }
    }
}
