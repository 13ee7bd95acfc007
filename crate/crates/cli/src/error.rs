use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error{}: {message}", if path.is_empty() { String::new() } else { format!(" at `{path}`") })]
    Config { path: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("self-check failed: {0}")]
    Physics(String),
    #[error("fidelity {fidelity} is below the floor {floor}")]
    FidelityFloor { fidelity: f64, floor: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Physics(_) => 4,
            CliError::FidelityFloor { .. } => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Simulation errors at this level come from parameter points the
/// configuration asked for.
impl From<virtspin::Error> for CliError {
    fn from(e: virtspin::Error) -> Self {
        CliError::Config { path: String::new(), message: e.to_string() }
    }
}
