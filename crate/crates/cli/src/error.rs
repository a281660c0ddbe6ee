use thiserror::Error;
use varshot_core::Error as CoreError;

/// Failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

/// The error and every source under it, joined with `: `.
fn chain(e: &dyn std::error::Error) -> String {
    let mut msg = e.to_string();
    let mut source = e.source();
    while let Some(s) = source {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        source = s.source();
    }
    msg
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(chain(&e))
        } else if let CoreError::Io(io) = &e {
            CliError::Io(io.to_string())
        } else {
            CliError::Config(chain(&e))
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let numerical = CoreError::NumericalFailure {
            what: "evaluation loss",
            task: 3,
            shots: 4,
            source: Box::new(CoreError::Config("inner".into())),
        };
        let e = CliError::from(numerical);
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("task 3"));
        assert!(e.to_string().contains("inner"));
        assert_eq!(CliError::from(CoreError::Config("x".into())).exit_code(), 2);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::from(CoreError::Io(io)).exit_code(), 4);
    }
}
