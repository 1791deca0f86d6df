use std::fmt;

/// A failed run, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input data.
    Input(String),
    /// A fit or test could not be carried out on the data.
    Estimator(String),
    /// Invalid flags or configuration.
    Config(String),
    /// Replayed outputs differ from the recorded ones.
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Mismatch(_) => 1,
            Self::Input(_) => 2,
            Self::Estimator(_) => 3,
            Self::Config(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Self::Input(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(m) => write!(f, "input error: {m}"),
            Self::Estimator(m) => write!(f, "estimator failure: {m}"),
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Mismatch(m) => write!(f, "replay mismatch: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<wetspell::Error> for CliError {
    fn from(e: wetspell::Error) -> Self {
        use wetspell::Error as E;
        let msg = e.to_string();
        match e {
            E::DegenerateSample(_)
            | E::EstimatorFailure(_)
            | E::NonConvergence { .. }
            | E::SampleTooSmall { .. }
            | E::Bracketing(_) => Self::Estimator(msg),
            E::Domain(_) | E::Config(_) | E::InvalidSubset(_) | E::IndexOutOfRange { .. } | E::WindowTooWide { .. } => {
                Self::Config(msg)
            }
            E::EmptySeries
            | E::MalformedDate(_)
            | E::UnorderedDates { .. }
            | E::MalformedValue(_)
            | E::NoWetDays
            | E::TooFewPeriods(_)
            | E::Io(_) => Self::Input(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_codes() {
        use wetspell::Error as E;
        let code = |e: E| CliError::from(e).exit_code();
        assert_eq!(code(E::EmptySeries), 2);
        assert_eq!(code(E::MalformedDate("x".into())), 2);
        assert_eq!(code(E::DegenerateSample("x".into())), 3);
        assert_eq!(
            code(E::NonConvergence {
                iterations: 1,
                log: String::new()
            }),
            3
        );
        assert_eq!(code(E::Config("x".into())), 4);
        assert_eq!(code(E::WindowTooWide { m: 3, n: 2 }), 4);
    }
}
