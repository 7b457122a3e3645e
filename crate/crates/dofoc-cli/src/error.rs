//! Process-facing error classes with stable exit codes and a one-line
//! machine-readable rendering for the diagnostic stream.

use std::fmt;

/// Everything a command can fail with, bucketed by how the caller should
/// react. The exit-code contract: 1 for spec problems, 2 for operational
/// failures (solver, filesystem, artifact mismatch). Exit 3 is reserved for
/// commands that complete but do not reach their goal (non-converged solve,
/// failed validation) and is returned as a success value, not an error.
#[derive(Debug)]
pub enum CliError {
    /// The spec file is unreadable, malformed, or describes an inconsistent
    /// problem.
    Parse(String),
    /// A numerical routine failed while solving.
    Solver(String),
    /// A filesystem operation failed.
    Io(String),
    /// Solution artifacts do not match the spec's grid or dimensions.
    Mismatch(String),
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
            CliError::Mismatch(_) => "mismatch",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Solver(m) | CliError::Io(m) | CliError::Mismatch(m) => m,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Solver(_) | CliError::Io(_) | CliError::Mismatch(_) => 2,
        }
    }

    /// The single diagnostic line printed to stderr on failure.
    pub fn diagnostic_line(&self) -> String {
        format!(
            "dofoc: class={} msg=\"{}\"",
            self.class(),
            self.message().replace('"', "'").replace('\n', "; ")
        )
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class(), self.message())
    }
}

impl std::error::Error for CliError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Parse("x".into()).exit_code(), 1);
        assert_eq!(CliError::Solver("x".into()).exit_code(), 2);
        assert_eq!(CliError::Io("x".into()).exit_code(), 2);
        assert_eq!(CliError::Mismatch("x".into()).exit_code(), 2);
    }

    #[test]
    fn diagnostic_line_is_single_line_and_quote_safe() {
        let e = CliError::Parse("unknown key \"omega\"\nmore".into());
        let line = e.diagnostic_line();
        assert!(!line.contains('\n'));
        assert_eq!(line.matches('"').count(), 2);
        assert!(line.starts_with("dofoc: class=parse msg="));
        // Embedded quotes are downgraded so the line stays machine-splittable.
        assert!(line.contains("unknown key 'omega'; more"));
    }
}
