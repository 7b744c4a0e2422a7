use std::fmt;

/// Failure classes, one per non-zero exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Usage,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Data,
            message: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Numerical => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<netmix::Error> for CliError {
    fn from(e: netmix::Error) -> Self {
        use netmix::Error as E;
        let kind = match &e {
            E::Numerical { .. } | E::NotPositiveDefinite { .. } => Kind::Numerical,
            E::WrongModel { .. } => Kind::Usage,
            _ => Kind::Data,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

/// Library errors raised while checking configuration are usage errors.
pub fn config_error(e: netmix::Error) -> CliError {
    CliError::usage(e.to_string())
}
