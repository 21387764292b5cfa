//! Process exit codes.

use std::fmt;

use tiergrade::Error;

pub const CONFIG: u8 = 2;
pub const NUMERIC: u8 = 3;
pub const ORACLE: u8 = 4;
pub const REGULARITY: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub type Outcome<T> = Result<T, Failure>;

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: CONFIG,
            message: message.into(),
        }
    }

    pub fn oracle(message: impl Into<String>) -> Self {
        Failure {
            code: ORACLE,
            message: message.into(),
        }
    }

    pub fn regularity(message: impl Into<String>) -> Self {
        Failure {
            code: REGULARITY,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Bracket { .. } | Error::NoConvergence { .. } => NUMERIC,
            Error::NotRegular(_) | Error::FeeCheck { .. } => REGULARITY,
            _ => CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(format!("io: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::config(format!("csv: {e}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
