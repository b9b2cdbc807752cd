use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Binary decision state of one assessed leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown outcome label {0:?} (expected Pass or Fail)")]
pub struct ParseOutcomeError(pub String);

impl Outcome {
    pub fn is_pass(self) -> bool {
        matches!(self, Outcome::Pass)
    }

    pub fn is_fail(self) -> bool {
        matches!(self, Outcome::Fail)
    }

    /// Single-letter form used in performance strings.
    pub fn as_char(self) -> char {
        match self {
            Outcome::Pass => 'P',
            Outcome::Fail => 'F',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'P' => Some(Outcome::Pass),
            'F' => Some(Outcome::Fail),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "Pass",
            Outcome::Fail => "Fail",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = ParseOutcomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Pass" | "P" => Ok(Outcome::Pass),
            "Fail" | "F" => Ok(Outcome::Fail),
            other => Err(ParseOutcomeError(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_spellings() {
        assert_eq!("Pass".parse::<Outcome>().unwrap(), Outcome::Pass);
        assert_eq!("F".parse::<Outcome>().unwrap(), Outcome::Fail);
        assert!("Maybe".parse::<Outcome>().is_err());
        assert!("pass".parse::<Outcome>().is_err());
    }

    #[test]
    fn char_round_trip() {
        for o in [Outcome::Pass, Outcome::Fail] {
            assert_eq!(Outcome::from_char(o.as_char()), Some(o));
        }
        assert_eq!(Outcome::from_char('x'), None);
    }
}
