use std::fmt;
use std::str::FromStr;

use crate::error::{LabError, Result};

/// Default ceiling for the exponential budget.
pub const DEFAULT_EXP_CAP: u64 = 1 << 24;

/// Number of unlabeled draws granted for `ell` labeled ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlabeledBudget {
    Zero,
    Linear(u64),
    Square,
    Quartic,
    /// `2^ell`, clipped at `cap`.
    Exponential { cap: u64 },
}

impl UnlabeledBudget {
    pub fn eval(&self, ell: u64) -> u64 {
        match *self {
            UnlabeledBudget::Zero => 0,
            UnlabeledBudget::Linear(k) => k.saturating_mul(ell),
            UnlabeledBudget::Square => ell.saturating_mul(ell),
            UnlabeledBudget::Quartic => ell.saturating_pow(4),
            UnlabeledBudget::Exponential { cap } => {
                if ell >= 63 {
                    cap
                } else {
                    (1u64 << ell).min(cap)
                }
            }
        }
    }

    pub fn cap(&self) -> Option<u64> {
        match *self {
            UnlabeledBudget::Exponential { cap } => Some(cap),
            _ => None,
        }
    }

    /// True when `u(ell) / ell` grows without bound (ignoring any cap).
    pub fn is_superlinear(&self) -> bool {
        matches!(self, UnlabeledBudget::Square | UnlabeledBudget::Quartic | UnlabeledBudget::Exponential { .. })
    }
}

impl fmt::Display for UnlabeledBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnlabeledBudget::Zero => f.write_str("zero"),
            UnlabeledBudget::Linear(k) => write!(f, "linear:{k}"),
            UnlabeledBudget::Square => f.write_str("square"),
            UnlabeledBudget::Quartic => f.write_str("quartic"),
            UnlabeledBudget::Exponential { cap } => write!(f, "exp:{cap}"),
        }
    }
}

impl FromStr for UnlabeledBudget {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || LabError::Parse(format!("unknown budget '{s}'"));
        match s.trim() {
            "zero" => Ok(UnlabeledBudget::Zero),
            "square" => Ok(UnlabeledBudget::Square),
            "quartic" => Ok(UnlabeledBudget::Quartic),
            "exp" => Ok(UnlabeledBudget::Exponential { cap: DEFAULT_EXP_CAP }),
            other => {
                if let Some(k) = other.strip_prefix("linear:") {
                    Ok(UnlabeledBudget::Linear(k.parse().map_err(|_| bad())?))
                } else if let Some(cap) = other.strip_prefix("exp:") {
                    Ok(UnlabeledBudget::Exponential { cap: cap.parse().map_err(|_| bad())? })
                } else {
                    Err(bad())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        assert_eq!(UnlabeledBudget::Zero.eval(10), 0);
        assert_eq!(UnlabeledBudget::Linear(3).eval(10), 30);
        assert_eq!(UnlabeledBudget::Square.eval(10), 100);
        assert_eq!(UnlabeledBudget::Quartic.eval(10), 10_000);
        let exp = UnlabeledBudget::Exponential { cap: 1000 };
        assert_eq!(exp.eval(5), 32);
        assert_eq!(exp.eval(64), 1000);
        assert_eq!(exp.cap(), Some(1000));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["zero", "linear:2", "square", "quartic", "exp:4096"] {
            assert_eq!(s.parse::<UnlabeledBudget>().unwrap().to_string(), s);
        }
        assert_eq!("exp".parse::<UnlabeledBudget>().unwrap().cap(), Some(DEFAULT_EXP_CAP));
        assert!("cubic".parse::<UnlabeledBudget>().is_err());
        assert!("linear:x".parse::<UnlabeledBudget>().is_err());
    }
}
