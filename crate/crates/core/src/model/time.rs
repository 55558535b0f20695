use num::integer::Integer;
use num::{BigInt, BigRational, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::architecture::Operator;
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Stu,
    Cycles,
    Seconds,
}

impl TimeUnit {
    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "stu" => Some(TimeUnit::Stu),
            "cycles" => Some(TimeUnit::Cycles),
            "seconds" | "s" => Some(TimeUnit::Seconds),
            _ => None,
        }
    }
}

fn rational(x: f64) -> Result<BigRational, ModelError> {
    BigRational::from_float(x).ok_or_else(|| ModelError::Domain(format!("{x} is not finite")))
}

/// Exact conversion: `cycles = seconds * clock_hz`, `stu = cycles / cycles_per_stu`.
pub fn time_convert_exact(
    value: &BigRational,
    from: TimeUnit,
    to: TimeUnit,
    op: &Operator,
) -> Result<BigRational, ModelError> {
    if value < &BigRational::zero() {
        return Err(ModelError::Domain("time values must be non-negative".into()));
    }
    if !(op.clock_hz.is_finite() && op.clock_hz > 0.0) || op.cycles_per_stu == 0 {
        return Err(ModelError::Domain(format!(
            "operator {} needs a positive clock and cycles per STU",
            op.name
        )));
    }
    let clock = rational(op.clock_hz)?;
    let per_stu = BigRational::from_integer(BigInt::from(op.cycles_per_stu));
    let cycles = match from {
        TimeUnit::Cycles => value.clone(),
        TimeUnit::Stu => value * &per_stu,
        TimeUnit::Seconds => value * &clock,
    };
    Ok(match to {
        TimeUnit::Cycles => cycles,
        TimeUnit::Stu => cycles / per_stu,
        TimeUnit::Seconds => cycles / clock,
    })
}

pub fn time_convert(value: f64, from: TimeUnit, to: TimeUnit, op: &Operator) -> Result<f64, ModelError> {
    let exact = time_convert_exact(&rational(value)?, from, to, op)?;
    exact
        .to_f64()
        .ok_or_else(|| ModelError::Domain("result out of range".into()))
}

/// Least common multiple of the periods.
pub fn hyperperiod(periods: &[u64]) -> Result<u64, ModelError> {
    if periods.is_empty() {
        return Err(ModelError::Domain("no periods given".into()));
    }
    let mut acc: u64 = 1;
    for &p in periods {
        if p == 0 {
            return Err(ModelError::Domain("periods must be positive".into()));
        }
        acc = (acc / acc.gcd(&p))
            .checked_mul(p)
            .ok_or_else(|| ModelError::Domain("hyperperiod overflows".into()))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atmega() -> Operator {
        Operator::new("node3", "ATmega128").with_clock(14_745_600.0, 1000)
    }

    #[test]
    fn five_ms_in_cycles() {
        let c = time_convert(0.005, TimeUnit::Seconds, TimeUnit::Cycles, &atmega()).unwrap();
        assert_eq!(c, 73_728.0);
    }

    #[test]
    fn eighty_stu_in_seconds() {
        let s = time_convert(80.0, TimeUnit::Stu, TimeUnit::Seconds, &atmega()).unwrap();
        assert!((s * 1e3 - 5.4253).abs() < 1e-4, "{s}");
    }

    #[test]
    fn zero_and_negative() {
        assert_eq!(time_convert(0.0, TimeUnit::Stu, TimeUnit::Seconds, &atmega()).unwrap(), 0.0);
        assert!(time_convert(-1.0, TimeUnit::Stu, TimeUnit::Cycles, &atmega()).is_err());
    }

    #[test]
    fn hyperperiods() {
        assert_eq!(hyperperiod(&[20]).unwrap(), 20);
        assert_eq!(hyperperiod(&[20, 20, 20]).unwrap(), 20);
        assert_eq!(hyperperiod(&[4, 6]).unwrap(), 12);
        assert!(hyperperiod(&[]).is_err());
        assert!(hyperperiod(&[0]).is_err());
    }
}
