//! Small numeric helpers shared across modules.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// A real number that may be `+∞`.
///
/// Hypothesis-testing entropies diverge when the optimal Type II error is
/// zero; that case is carried as an explicit variant instead of a float
/// special. Serializes as a JSON number, or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    /// Finite value, panicking on `Infinite`.
    pub fn unwrap(self) -> f64 {
        self.finite().expect("ExtReal::unwrap on an infinite value")
    }

    pub fn scale(self, factor: f64) -> ExtReal {
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x * factor),
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }

    /// `-ln(b)`, with `b == 0` mapped to `Infinite`.
    pub fn neg_ln(b: f64) -> ExtReal {
        if b > 0.0 {
            ExtReal::Finite(-b.ln())
        } else {
            ExtReal::Infinite
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) => Ok(ExtReal::Finite(x)),
            Repr::Str(s) if s == "inf" => Ok(ExtReal::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn accurate_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = KahanSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// `ln Σ exp(x_i)` with the max-exponent shift.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + accurate_sum(xs.iter().map(|&x| (x - max).exp())).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_real_json() {
        assert_eq!(serde_json::to_string(&ExtReal::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&ExtReal::Finite(0.5)).unwrap(), "0.5");
        let back: ExtReal = serde_json::from_str("\"inf\"").unwrap();
        assert!(back.is_infinite());
        assert!(serde_json::from_str::<ExtReal>("\"nan\"").is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs: Vec<f64> = std::iter::once(1.0).chain(std::iter::repeat(1e-16).take(10_000)).collect();
        let s = accurate_sum(xs.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_large_arguments() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
