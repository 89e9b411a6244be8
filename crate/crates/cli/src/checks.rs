//! Pass/fail rows tied to the acceptance criteria.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Bound {
    /// `measured < limit`
    Below { limit: f64 },
    /// `measured <= limit`
    AtMost { limit: f64 },
    /// `measured > limit`
    Above { limit: f64 },
    /// `measured >= limit`
    AtLeast { limit: f64 },
    /// `lo <= measured <= hi`
    Within { lo: f64, hi: f64 },
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::Below { limit } => v < limit,
            Bound::AtMost { limit } => v <= limit,
            Bound::Above { limit } => v > limit,
            Bound::AtLeast { limit } => v >= limit,
            Bound::Within { lo, hi } => lo <= v && v <= hi,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Bound::Below { limit } => format!("< {limit:e}"),
            Bound::AtMost { limit } => format!("<= {limit:e}"),
            Bound::Above { limit } => format!("> {limit:e}"),
            Bound::AtLeast { limit } => format!(">= {limit:e}"),
            Bound::Within { lo, hi } => format!("in [{lo}, {hi}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u32,
    pub name: String,
    pub measured: f64,
    pub threshold: String,
    pub pass: bool,
}

impl Check {
    pub fn new(criterion: u32, name: &str, measured: f64, bound: Bound) -> Self {
        Check {
            criterion,
            name: name.to_string(),
            measured,
            threshold: bound.describe(),
            pass: measured.is_finite() && bound.holds(measured),
        }
    }

    /// A yes/no check; `measured` is 1 or 0.
    pub fn flag(criterion: u32, name: &str, ok: bool) -> Self {
        Check {
            criterion,
            name: name.to_string(),
            measured: if ok { 1.0 } else { 0.0 },
            threshold: "== 1".into(),
            pass: ok,
        }
    }
}

/// `max / min` over a sweep of positive values.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Bound::Below { limit: 1.0 }.holds(0.5));
        assert!(!Bound::Below { limit: 1.0 }.holds(1.0));
        assert!(Bound::AtMost { limit: 1.0 }.holds(1.0));
        assert!(Bound::Within { lo: 3.5, hi: 4.5 }.holds(4.0));
        assert!(!Check::new(1, "x", f64::NAN, Bound::AtLeast { limit: 0.0 }).pass);
        assert_eq!(spread(&[1.0, 2.0, 1.5]), 2.0);
        assert_eq!(spread(&[0.0, 1.0]), f64::INFINITY);
    }
}
