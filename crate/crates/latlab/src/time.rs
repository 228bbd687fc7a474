//! Integral virtual time.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Virtual time in whole microseconds.
///
/// Used both for instants (microseconds since simulation start) and for
/// durations. Integer microseconds keep event ordering, divisibility checks
/// and trace comparison exact; sub-microsecond latencies are below the
/// model's resolution.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Micros(pub u64);

impl Micros {
    pub const ZERO: Micros = Micros(0);
    pub const PER_SEC: u64 = 1_000_000;

    pub const fn from_secs(secs: u64) -> Micros {
        Micros(secs * Self::PER_SEC)
    }

    pub const fn from_millis(millis: u64) -> Micros {
        Micros(millis * 1_000)
    }

    /// Rounds to the nearest microsecond.
    pub fn from_secs_f64(secs: f64) -> Micros {
        assert!(
            secs.is_finite() && secs >= 0.0,
            "virtual time must be finite and non-negative, got {secs}"
        );
        Micros((secs * Self::PER_SEC as f64).round() as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::PER_SEC as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn saturating_sub(self, rhs: Micros) -> Micros {
        Micros(self.0.saturating_sub(rhs.0))
    }

    pub fn min(self, rhs: Micros) -> Micros {
        Micros(self.0.min(rhs.0))
    }

    pub fn max(self, rhs: Micros) -> Micros {
        Micros(self.0.max(rhs.0))
    }

    /// Seconds rendered without trailing zeros: `240`, `0.5`, `1.000001`.
    pub fn secs_display(self) -> String {
        let whole = self.0 / Self::PER_SEC;
        let frac = self.0 % Self::PER_SEC;
        if frac == 0 {
            format!("{whole}")
        } else {
            let s = format!("{frac:06}");
            format!("{whole}.{}", s.trim_end_matches('0'))
        }
    }
}

impl Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl AddAssign for Micros {
    fn add_assign(&mut self, rhs: Micros) {
        self.0 += rhs.0;
    }
}

impl Sub for Micros {
    type Output = Micros;
    fn sub(self, rhs: Micros) -> Micros {
        Micros(self.0 - rhs.0)
    }
}

impl SubAssign for Micros {
    fn sub_assign(&mut self, rhs: Micros) {
        self.0 -= rhs.0;
    }
}

impl Mul<u64> for Micros {
    type Output = Micros;
    fn mul(self, rhs: u64) -> Micros {
        Micros(self.0 * rhs)
    }
}

impl Sum for Micros {
    fn sum<I: Iterator<Item = Micros>>(iter: I) -> Micros {
        Micros(iter.map(|m| m.0).sum())
    }
}

impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.secs_display())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seconds_display_trims_trailing_zeros() {
        assert_eq!(Micros::from_secs(240).secs_display(), "240");
        assert_eq!(Micros(1_500_000).secs_display(), "1.5");
        assert_eq!(Micros(1).secs_display(), "0.000001");
        assert_eq!(Micros::ZERO.secs_display(), "0");
    }

    #[test]
    fn secs_f64_round_trip_is_exact_at_micro_resolution() {
        for us in [0u64, 1, 999_999, 1_000_000, 240_000_000, 337_920_000_000] {
            let m = Micros(us);
            assert_eq!(Micros::from_secs_f64(m.as_secs_f64()), m);
        }
    }
}
