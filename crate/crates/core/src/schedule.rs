//! Periodic sampling schedules.
//!
//! A schedule is one period of the sampling sequence, stored as the list of
//! gaps between consecutive samples. The first sample sits at time zero and
//! the last gap wraps around to the start of the next period.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Exact rational used for average intervals and rates.
pub type Rational = Ratio<u64>;

/// Ordered inter-sample intervals of one period.
///
/// Equality compares the interval multisets (and hence the period); the
/// order of intervals is available through [`Schedule::intervals`].
#[derive(Debug, Clone)]
pub struct Schedule {
    intervals: Vec<usize>,
}

impl Schedule {
    pub fn new(intervals: Vec<usize>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidSchedule("schedule has no intervals".into()));
        }
        if intervals.contains(&0) {
            return Err(Error::InvalidSchedule("intervals must be at least 1".into()));
        }
        Ok(Self { intervals })
    }

    /// Sampling at every step.
    pub fn every_step() -> Self {
        Self { intervals: vec![1] }
    }

    /// Evenly spaced sampling with period `h`.
    pub fn evenly_spaced(h: usize) -> Result<Self> {
        Self::new(vec![h])
    }

    /// Builds a schedule from one period of the sampling indicator.
    pub fn from_sigma(bits: &[bool]) -> Result<Self> {
        match bits.first() {
            None => return Err(Error::AllZeros),
            Some(false) => {
                if bits.iter().any(|&b| b) {
                    return Err(Error::FirstBitNotOne);
                }
                return Err(Error::AllZeros);
            }
            Some(true) => {}
        }
        let samples: Vec<usize> = bits
            .iter()
            .enumerate()
            .filter_map(|(t, &b)| b.then_some(t))
            .collect();
        let mut intervals: Vec<usize> = samples.windows(2).map(|w| w[1] - w[0]).collect();
        intervals.push(bits.len() - samples[samples.len() - 1]);
        Ok(Self { intervals })
    }

    /// One period of the sampling indicator, length `h`.
    pub fn to_sigma(&self) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.period());
        for &t in &self.intervals {
            bits.push(true);
            bits.extend(std::iter::repeat_n(false, t - 1));
        }
        bits
    }

    pub fn intervals(&self) -> &[usize] {
        &self.intervals
    }

    /// Period `h`: the sum of the intervals.
    pub fn period(&self) -> usize {
        self.intervals.iter().sum()
    }

    /// Number of samples per period.
    pub fn samples(&self) -> usize {
        self.intervals.len()
    }

    pub fn max_interval(&self) -> usize {
        *self.intervals.iter().max().expect("nonempty")
    }

    pub fn min_interval(&self) -> usize {
        *self.intervals.iter().min().expect("nonempty")
    }

    /// `h / m` as a reduced fraction.
    pub fn average_interval(&self) -> Rational {
        Rational::new(self.period() as u64, self.samples() as u64)
    }

    /// `m / h` as a reduced fraction.
    pub fn average_rate(&self) -> Rational {
        self.average_interval().recip()
    }

    /// Sampling instants within one period.
    pub fn sample_times(&self) -> Vec<usize> {
        let mut t = 0;
        self.intervals
            .iter()
            .map(|&tau| {
                let s = t;
                t += tau;
                s
            })
            .collect()
    }

    /// Intervals sorted nonincreasing.
    pub fn canonicalize(&self) -> Self {
        let mut intervals = self.intervals.clone();
        intervals.sort_unstable_by(|a, b| b.cmp(a));
        Self { intervals }
    }

    /// Interval list rotated left by `k` positions.
    pub fn rotated(&self, k: usize) -> Self {
        let mut intervals = self.intervals.clone();
        let len = intervals.len();
        intervals.rotate_left(k % len);
        Self { intervals }
    }

    /// Indicator string such as `101000`.
    pub fn to_bit_string(&self) -> String {
        self.to_sigma().iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl PartialEq for Schedule {
    fn eq(&self, other: &Self) -> bool {
        self.canonicalize().intervals == other.canonicalize().intervals
    }
}

impl Eq for Schedule {}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Accepts comma-separated intervals (`2,4`) or an indicator string
/// (`101000`). Strings of two or more 0/1 digits without a comma are read as
/// indicators; write a single interval such as ten as `10,`.
impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        let looks_binary = s.len() > 1 && s.chars().all(|c| c == '0' || c == '1');
        if looks_binary {
            let bits: Vec<bool> = s.chars().map(|c| c == '1').collect();
            return Self::from_sigma(&bits);
        }
        let intervals = s
            .trim_end_matches(',')
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidSchedule(format!("cannot parse interval {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }
}
