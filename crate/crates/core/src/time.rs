//! Clock times and durations, both in minutes.
//!
//! A [`TimePoint`] is a real-valued clock time in minutes since midnight
//! (07:30 is `450.0`). A [`Duration`] is a non-negative span in minutes.
//! Both deserialize from either a number or an `"HH:MM"` / `"HH:MM:SS"`
//! string and serialize as plain numbers.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Minutes in one day; inputs are expected in `[0, MINUTES_PER_DAY)`.
pub const MINUTES_PER_DAY: f64 = 1440.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeParseError {
    #[error("empty time string")]
    Empty,
    #[error("malformed time `{0}`, expected HH:MM, HH:MM:SS or a number of minutes")]
    Malformed(String),
    #[error("time component out of range in `{0}`")]
    OutOfRange(String),
    #[error("time `{0}` is not finite")]
    NotFinite(String),
}

/// Clock time in minutes since midnight.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct TimePoint(f64);

impl TimePoint {
    pub const fn from_minutes(minutes: f64) -> Self {
        TimePoint(minutes)
    }

    pub fn from_hm(hours: u32, minutes: u32) -> Self {
        TimePoint(f64::from(hours) * 60.0 + f64::from(minutes))
    }

    pub const fn minutes(self) -> f64 {
        self.0
    }

    /// Signed gap `self - earlier` in minutes.
    pub fn since(self, earlier: TimePoint) -> f64 {
        self.0 - earlier.0
    }

    pub fn shifted(self, minutes: f64) -> Self {
        TimePoint(self.0 + minutes)
    }

    pub fn clamp(self, lo: TimePoint, hi: TimePoint) -> Self {
        TimePoint(self.0.max(lo.0).min(hi.0))
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// `HH:MM`, or `HH:MM:SS` when the time is not a whole minute after
    /// rounding to the nearest second. Negative times and times past
    /// midnight are printed without wrapping (e.g. `-00:30`, `25:00`).
    pub fn to_clock(self) -> String {
        let total = (self.0 * 60.0).round() as i64;
        let sign = if total < 0 { "-" } else { "" };
        let total = total.abs();
        let (h, m, s) = (total / 3600, (total / 60) % 60, total % 60);
        if s == 0 {
            format!("{sign}{h:02}:{m:02}")
        } else {
            format!("{sign}{h:02}:{m:02}:{s:02}")
        }
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_clock())
    }
}

impl FromStr for TimePoint {
    type Err = TimeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(TimeParseError::Empty);
        }
        if !s.contains(':') {
            let v: f64 = s
                .parse()
                .map_err(|_| TimeParseError::Malformed(s.to_string()))?;
            if !v.is_finite() {
                return Err(TimeParseError::NotFinite(s.to_string()));
            }
            return Ok(TimePoint(v));
        }
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(TimeParseError::Malformed(s.to_string()));
        }
        let mut fields = [0u32; 3];
        for (slot, part) in fields.iter_mut().zip(&parts) {
            if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(TimeParseError::Malformed(s.to_string()));
            }
            *slot = part
                .parse()
                .map_err(|_| TimeParseError::Malformed(s.to_string()))?;
        }
        let [h, m, sec] = fields;
        if h > 23 || m > 59 || sec > 59 {
            return Err(TimeParseError::OutOfRange(s.to_string()));
        }
        Ok(TimePoint(
            f64::from(h) * 60.0 + f64::from(m) + f64::from(sec) / 60.0,
        ))
    }
}

/// Non-negative span of time in minutes.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Duration(f64);

impl Duration {
    pub const ZERO: Duration = Duration(0.0);

    /// Panics in debug builds when `minutes` is negative or not finite.
    pub fn from_minutes(minutes: f64) -> Self {
        debug_assert!(
            minutes.is_finite() && minutes >= 0.0,
            "duration must be finite and non-negative, got {minutes}"
        );
        Duration(minutes)
    }

    /// Checked constructor for untrusted input.
    pub fn try_from_minutes(minutes: f64) -> Option<Self> {
        (minutes.is_finite() && minutes >= 0.0).then_some(Duration(minutes))
    }

    pub const fn minutes(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} min", self.0)
    }
}

impl Add<Duration> for TimePoint {
    type Output = TimePoint;

    fn add(self, rhs: Duration) -> TimePoint {
        TimePoint(self.0 + rhs.0)
    }
}

impl Sub<Duration> for TimePoint {
    type Output = TimePoint;

    fn sub(self, rhs: Duration) -> TimePoint {
        TimePoint(self.0 - rhs.0)
    }
}

impl Serialize for TimePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrClock {
    Number(f64),
    Clock(String),
}

impl<'de> Deserialize<'de> for TimePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match NumberOrClock::deserialize(deserializer)? {
            NumberOrClock::Number(v) => Ok(TimePoint(v)),
            NumberOrClock::Clock(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let minutes = match NumberOrClock::deserialize(deserializer)? {
            NumberOrClock::Number(v) => v,
            NumberOrClock::Clock(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| de::Error::custom(format!("malformed duration `{s}`")))?,
        };
        Duration::try_from_minutes(minutes).ok_or_else(|| {
            de::Error::custom(format!("duration must be finite and >= 0, got {minutes}"))
        })
    }
}

impl FromStr for Duration {
    type Err = TimeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| TimeParseError::Malformed(s.to_string()))?;
        Duration::try_from_minutes(v).ok_or_else(|| TimeParseError::OutOfRange(s.to_string()))
    }
}
