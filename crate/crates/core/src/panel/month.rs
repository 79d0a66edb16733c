//! Calendar-month index type and inclusive month windows.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A Gregorian calendar month, ordered lexicographically by (year, month).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CalendarMonth {
    year: i32,
    month: u8,
}

/// Error parsing or constructing a [`CalendarMonth`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MonthError {
    #[error("month {0} out of range 1..=12")]
    MonthOutOfRange(u32),
    #[error("malformed month literal {0:?}, expected YYYY-MM")]
    Malformed(String),
}

impl CalendarMonth {
    /// Constructs a month, rejecting `month` outside 1..=12.
    pub fn new(year: i32, month: u32) -> Result<Self, MonthError> {
        if !(1..=12).contains(&month) {
            return Err(MonthError::MonthOutOfRange(month));
        }
        Ok(Self {
            year,
            month: month as u8,
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        u32::from(self.month)
    }

    /// Adds `n` months (negative moves backwards). Closed and associative.
    pub fn add_months(&self, n: i64) -> Self {
        let zero_based = i64::from(self.year) * 12 + i64::from(self.month) - 1 + n;
        let year = zero_based.div_euclid(12);
        let month = zero_based.rem_euclid(12) + 1;
        Self {
            year: year as i32,
            month: month as u8,
        }
    }

    /// Signed number of months from `other` to `self`.
    pub fn months_since(&self, other: &CalendarMonth) -> i64 {
        (i64::from(self.year) * 12 + i64::from(self.month))
            - (i64::from(other.year) * 12 + i64::from(other.month))
    }

    /// June of the same calendar year.
    pub fn is_june(&self) -> bool {
        self.month == 6
    }
}

impl fmt::Display for CalendarMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for CalendarMonth {
    type Err = MonthError;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || MonthError::Malformed(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(malformed)?;
        let year: i32 = y.parse().map_err(|_| malformed())?;
        let month: u32 = m.parse().map_err(|_| malformed())?;
        CalendarMonth::new(year, month).map_err(|e| match e {
            MonthError::MonthOutOfRange(_) => e,
            MonthError::Malformed(_) => malformed(),
        })
    }
}

/// An inclusive span of calendar months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MonthWindow {
    pub start: CalendarMonth,
    pub end: CalendarMonth,
}

impl MonthWindow {
    /// Constructs a window; `start` must not come after `end`.
    pub fn new(start: CalendarMonth, end: CalendarMonth) -> Result<Self, MonthError> {
        if start > end {
            return Err(MonthError::Malformed(format!("{start}..{end}")));
        }
        Ok(Self { start, end })
    }

    /// Number of months covered, inclusive of both ends.
    pub fn len(&self) -> usize {
        (self.end.months_since(&self.start) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false // start <= end is enforced at construction
    }

    pub fn contains(&self, m: &CalendarMonth) -> bool {
        *m >= self.start && *m <= self.end
    }

    /// Iterates the months in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = CalendarMonth> + '_ {
        let n = self.len();
        let start = self.start;
        (0..n).map(move |i| start.add_months(i as i64))
    }

    /// Zero-based offset of `m` within the window, if covered.
    pub fn index_of(&self, m: &CalendarMonth) -> Option<usize> {
        if self.contains(m) {
            Some(m.months_since(&self.start) as usize)
        } else {
            None
        }
    }

    /// Calendar years touched by the window, ascending.
    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.start.year()..=self.end.year()
    }
}

impl fmt::Display for MonthWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for MonthWindow {
    type Err = MonthError;

    /// Parses `YYYY-MM..YYYY-MM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| MonthError::Malformed(s.to_string()))?;
        MonthWindow::new(a.trim().parse()?, b.trim().parse()?)
    }
}
