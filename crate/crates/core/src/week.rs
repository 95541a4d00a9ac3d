//! ISO-8601 weeks, computed in UTC.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveTime, Utc, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An ISO week such as `2026-W18`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IsoWeek {
    year: i32,
    week: u32,
}

impl IsoWeek {
    pub fn new(year: i32, week: u32) -> Option<Self> {
        NaiveDate::from_isoywd_opt(year, week, Weekday::Mon).map(|_| IsoWeek { year, week })
    }

    pub fn of(ts: DateTime<Utc>) -> Self {
        Self::of_date(ts.date_naive())
    }

    pub fn of_date(date: NaiveDate) -> Self {
        let w = date.iso_week();
        IsoWeek {
            year: w.year(),
            week: w.week(),
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn week(&self) -> u32 {
        self.week
    }

    pub fn monday(&self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Mon).expect("validated week")
    }

    pub fn sunday(&self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Sun).expect("validated week")
    }

    /// Monday 00:00 UTC.
    pub fn start(&self) -> DateTime<Utc> {
        self.monday().and_time(NaiveTime::MIN).and_utc()
    }

    /// Exclusive end: the following Monday 00:00 UTC.
    pub fn end(&self) -> DateTime<Utc> {
        self.start() + Duration::days(7)
    }

    pub fn contains(&self, ts: DateTime<Utc>) -> bool {
        ts >= self.start() && ts < self.end()
    }

    pub fn next(&self) -> Self {
        Self::of_date(self.monday() + Duration::days(7))
    }

    pub fn prev(&self) -> Self {
        Self::of_date(self.monday() - Duration::days(7))
    }
}

impl fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-W{:02}", self.year, self.week)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid ISO week `{0}` (expected YYYY-Www)")]
pub struct ParseWeekError(String);

impl FromStr for IsoWeek {
    type Err = ParseWeekError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseWeekError(s.to_string());
        let (y, w) = s.trim().split_once("-W").ok_or_else(err)?;
        let year: i32 = y.parse().map_err(|_| err())?;
        let week: u32 = w.parse().map_err(|_| err())?;
        IsoWeek::new(year, week).ok_or_else(err)
    }
}

impl Serialize for IsoWeek {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IsoWeek {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive range of ISO weeks.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekRange {
    pub first: IsoWeek,
    pub last: IsoWeek,
}

impl WeekRange {
    pub fn new(first: IsoWeek, last: IsoWeek) -> Self {
        WeekRange { first, last }
    }

    pub fn single(week: IsoWeek) -> Self {
        WeekRange {
            first: week,
            last: week,
        }
    }

    pub fn contains(&self, week: IsoWeek) -> bool {
        week >= self.first && week <= self.last
    }

    pub fn is_empty(&self) -> bool {
        self.first > self.last
    }

    pub fn weeks(&self) -> Vec<IsoWeek> {
        let mut out = Vec::new();
        let mut w = self.first;
        while w <= self.last {
            out.push(w);
            w = w.next();
        }
        out
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.first.start()
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.last.end()
    }
}

impl fmt::Display for WeekRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.first == self.last {
            write!(f, "{}", self.first)
        } else {
            write!(f, "{}..{}", self.first, self.last)
        }
    }
}

impl FromStr for WeekRange {
    type Err = ParseWeekError;

    /// Accepts `2026-W16..2026-W20` or a single week.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once("..") {
            Some((a, b)) => Ok(WeekRange::new(a.parse()?, b.parse()?)),
            None => Ok(WeekRange::single(s.parse()?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn week_boundaries_in_utc() {
        let w: IsoWeek = "2026-W17".parse().unwrap();
        assert_eq!(w.monday(), NaiveDate::from_ymd_opt(2026, 4, 20).unwrap());
        assert_eq!(w.sunday(), NaiveDate::from_ymd_opt(2026, 4, 26).unwrap());
        let late_sunday = Utc.with_ymd_and_hms(2026, 4, 26, 23, 59, 59).unwrap();
        assert!(w.contains(late_sunday));
        assert!(!w.contains(late_sunday + Duration::seconds(1)));
        assert_eq!(IsoWeek::of(late_sunday + Duration::seconds(1)), w.next());
    }

    #[test]
    fn year_rollover() {
        let w = IsoWeek::of_date(NaiveDate::from_ymd_opt(2026, 1, 1).unwrap());
        assert_eq!(w.to_string(), "2026-W01");
        assert_eq!(w.prev().to_string(), "2025-W52");
        assert!("2026-W54".parse::<IsoWeek>().is_err());
    }

    #[test]
    fn range_parse_and_iter() {
        let r: WeekRange = "2026-W16..2026-W20".parse().unwrap();
        assert_eq!(r.weeks().len(), 5);
        assert_eq!(r.to_string(), "2026-W16..2026-W20");
    }
}
