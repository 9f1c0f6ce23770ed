use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A calendar month, written `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    year: u16,
    month: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid month {input:?}: {reason}")]
pub struct MonthParseError {
    pub input: String,
    pub reason: &'static str,
}

impl Month {
    pub fn new(year: u16, month: u8) -> Option<Self> {
        if (1..=12).contains(&month) && year >= 1 {
            Some(Month { year, month })
        } else {
            None
        }
    }

    pub fn year(self) -> u16 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    pub fn succ(self) -> Month {
        if self.month == 12 {
            Month {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Month {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    pub fn days(self) -> u8 {
        match self.month {
            2 if is_leap(self.year) => 29,
            2 => 28,
            4 | 6 | 9 | 11 => 30,
            _ => 31,
        }
    }
}

fn is_leap(y: u16) -> bool {
    (y.is_multiple_of(4) && !y.is_multiple_of(100)) || y.is_multiple_of(400)
}

impl FromStr for Month {
    type Err = MonthParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| MonthParseError {
            input: s.to_owned(),
            reason,
        };
        let b = s.as_bytes();
        if b.len() != 7 || b[4] != b'-' {
            return Err(err("expected YYYY-MM"));
        }
        if !b[..4].iter().chain(&b[5..]).all(u8::is_ascii_digit) {
            return Err(err("expected YYYY-MM"));
        }
        let year: u16 = s[..4].parse().map_err(|_| err("bad year"))?;
        let month: u8 = s[5..].parse().map_err(|_| err("bad month"))?;
        Month::new(year, month).ok_or_else(|| err("month out of range"))
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive range of months. Parses from `YYYY-MM:YYYY-MM` or `YYYY-MM..YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MonthRange {
    pub start: Month,
    pub end: Month,
}

impl MonthRange {
    pub fn new(start: Month, end: Month) -> Option<Self> {
        (start <= end).then_some(MonthRange { start, end })
    }

    pub fn contains(&self, m: Month) -> bool {
        self.start <= m && m <= self.end
    }

    pub fn iter(&self) -> impl Iterator<Item = Month> {
        let end = self.end;
        std::iter::successors(Some(self.start), move |m| {
            let next = m.succ();
            (next <= end).then_some(next)
        })
    }

    pub fn len(&self) -> usize {
        let months = |m: Month| m.year as usize * 12 + m.month as usize;
        months(self.end) - months(self.start) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl FromStr for MonthRange {
    type Err = MonthParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("..")
            .or_else(|| s.split_once(':'))
            .ok_or_else(|| MonthParseError {
                input: s.to_owned(),
                reason: "expected START:END",
            })?;
        let start: Month = a.parse()?;
        let end: Month = b.parse()?;
        MonthRange::new(start, end).ok_or_else(|| MonthParseError {
            input: s.to_owned(),
            reason: "start after end",
        })
    }
}

impl fmt::Display for MonthRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let m: Month = "2013-05".parse().unwrap();
        assert_eq!((m.year(), m.month()), (2013, 5));
        assert_eq!(m.to_string(), "2013-05");
        assert!("2013-13".parse::<Month>().is_err());
        assert!("2013-00".parse::<Month>().is_err());
        assert!("13-05".parse::<Month>().is_err());
        assert!("2013-5".parse::<Month>().is_err());
        assert!("2013/05".parse::<Month>().is_err());
    }

    #[test]
    fn range_iteration_crosses_year() {
        let r: MonthRange = "2013-05:2014-06".parse().unwrap();
        assert_eq!(r.len(), 14);
        let months: Vec<String> = r.iter().map(|m| m.to_string()).collect();
        assert_eq!(months.len(), 14);
        assert_eq!(months[7], "2013-12");
        assert_eq!(months[8], "2014-01");
        assert_eq!(r, "2013-05..2014-06".parse().unwrap());
        assert!("2014-06:2013-05".parse::<MonthRange>().is_err());
    }

    #[test]
    fn days_in_month() {
        assert_eq!(Month::new(2012, 2).unwrap().days(), 29);
        assert_eq!(Month::new(2013, 2).unwrap().days(), 28);
        assert_eq!(Month::new(2000, 2).unwrap().days(), 29);
        assert_eq!(Month::new(1900, 2).unwrap().days(), 28);
        assert_eq!(Month::new(2014, 6).unwrap().days(), 30);
    }
}
