//! Shared domain vocabulary: base states, leagues, half-innings, year windows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseValueError {
    #[error("invalid base state {0:?}")]
    BaseState(String),
    #[error("unknown league code {0:?}")]
    League(String),
    #[error("unknown half {0:?}")]
    Half(String),
    #[error("invalid year window {0:?}")]
    YearWindow(String),
}

/// Runner occupancy of (first, second, third), written as a 3-character
/// 0/1 string in that order: `100` is a runner on first only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaseState(u8);

impl BaseState {
    pub const EMPTY: BaseState = BaseState(0);
    pub const LOADED: BaseState = BaseState(0b111);

    /// The eight states in conventional order 000,100,010,001,110,101,011,111.
    pub const ALL: [BaseState; 8] = [
        BaseState(0b000),
        BaseState(0b001),
        BaseState(0b010),
        BaseState(0b100),
        BaseState(0b011),
        BaseState(0b101),
        BaseState(0b110),
        BaseState(0b111),
    ];

    pub fn new(first: bool, second: bool, third: bool) -> Self {
        BaseState(first as u8 | (second as u8) << 1 | (third as u8) << 2)
    }

    pub fn from_code(code: &str) -> Result<Self, ParseValueError> {
        let bytes = code.as_bytes();
        if bytes.len() != 3 {
            return Err(ParseValueError::BaseState(code.to_string()));
        }
        let mut bits = 0u8;
        for (i, b) in bytes.iter().enumerate() {
            match b {
                b'0' => {}
                b'1' => bits |= 1 << i,
                _ => return Err(ParseValueError::BaseState(code.to_string())),
            }
        }
        Ok(BaseState(bits))
    }

    pub fn first(self) -> bool {
        self.0 & 1 != 0
    }
    pub fn second(self) -> bool {
        self.0 & 2 != 0
    }
    pub fn third(self) -> bool {
        self.0 & 4 != 0
    }

    pub fn runners(self) -> u32 {
        self.0.count_ones()
    }

    /// Position of this state within [`BaseState::ALL`].
    pub fn index(self) -> usize {
        BaseState::ALL.iter().position(|s| *s == self).expect("all 8 states are listed")
    }

    pub fn code(self) -> String {
        let c = |b: bool| if b { '1' } else { '0' };
        [c(self.first()), c(self.second()), c(self.third())].iter().collect()
    }
}

impl fmt::Display for BaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for BaseState {
    type Err = ParseValueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaseState::from_code(s)
    }
}

impl Serialize for BaseState {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for BaseState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BaseState::from_code(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum League {
    AL,
    NL,
}

impl FromStr for League {
    type Err = ParseValueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "AL" | "al" | "A" => Ok(League::AL),
            "NL" | "nl" | "N" => Ok(League::NL),
            other => Err(ParseValueError::League(other.to_string())),
        }
    }
}

impl fmt::Display for League {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            League::AL => "AL",
            League::NL => "NL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Top,
    Bottom,
}

impl Half {
    /// The home team bats in the bottom half.
    pub fn home_bats(self) -> bool {
        self == Half::Bottom
    }
}

impl FromStr for Half {
    type Err = ParseValueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "top" | "TOP" | "Top" | "T" | "0" => Ok(Half::Top),
            "bottom" | "BOTTOM" | "Bottom" | "B" | "1" => Ok(Half::Bottom),
            other => Err(ParseValueError::Half(other.to_string())),
        }
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Half::Top => "top",
            Half::Bottom => "bottom",
        })
    }
}

/// Inclusive range of seasons, written `2010:2019` or `2019`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub first: i32,
    pub last: i32,
}

impl YearWindow {
    pub fn new(first: i32, last: i32) -> Result<Self, ParseValueError> {
        if first > last {
            return Err(ParseValueError::YearWindow(format!("{first}:{last}")));
        }
        Ok(YearWindow { first, last })
    }

    pub fn single(year: i32) -> Self {
        YearWindow { first: year, last: year }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.first..=self.last).contains(&year)
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.first..=self.last
    }
}

impl FromStr for YearWindow {
    type Err = ParseValueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseValueError::YearWindow(s.to_string());
        match s.split_once(':') {
            Some((a, b)) => {
                let a = a.trim().parse().map_err(|_| bad())?;
                let b = b.trim().parse().map_err(|_| bad())?;
                YearWindow::new(a, b).map_err(|_| bad())
            }
            None => Ok(YearWindow::single(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

impl fmt::Display for YearWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.first, self.last)
    }
}

/// Team-season code such as `ANA2017`.
pub fn team_season(team: &str, year: i32) -> String {
    format!("{team}{year}")
}

/// Splits a team-season code back into (team, year).
pub fn split_team_season(code: &str) -> Option<(&str, i32)> {
    if code.len() < 5 {
        return None;
    }
    let (team, year) = code.split_at(code.len() - 4);
    Some((team, year.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_state_codes_round_trip() {
        for s in BaseState::ALL {
            assert_eq!(BaseState::from_code(&s.code()).unwrap(), s);
        }
        let codes: Vec<String> = BaseState::ALL.iter().map(|s| s.code()).collect();
        assert_eq!(codes, ["000", "100", "010", "001", "110", "101", "011", "111"]);
        assert!(BaseState::from_code("100").unwrap().first());
        assert!(BaseState::from_code("001").unwrap().third());
    }

    #[test]
    fn base_state_rejects_out_of_alphabet() {
        assert!(BaseState::from_code("120").is_err());
        assert!(BaseState::from_code("10").is_err());
        assert!(BaseState::from_code("1000").is_err());
    }

    #[test]
    fn year_window_parsing() {
        let w: YearWindow = "2010:2019".parse().unwrap();
        assert_eq!((w.first, w.last, w.len()), (2010, 2019, 10));
        assert_eq!("2019".parse::<YearWindow>().unwrap(), YearWindow::single(2019));
        assert!("2019:2010".parse::<YearWindow>().is_err());
        assert!("abc".parse::<YearWindow>().is_err());
    }

    #[test]
    fn team_season_split() {
        assert_eq!(team_season("ANA", 2017), "ANA2017");
        assert_eq!(split_team_season("ANA2017"), Some(("ANA", 2017)));
        assert_eq!(split_team_season("X"), None);
    }
}
