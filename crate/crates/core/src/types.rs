// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Identifiers and small value types shared by every stage.

use std::fmt;
use std::str::FromStr;

use crate::error::ParseValueError;

/// Opaque city identifier as it appears in the input files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CityId(pub String);

/// Opaque firm identifier as it appears in the input files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FirmId(pub String);

impl CityId {
    pub fn new(id: impl Into<String>) -> Self {
        CityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FirmId {
    pub fn new(id: impl Into<String>) -> Self {
        FirmId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for FirmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CityId {
    fn from(s: &str) -> Self {
        CityId(s.to_owned())
    }
}

impl From<&str> for FirmId {
    fn from(s: &str) -> Self {
        FirmId(s.to_owned())
    }
}

/// The five macro-regions used for grouping and fixed effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    North,
    Northeast,
    Midwest,
    Southeast,
    South,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::North,
        Region::Northeast,
        Region::Midwest,
        Region::Southeast,
        Region::South,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::North => "North",
            Region::Northeast => "Northeast",
            Region::Midwest => "Midwest",
            Region::Southeast => "Southeast",
            Region::South => "South",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "North" => Ok(Region::North),
            "Northeast" => Ok(Region::Northeast),
            "Midwest" => Ok(Region::Midwest),
            "Southeast" => Ok(Region::Southeast),
            "South" => Ok(Region::South),
            other => Err(ParseValueError(format!("unknown region {other:?}"))),
        }
    }
}

/// Inclusive range of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl YearRange {
    pub fn new(first: i32, last: i32) -> Result<Self, ParseValueError> {
        if first > last {
            return Err(ParseValueError(format!("empty year range {first}..{last}")));
        }
        Ok(YearRange { first, last })
    }

    pub fn contains(&self, year: i32) -> bool {
        self.first <= year && year <= self.last
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

/// Parses `A..B` (inclusive) or a single year `A`.
impl FromStr for YearRange {
    type Err = ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse = |t: &str| {
            t.trim()
                .parse::<i32>()
                .map_err(|_| ParseValueError(format!("invalid year {t:?}")))
        };
        match s.split_once("..") {
            Some((a, b)) => YearRange::new(parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let y = parse(s)?;
                YearRange::new(y, y)
            }
        }
    }
}

/// Edge direction convention of a stored flow graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Customer city -> supplier city (payer -> payee).
    MoneyFlow,
    /// Supplier city -> customer city.
    Reversed,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::MoneyFlow => Orientation::Reversed,
            Orientation::Reversed => Orientation::MoneyFlow,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::MoneyFlow => "money-flow",
            Orientation::Reversed => "reversed",
        }
    }
}

impl FromStr for Orientation {
    type Err = ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "money-flow" | "money_flow" => Ok(Orientation::MoneyFlow),
            "reversed" => Ok(Orientation::Reversed),
            other => Err(ParseValueError(format!("unknown orientation {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_range_parsing() {
        assert_eq!("2003..2014".parse::<YearRange>().unwrap(), YearRange::new(2003, 2014).unwrap());
        assert_eq!("2003..=2004".parse::<YearRange>().unwrap(), YearRange::new(2003, 2004).unwrap());
        assert_eq!("2010".parse::<YearRange>().unwrap().len(), 1);
        assert!("2014..2003".parse::<YearRange>().is_err());
        assert!("x..2003".parse::<YearRange>().is_err());
    }

    #[test]
    fn region_round_trip() {
        for r in Region::ALL {
            assert_eq!(r.as_str().parse::<Region>().unwrap(), r);
        }
        assert!("Central".parse::<Region>().is_err());
    }
}
