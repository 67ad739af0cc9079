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

//! Post-processing of per-city measures: rankings, normalization to the
//! leading city, two-year smoothing and regional GDP size classes.

use std::collections::BTreeMap;

use super::MeasureError;
use crate::ingest::{CityDirectory, CovariatePanel};
use crate::types::{CityId, Region};

/// Divides every value by the maximum, so the leading city reads 1.0.
pub fn normalize_to_max(values: &[f64]) -> Result<Vec<f64>, MeasureError> {
    let max = values.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(MeasureError::NoPositiveValue);
    }
    Ok(values.iter().map(|v| v / max).collect())
}

/// Trailing mean of the current and previous year. The first year has no
/// predecessor and passes through unchanged.
pub fn smooth_two_year(series: &[(i32, f64)]) -> Result<Vec<(i32, f64)>, MeasureError> {
    for w in series.windows(2) {
        if w[1].0 != w[0].0 + 1 {
            return Err(MeasureError::NonConsecutiveYears { after: w[0].0, found: w[1].0 });
        }
    }
    Ok(series
        .iter()
        .enumerate()
        .map(|(k, &(year, value))| match k {
            0 => (year, value),
            _ => (year, (series[k - 1].1 + value) / 2.0),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    /// 1-based.
    pub rank: usize,
    pub city: CityId,
    pub value: f64,
}

/// Descending by value, ties by city identifier, truncated to `top_k`.
pub fn rank_measure(values: &[(CityId, f64)], top_k: usize) -> Vec<RankEntry> {
    let mut sorted: Vec<&(CityId, f64)> = values.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    sorted
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(k, (city, value))| RankEntry { rank: k + 1, city: city.clone(), value: *value })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }

    /// Class of the `k`-th smallest of `n` items.
    fn of_position(k: usize, n: usize) -> Self {
        match 3 * k / n {
            0 => SizeClass::Small,
            1 => SizeClass::Medium,
            _ => SizeClass::Large,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Terciles {
    pub classes: BTreeMap<CityId, SizeClass>,
    /// Regions with fewer than three cities, classified on the national
    /// distribution instead.
    pub fallback_regions: Vec<Region>,
}

/// Splits each region's cities into GDP terciles for `year`.
///
/// Cities are ordered by GDP, ties by identifier, and the `k`-th of `n`
/// lands in class `floor(3k / n)`, so class sizes differ by at most one.
/// Only cities with a GDP value in `year` are classified.
pub fn gdp_terciles(panel: &CovariatePanel, cities: &CityDirectory, year: i32) -> Terciles {
    let mut all: Vec<(u64, &CityId)> = Vec::new();
    let mut by_region: BTreeMap<Region, Vec<(u64, &CityId)>> = BTreeMap::new();
    for row in panel.rows().filter(|r| r.year == year) {
        let (Some(gdp), Some(info)) = (row.gdp_cents, cities.get(&row.city)) else {
            continue;
        };
        all.push((gdp, &row.city));
        by_region.entry(info.region).or_default().push((gdp, &row.city));
    }
    let assign = |items: &mut Vec<(u64, &CityId)>, out: &mut BTreeMap<CityId, SizeClass>, only: Option<&[&CityId]>| {
        items.sort();
        let n = items.len();
        for (k, (_, city)) in items.iter().enumerate() {
            if only.is_none_or(|keep| keep.contains(city)) {
                out.insert((*city).clone(), SizeClass::of_position(k, n));
            }
        }
    };

    let mut result = Terciles::default();
    let mut small_regions: Vec<&CityId> = Vec::new();
    for (region, mut items) in by_region {
        if items.len() < 3 {
            result.fallback_regions.push(region);
            small_regions.extend(items.iter().map(|(_, c)| *c));
        } else {
            assign(&mut items, &mut result.classes, None);
        }
    }
    if !small_regions.is_empty() {
        assign(&mut all, &mut result.classes, Some(&small_regions));
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CityInfo, CovariateRow};

    #[test]
    fn normalization() {
        assert_eq!(normalize_to_max(&[2.0, 1.0, 0.5]).unwrap(), vec![1.0, 0.5, 0.25]);
        assert_eq!(normalize_to_max(&[0.3]).unwrap(), vec![1.0]);
        assert!(matches!(normalize_to_max(&[0.0, 0.0]), Err(MeasureError::NoPositiveValue)));
        assert!(normalize_to_max(&[]).is_err());
    }

    #[test]
    fn smoothing() {
        assert_eq!(smooth_two_year(&[(2003, 0.0), (2004, 2.0)]).unwrap(), vec![(2003, 0.0), (2004, 1.0)]);
        let constant: Vec<_> = (2000..2010).map(|y| (y, 4.5)).collect();
        assert_eq!(smooth_two_year(&constant).unwrap(), constant);
        assert!(smooth_two_year(&[]).unwrap().is_empty());
        assert!(smooth_two_year(&[(2003, 1.0), (2005, 2.0)]).is_err());
    }

    #[test]
    fn ranking() {
        let v = vec![(CityId::new("a"), 3.0), (CityId::new("b"), 1.0), (CityId::new("c"), 2.0)];
        let r = rank_measure(&v, 2);
        assert_eq!(
            r,
            vec![
                RankEntry { rank: 1, city: "a".into(), value: 3.0 },
                RankEntry { rank: 2, city: "c".into(), value: 2.0 }
            ]
        );
        let ties = vec![(CityId::new("b"), 1.0), (CityId::new("a"), 1.0)];
        let r = rank_measure(&ties, 2);
        assert_eq!(r[0].city, CityId::new("a"));
        assert_eq!(r[1].city, CityId::new("b"));
    }

    fn setup(entries: &[(&str, Region, u64)]) -> (CovariatePanel, CityDirectory) {
        let mut panel = CovariatePanel::new();
        let mut dir = CityDirectory::new();
        for &(id, region, gdp) in entries {
            dir.insert(CityId::new(id), CityInfo { name: id.into(), state: "S".into(), region, capital: false })
                .unwrap();
            let mut row = CovariateRow::new(CityId::new(id), 2010);
            row.gdp_cents = Some(gdp);
            panel.insert(row).unwrap();
        }
        (panel, dir)
    }

    #[test]
    fn terciles_in_one_region() {
        let (p, d) = setup(&[("x", Region::South, 2), ("y", Region::South, 1), ("z", Region::South, 3)]);
        let t = gdp_terciles(&p, &d, 2010);
        assert_eq!(t.classes[&CityId::new("y")], SizeClass::Small);
        assert_eq!(t.classes[&CityId::new("x")], SizeClass::Medium);
        assert_eq!(t.classes[&CityId::new("z")], SizeClass::Large);
        assert!(t.fallback_regions.is_empty());
        assert!(gdp_terciles(&p, &d, 1999).classes.is_empty());
    }

    #[test]
    fn equal_gdp_split_by_identifier() {
        let ids: Vec<String> = (0..6).map(|k| format!("c{k}")).collect();
        let entries: Vec<(&str, Region, u64)> = ids.iter().map(|s| (s.as_str(), Region::North, 7)).collect();
        let (p, d) = setup(&entries);
        let t = gdp_terciles(&p, &d, 2010);
        let classes: Vec<SizeClass> = ids.iter().map(|s| t.classes[&CityId::new(s.as_str())]).collect();
        use SizeClass::*;
        assert_eq!(classes, vec![Small, Small, Medium, Medium, Large, Large]);
    }

    #[test]
    fn tiny_region_falls_back_to_national_terciles() {
        let (p, d) = setup(&[
            ("a", Region::South, 1),
            ("b", Region::South, 2),
            ("c", Region::South, 3),
            ("d", Region::South, 4),
            ("e", Region::South, 5),
            ("m", Region::Midwest, 6),
        ]);
        let t = gdp_terciles(&p, &d, 2010);
        assert_eq!(t.fallback_regions, vec![Region::Midwest]);
        assert_eq!(t.classes[&CityId::new("m")], SizeClass::Large);
        assert_eq!(t.classes.len(), 6);
    }
}
