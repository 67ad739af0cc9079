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

//! Plot-ready summaries of a finished run.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::Result;
use crate::ingest::{CityDirectory, CovariatePanel};
use crate::netmeasure::{gdp_terciles, normalize_to_max, smooth_two_year, MeasureTable, SizeClass};
use crate::output::{fmt_float, fmt_opt, CsvOut};
use crate::types::{CityId, Region};

pub const REGION_SERIES_FILE: &str = "centrality_by_region.csv";
pub const GLOBAL_SERIES_FILE: &str = "global_series.csv";
pub const DEPENDENCE_FILE: &str = "dependence_by_size.csv";
pub const SCATTER_FILE: &str = "centrality_gdp_scatter.csv";
pub const SCATTER_FIT_FILE: &str = "centrality_gdp_fit.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct RegionPoint {
    pub region: Region,
    pub year: i32,
    pub downstream: f64,
    pub upstream: f64,
}

/// Regional centrality: per-year sums of city PageRank, smoothed with the
/// two-year trailing mean, then scaled by the largest smoothed value over
/// all regions and years.
pub fn region_centrality(table: &MeasureTable, cities: &CityDirectory) -> Result<Vec<RegionPoint>> {
    let mut sums: BTreeMap<Region, BTreeMap<i32, (f64, f64)>> = BTreeMap::new();
    for p in &table.periods {
        for r in Region::ALL {
            sums.entry(r).or_default().insert(p.period, (0.0, 0.0));
        }
        for row in &p.rows {
            let Some(info) = cities.get(&row.city) else { continue };
            let slot = sums.get_mut(&info.region).and_then(|m| m.get_mut(&p.period)).expect("seeded above");
            slot.0 += row.pagerank_down;
            slot.1 += row.pagerank_up;
        }
    }
    let mut points = Vec::new();
    for (region, by_year) in &sums {
        let down: Vec<(i32, f64)> = by_year.iter().map(|(&y, v)| (y, v.0)).collect();
        let up: Vec<(i32, f64)> = by_year.iter().map(|(&y, v)| (y, v.1)).collect();
        let (down, up) = (smooth_two_year(&down)?, smooth_two_year(&up)?);
        for (d, u) in down.iter().zip(&up) {
            points.push(RegionPoint { region: *region, year: d.0, downstream: d.1, upstream: u.1 });
        }
    }
    if points.is_empty() {
        return Ok(points);
    }
    let down = normalize_to_max(&points.iter().map(|p| p.downstream).collect::<Vec<_>>())?;
    let up = normalize_to_max(&points.iter().map(|p| p.upstream).collect::<Vec<_>>())?;
    for (p, (d, u)) in points.iter_mut().zip(down.into_iter().zip(up)) {
        p.downstream = d;
        p.upstream = u;
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencePoint {
    pub year: i32,
    pub class: SizeClass,
    pub cities: usize,
    pub doec_mean: Option<f64>,
    pub does_mean: Option<f64>,
}

/// Mean DOEC and DOES per GDP tercile and year. Cities with an undefined
/// ratio are left out of that ratio's mean.
pub fn dependence_by_size(table: &MeasureTable, covariates: &CovariatePanel, cities: &CityDirectory) -> Vec<DependencePoint> {
    let mut out = Vec::new();
    for p in &table.periods {
        let terciles = gdp_terciles(covariates, cities, p.period);
        for class in SizeClass::ALL {
            let rows: Vec<_> = p.rows.iter().filter(|r| terciles.classes.get(&r.city) == Some(&class)).collect();
            let mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            out.push(DependencePoint {
                year: p.period,
                class,
                cities: rows.len(),
                doec_mean: mean(rows.iter().filter_map(|r| r.doec).collect()),
                does_mean: mean(rows.iter().filter_map(|r| r.does).collect()),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub city: CityId,
    pub year: i32,
    pub log_gdp: f64,
    pub centrality: f64,
}

/// Downstream PageRank against log GDP for every city-year present in both
/// tables.
pub fn centrality_gdp_scatter(table: &MeasureTable, covariates: &CovariatePanel) -> Vec<ScatterPoint> {
    let mut out = Vec::new();
    for p in &table.periods {
        for row in &p.rows {
            let Some(gdp) = covariates.get(&row.city, p.period).and_then(|c| c.gdp_cents) else { continue };
            if gdp == 0 {
                continue;
            }
            out.push(ScatterPoint {
                city: row.city.clone(),
                year: p.period,
                log_gdp: (gdp as f64 / 100.0).ln(),
                centrality: row.pagerank_down,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

/// Least-squares line `y = intercept + slope * x`; `None` with fewer than
/// two points or no spread in `x`.
pub fn ols_line(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(LineFit { slope, intercept: my - slope * mx, n })
}

/// Pooled fit first (year left blank), then one fit per year.
pub fn scatter_fits(points: &[ScatterPoint]) -> Vec<(Option<i32>, Option<LineFit>)> {
    let pairs = |it: &mut dyn Iterator<Item = &ScatterPoint>| it.map(|p| (p.log_gdp, p.centrality)).collect::<Vec<_>>();
    let mut fits = vec![(None, ols_line(&pairs(&mut points.iter())))];
    let mut years: Vec<i32> = points.iter().map(|p| p.year).collect();
    years.dedup();
    for y in years {
        fits.push((Some(y), ols_line(&pairs(&mut points.iter().filter(|p| p.year == y)))));
    }
    fits
}

pub fn write_report(
    table: &MeasureTable,
    covariates: &CovariatePanel,
    cities: &CityDirectory,
    dir: &Path,
) -> Result<Option<LineFit>> {
    let mut out = CsvOut::create(dir.join(REGION_SERIES_FILE), &["region", "year", "centrality_down", "centrality_up"])?;
    for p in region_centrality(table, cities)? {
        out.row([p.region.as_str().to_owned(), p.year.to_string(), fmt_float(p.downstream), fmt_float(p.upstream)])?;
    }
    out.finish()?;

    let mut out = CsvOut::create(dir.join(GLOBAL_SERIES_FILE), &["year", "density", "assortativity", "diameter"])?;
    for p in &table.periods {
        let g = &p.global;
        out.row([
            p.period.to_string(),
            fmt_opt(g.density),
            fmt_opt(g.assortativity),
            g.diameter.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    out.finish()?;

    let mut out = CsvOut::create(dir.join(DEPENDENCE_FILE), &["year", "size_class", "cities", "doec_mean", "does_mean"])?;
    for p in dependence_by_size(table, covariates, cities) {
        out.row([
            p.year.to_string(),
            p.class.as_str().to_owned(),
            p.cities.to_string(),
            fmt_opt(p.doec_mean),
            fmt_opt(p.does_mean),
        ])?;
    }
    out.finish()?;

    let points = centrality_gdp_scatter(table, covariates);
    let mut out = CsvOut::create(dir.join(SCATTER_FILE), &["city_id", "year", "log_gdp", "pagerank_down"])?;
    for p in &points {
        out.row([p.city.to_string(), p.year.to_string(), fmt_float(p.log_gdp), fmt_float(p.centrality)])?;
    }
    out.finish()?;

    let fits = scatter_fits(&points);
    let mut out = CsvOut::create(dir.join(SCATTER_FIT_FILE), &["year", "n", "slope", "intercept"])?;
    for (year, fit) in &fits {
        out.row([
            year.map(|y| y.to_string()).unwrap_or_default(),
            fit.map(|f| f.n).unwrap_or(0).to_string(),
            fmt_opt(fit.map(|f| f.slope)),
            fmt_opt(fit.map(|f| f.intercept)),
        ])?;
    }
    out.finish()?;
    Ok(fits[0].1)
}
