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

//! Network measures of the yearly city graphs.

mod dependence;
mod pagerank;
mod series;
mod structure;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

pub use dependence::{dependence_measures, Dependence};
pub use pagerank::{centrality_both, pagerank, PageRank, PageRankConfig, Weighting};
pub use series::{gdp_terciles, normalize_to_max, rank_measure, smooth_two_year, RankEntry, SizeClass, Terciles};
pub use structure::{assortativity, degrees_strengths, density, diameter, DegreeMode, NodeFlows};

use crate::error::{Error, Result};
use crate::netbuild::{oriented, FlowGraph};
use crate::output::{fmt_float, fmt_opt, CsvOut};
use crate::types::{CityId, Orientation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("graph is empty")]
    EmptyGraph,
    #[error("needs at least {needed} nodes, found {found}")]
    TooFewNodes { needed: usize, found: usize },
    #[error("needs at least {needed} edges, found {found}")]
    TooFewEdges { needed: usize, found: usize },
    #[error("degree sequence has zero variance")]
    DegenerateVariance,
    #[error("no positive value to normalize by")]
    NoPositiveValue,
    #[error("years not consecutive: {found} follows {after}")]
    NonConsecutiveYears { after: i32, found: i32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasureConfig {
    pub pagerank: PageRankConfig,
    pub assortativity: DegreeMode,
    /// Orientation the graph is turned into before measuring.
    pub orientation: OrientationChoice,
}

/// Newtype so that [`MeasureConfig`] can default to money flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientationChoice(pub Orientation);

impl Default for OrientationChoice {
    fn default() -> Self {
        OrientationChoice(Orientation::MoneyFlow)
    }
}

/// One city in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRow {
    pub city: CityId,
    pub in_degree: usize,
    pub out_degree: usize,
    pub total_received: u64,
    pub total_paid: u64,
    pub pagerank_down: f64,
    pub pagerank_up: f64,
    pub doec: Option<f64>,
    pub does: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalMeasures {
    pub period: i32,
    pub density: Option<f64>,
    pub assortativity: Option<f64>,
    pub diameter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodMeasures {
    pub period: i32,
    /// Ordered by city identifier.
    pub rows: Vec<MeasureRow>,
    pub global: GlobalMeasures,
    /// Both PageRank runs met the tolerance.
    pub converged: bool,
}

impl PeriodMeasures {
    pub fn row(&self, city: &CityId) -> Option<&MeasureRow> {
        self.rows
            .binary_search_by(|r| r.city.cmp(city))
            .ok()
            .map(|i| &self.rows[i])
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasureTable {
    pub periods: Vec<PeriodMeasures>,
}

impl MeasureTable {
    pub fn period(&self, year: i32) -> Option<&PeriodMeasures> {
        self.periods.iter().find(|p| p.period == year)
    }

    pub fn get(&self, city: &CityId, year: i32) -> Option<&MeasureRow> {
        self.period(year).and_then(|p| p.row(city))
    }
}

/// Every measure for one graph. Global measures that are undefined on this
/// graph (too small, degenerate degrees) are recorded as `None`.
pub fn compute_period_measures(g: &FlowGraph, cfg: &MeasureConfig) -> Result<PeriodMeasures, MeasureError> {
    let g = oriented(g, cfg.orientation.0);
    let global = GlobalMeasures {
        period: g.period(),
        density: density(&g).ok(),
        assortativity: assortativity(&g, cfg.assortativity).ok(),
        diameter: diameter(&g).ok(),
    };
    if g.is_empty() {
        return Ok(PeriodMeasures { period: g.period(), rows: Vec::new(), global, converged: true });
    }
    let flows = degrees_strengths(&g);
    let (down, up) = centrality_both(&g, &cfg.pagerank)?;
    let dep = dependence_measures(&g);
    let rows = g
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, city)| MeasureRow {
            city: city.clone(),
            in_degree: flows[i].in_degree,
            out_degree: flows[i].out_degree,
            total_received: flows[i].total_received,
            total_paid: flows[i].total_paid,
            pagerank_down: down.scores[i],
            pagerank_up: up.scores[i],
            doec: dep[i].doec,
            does: dep[i].does,
        })
        .collect();
    Ok(PeriodMeasures { period: g.period(), rows, global, converged: down.converged && up.converged })
}

/// Measures for every period, computed in parallel, returned in input order.
pub fn compute_measures(graphs: &[FlowGraph], cfg: &MeasureConfig) -> Result<MeasureTable, MeasureError> {
    let periods = graphs
        .par_iter()
        .map(|g| compute_period_measures(g, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MeasureTable { periods })
}

pub const MEASURES_HEADER: [&str; 9] = [
    "city_id",
    "in_degree",
    "out_degree",
    "total_received_cents",
    "total_paid_cents",
    "pagerank_down",
    "pagerank_up",
    "doec",
    "does",
];
pub const GLOBAL_HEADER: [&str; 4] = ["year", "density", "assortativity", "diameter"];

/// Writes `measures_<year>.csv` and `global_<year>.csv` per period.
pub fn write_measures(table: &MeasureTable, dir: &Path) -> Result<()> {
    for p in &table.periods {
        let mut out = CsvOut::create(dir.join(format!("measures_{}.csv", p.period)), &MEASURES_HEADER)?;
        for r in &p.rows {
            out.row([
                r.city.to_string(),
                r.in_degree.to_string(),
                r.out_degree.to_string(),
                r.total_received.to_string(),
                r.total_paid.to_string(),
                fmt_float(r.pagerank_down),
                fmt_float(r.pagerank_up),
                fmt_opt(r.doec),
                fmt_opt(r.does),
            ])?;
        }
        out.finish()?;
        let mut out = CsvOut::create(dir.join(format!("global_{}.csv", p.period)), &GLOBAL_HEADER)?;
        let g = &p.global;
        out.row([
            p.period.to_string(),
            fmt_opt(g.density),
            fmt_opt(g.assortativity),
            g.diameter.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
        out.finish()?;
    }
    Ok(())
}

/// Reads back every `measures_<year>.csv` / `global_<year>.csv` pair in
/// `dir`, ordered by year.
pub fn read_measures(dir: &Path) -> Result<MeasureTable> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut years = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(y) = name.strip_prefix("measures_").and_then(|s| s.strip_suffix(".csv")) {
            if let Ok(y) = y.parse::<i32>() {
                years.push(y);
            }
        }
    }
    years.sort_unstable();
    if years.is_empty() {
        return Err(Error::format(dir, "no measures_<year>.csv files"));
    }
    let mut periods = Vec::new();
    for year in years {
        let path = dir.join(format!("measures_{year}.csv"));
        let mut rows = Vec::new();
        for rec in read_records(&path, &MEASURES_HEADER)? {
            let bad = |what: &str| Error::format(&path, format!("bad {what} in row for city {}", &rec[0]));
            let int = |k: usize, what: &str| rec[k].parse::<u64>().map_err(|_| bad(what));
            let float = |k: usize, what: &str| rec[k].parse::<f64>().map_err(|_| bad(what));
            let opt = |k: usize, what: &str| match &rec[k] {
                "" => Ok(None),
                s => s.parse::<f64>().map(Some).map_err(|_| bad(what)),
            };
            rows.push(MeasureRow {
                city: CityId::new(&rec[0]),
                in_degree: int(1, "in_degree")? as usize,
                out_degree: int(2, "out_degree")? as usize,
                total_received: int(3, "total_received_cents")?,
                total_paid: int(4, "total_paid_cents")?,
                pagerank_down: float(5, "pagerank_down")?,
                pagerank_up: float(6, "pagerank_up")?,
                doec: opt(7, "doec")?,
                does: opt(8, "does")?,
            });
        }
        rows.sort_by(|a, b| a.city.cmp(&b.city));
        let gpath = dir.join(format!("global_{year}.csv"));
        let grecs = read_records(&gpath, &GLOBAL_HEADER)?;
        let rec = grecs.first().ok_or_else(|| Error::format(&gpath, "missing row"))?;
        let opt = |s: &str| s.parse::<f64>().ok();
        let global = GlobalMeasures {
            period: year,
            density: opt(&rec[1]),
            assortativity: opt(&rec[2]),
            diameter: rec[3].parse().ok(),
        };
        periods.push(PeriodMeasures { period: year, rows, global, converged: true });
    }
    Ok(MeasureTable { periods })
}

pub(crate) fn read_records(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let found = rdr.headers().map_err(|e| Error::csv(path, e))?;
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::format(path, format!("expected header `{}`", header.join(","))));
    }
    rdr.records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Error::csv(path, e))
}

/// Per-city values of one named measure column for one period.
pub fn measure_values(p: &PeriodMeasures, measure: &str) -> Option<Vec<(CityId, f64)>> {
    let pick: fn(&MeasureRow) -> Option<f64> = match measure {
        "in_degree" => |r| Some(r.in_degree as f64),
        "out_degree" => |r| Some(r.out_degree as f64),
        "total_received" | "total_received_cents" => |r| Some(r.total_received as f64),
        "total_paid" | "total_paid_cents" => |r| Some(r.total_paid as f64),
        "pagerank_down" => |r| Some(r.pagerank_down),
        "pagerank_up" => |r| Some(r.pagerank_up),
        "doec" => |r| r.doec,
        "does" => |r| r.does,
        _ => return None,
    };
    Some(p.rows.iter().filter_map(|r| pick(r).map(|v| (r.city.clone(), v))).collect())
}

/// Global measure lookup keyed by year.
pub fn global_series(table: &MeasureTable) -> BTreeMap<i32, GlobalMeasures> {
    table.periods.iter().map(|p| (p.period, p.global)).collect()
}
