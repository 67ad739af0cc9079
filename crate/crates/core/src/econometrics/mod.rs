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

//! City-year panel regression with region×year fixed effects and
//! city-clustered standard errors.

mod assemble;
mod fit;

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

pub use assemble::{assemble_panel, AssembledPanel, OUTCOMES, REGRESSORS};
pub use fit::{fit_fe_ols, write_regression, FeRegressionFit, FitOptions};

use crate::error::{Error, Result};
use crate::output::{fmt_float, CsvOut};
use crate::types::{CityId, Region};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconError {
    #[error("variable {0} has zero variance")]
    ZeroVariance(String),
    #[error("variable {name} needs at least 2 observations, found {found}")]
    TooFewObservations { name: String, found: usize },
    #[error("collinear regressors: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("need at least 2 clusters, found {0}")]
    TooFewClusters(usize),
    #[error("{n} observations cannot identify {k} parameters")]
    TooFewDegreesOfFreedom { n: usize, k: usize },
    #[error("unknown outcome {0}")]
    UnknownOutcome(String),
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
}

/// Fixed-effect cell: one region in one year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub region: Region,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub city: CityId,
    pub year: i32,
    pub region: Region,
    pub outcomes: Vec<f64>,
    pub regressors: Vec<f64>,
}

impl PanelRow {
    pub fn group(&self) -> GroupKey {
        GroupKey { region: self.region, year: self.year }
    }
}

/// Complete-case panel: every cell is a finite number.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    outcome_names: Vec<String>,
    regressor_names: Vec<String>,
    rows: Vec<PanelRow>,
}

impl PanelDataset {
    pub fn new(outcome_names: Vec<String>, regressor_names: Vec<String>) -> Self {
        PanelDataset { outcome_names, regressor_names, rows: Vec::new() }
    }

    pub fn push(&mut self, row: PanelRow) -> Result<(), EconError> {
        let index = self.rows.len();
        if row.outcomes.len() != self.outcome_names.len() || row.regressors.len() != self.regressor_names.len() {
            return Err(EconError::BadRow { row: index, message: "wrong number of values".into() });
        }
        if row.outcomes.iter().chain(&row.regressors).any(|v| !v.is_finite()) {
            return Err(EconError::BadRow { row: index, message: "non-finite value".into() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn outcome_names(&self) -> &[String] {
        &self.outcome_names
    }

    pub fn regressor_names(&self) -> &[String] {
        &self.regressor_names
    }

    pub fn outcome_index(&self, name: &str) -> Option<usize> {
        self.outcome_names.iter().position(|n| n == name)
    }

    pub fn outcome(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.outcome_index(name)?;
        Some(self.rows.iter().map(|r| r.outcomes[k]).collect())
    }

    pub fn regressor(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.regressors[k]).collect()
    }

    /// Row indices per fixed-effect cell.
    pub fn groups(&self) -> BTreeMap<GroupKey, Vec<usize>> {
        let mut g: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            g.entry(r.group()).or_default().push(i);
        }
        g
    }

    /// Row indices per city.
    pub fn clusters(&self) -> BTreeMap<CityId, Vec<usize>> {
        let mut c: BTreeMap<CityId, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            c.entry(r.city.clone()).or_default().push(i);
        }
        c
    }
}

/// `(v - mean) / sd` with the `n - 1` sample standard deviation.
pub fn zscore(name: &str, values: &[f64]) -> Result<Vec<f64>, EconError> {
    let n = values.len();
    if n < 2 {
        return Err(EconError::TooFewObservations { name: name.to_owned(), found: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n as f64 - 1.0)).sqrt();
    if !(sd > 0.0) || sd <= f64::EPSILON * mean.abs() {
        return Err(EconError::ZeroVariance(name.to_owned()));
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Subtracts each fixed-effect cell's mean from a column.
pub(crate) fn demean_column(values: &[f64], groups: &BTreeMap<GroupKey, Vec<usize>>) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for members in groups.values() {
        if members.len() == 1 {
            continue;
        }
        let mean = members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64;
        for &i in members {
            out[i] = values[i] - mean;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemeanedPanel {
    pub panel: PanelDataset,
    /// Cells holding a single row; those rows become all zeros.
    pub singleton_groups: Vec<GroupKey>,
}

/// Within transformation over region×year cells, applied to every outcome
/// and regressor column.
pub fn within_demean(panel: &PanelDataset) -> DemeanedPanel {
    let groups = panel.groups();
    let mut out = panel.clone();
    for k in 0..panel.outcome_names.len() {
        let col: Vec<f64> = panel.rows.iter().map(|r| r.outcomes[k]).collect();
        for (row, v) in out.rows.iter_mut().zip(demean_column(&col, &groups)) {
            row.outcomes[k] = v;
        }
    }
    for k in 0..panel.regressor_names.len() {
        let col = panel.regressor(k);
        for (row, v) in out.rows.iter_mut().zip(demean_column(&col, &groups)) {
            row.regressors[k] = v;
        }
    }
    let singleton_groups = groups.iter().filter(|(_, m)| m.len() == 1).map(|(k, _)| *k).collect();
    DemeanedPanel { panel: out, singleton_groups }
}

const OUTCOME_PREFIX: &str = "y_";

/// Writes the panel as `city_id,year,region,y_<outcome>...,<regressor>...`.
pub fn write_panel(panel: &PanelDataset, path: &Path) -> Result<()> {
    let mut header = vec!["city_id".to_owned(), "year".to_owned(), "region".to_owned()];
    header.extend(panel.outcome_names.iter().map(|n| format!("{OUTCOME_PREFIX}{n}")));
    header.extend(panel.regressor_names.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = CsvOut::create(path, &header_refs)?;
    for r in &panel.rows {
        let mut fields = vec![r.city.to_string(), r.year.to_string(), r.region.to_string()];
        fields.extend(r.outcomes.iter().chain(&r.regressors).map(|&v| format!("{v:?}")));
        out.row(fields)?;
    }
    out.finish()
}

/// Reads a panel written by [`write_panel`]. Columns prefixed `y_` are
/// outcomes; the rest after `region` are regressors. Values are read back
/// bit-exactly.
pub fn read_panel(path: &Path) -> Result<PanelDataset> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.len() < 4 || &header[0] != "city_id" || &header[1] != "year" || &header[2] != "region" {
        return Err(Error::format(path, "panel header must start with city_id,year,region"));
    }
    let mut outcome_cols = Vec::new();
    let mut regressor_cols = Vec::new();
    for (k, name) in header.iter().enumerate().skip(3) {
        match name.strip_prefix(OUTCOME_PREFIX) {
            Some(o) => outcome_cols.push((k, o.to_owned())),
            None => regressor_cols.push((k, name.to_owned())),
        }
    }
    let mut panel = PanelDataset::new(
        outcome_cols.iter().map(|c| c.1.clone()).collect(),
        regressor_cols.iter().map(|c| c.1.clone()).collect(),
    );
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |what: &str| Error::format(path, format!("data row {}: bad {what}", line + 1));
        let num = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(&header[k]));
        let row = PanelRow {
            city: CityId::new(&rec[0]),
            year: rec[1].parse().map_err(|_| bad("year"))?,
            region: rec[2].parse().map_err(|_| bad("region"))?,
            outcomes: outcome_cols.iter().map(|c| num(c.0)).collect::<Result<_>>()?,
            regressors: regressor_cols.iter().map(|c| num(c.0)).collect::<Result<_>>()?,
        };
        panel.push(row)?;
    }
    Ok(panel)
}

/// `regression_meta.csv` row per fit.
pub fn write_regression_meta(fits: &[FeRegressionFit], path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, &["outcome", "n_obs", "n_groups", "n_clusters", "r2"])?;
    for f in fits {
        out.row([
            f.outcome.clone(),
            f.n_obs.to_string(),
            f.n_groups.to_string(),
            f.n_clusters.to_string(),
            fmt_float(f.r2_within),
        ])?;
    }
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscore_examples() {
        assert_eq!(zscore("v", &[1.0, 2.0, 3.0]).unwrap(), vec![-1.0, 0.0, 1.0]);
        let z = zscore("v", &[3.0, -1.0, 4.0, 1.0, 5.0, 9.0]).unwrap();
        let again = zscore("v", &z).unwrap();
        for (a, b) in z.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(zscore("flat", &[2.0, 2.0, 2.0]), Err(EconError::ZeroVariance("flat".into())));
        assert!(matches!(zscore("one", &[2.0]), Err(EconError::TooFewObservations { .. })));
    }

    fn small_panel() -> PanelDataset {
        let mut p = PanelDataset::new(vec!["y".into()], vec!["x".into(), "c".into()]);
        let rows = [
            ("a", Region::North, 1.0, 2.0, 5.0),
            ("b", Region::North, 3.0, 1.0, 5.0),
            ("c", Region::South, 4.0, 7.0, 1.0),
            ("d", Region::South, 8.0, 3.0, 1.0),
            ("e", Region::South, 0.0, 2.0, 1.0),
            ("f", Region::Midwest, 6.0, 6.0, 9.0),
        ];
        for (city, region, y, x, c) in rows {
            p.push(PanelRow { city: city.into(), year: 2010, region, outcomes: vec![y], regressors: vec![x, c] })
                .unwrap();
        }
        p
    }

    #[test]
    fn demeaning_zeroes_group_means() {
        let d = within_demean(&small_panel());
        assert_eq!(d.singleton_groups, vec![GroupKey { region: Region::Midwest, year: 2010 }]);
        for members in d.panel.groups().values() {
            for k in 0..2 {
                let mean: f64 = members.iter().map(|&i| d.panel.rows()[i].regressors[k]).sum::<f64>();
                assert!(mean.abs() < 1e-10);
            }
        }
        // Constant within its group, so it vanishes entirely.
        assert!(d.panel.regressor(1).iter().all(|&v| v == 0.0));
        assert_eq!(d.panel.rows()[5].outcomes[0], 0.0);
        assert_eq!(d.panel.rows()[0].outcomes[0], -1.0);
    }

    #[test]
    fn panel_rejects_bad_rows() {
        let mut p = PanelDataset::new(vec!["y".into()], vec!["x".into()]);
        let row = |x: f64| PanelRow { city: "a".into(), year: 1, region: Region::North, outcomes: vec![1.0], regressors: vec![x] };
        assert!(p.push(row(f64::NAN)).is_err());
        let mut short = row(1.0);
        short.regressors.clear();
        assert!(p.push(short).is_err());
        assert!(p.push(row(1.0)).is_ok());
    }

    #[test]
    fn panel_file_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = small_panel();
        p.rows[0].regressors[0] = 0.1 + 0.2;
        let path = dir.path().join("panel.csv");
        write_panel(&p, &path).unwrap();
        assert_eq!(read_panel(&path).unwrap(), p);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("city_id,year,region,y_y,x,c\n"));
    }
}
