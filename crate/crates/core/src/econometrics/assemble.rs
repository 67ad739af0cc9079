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

//! Joins network measures, covariates, concentration indices and court
//! efficiency into the regression panel.

use std::collections::{BTreeMap, HashMap};

use super::{PanelDataset, PanelRow};
use crate::concentration::HhiRow;
use crate::dea::DeaScores;
use crate::ingest::{CityDirectory, CovariatePanel};
use crate::netmeasure::MeasureTable;
use crate::types::CityId;

pub const OUTCOMES: [&str; 6] = ["pagerank_down", "pagerank_up", "in_degree", "out_degree", "total_received", "total_paid"];

pub const REGRESSORS: [&str; 10] = [
    "log_gdp",
    "exports_over_gdp",
    "credit_over_gdp",
    "gini",
    "doec",
    "does",
    "hdi",
    "courts_efficiency",
    "hhi_bank",
    "hhi_jobs",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledPanel {
    pub panel: PanelDataset,
    /// Dropped rows keyed by the first reason that disqualified them.
    pub deletions: BTreeMap<String, usize>,
}

impl AssembledPanel {
    pub fn deleted(&self) -> usize {
        self.deletions.values().sum()
    }
}

/// Inner join on (city, year) with listwise deletion.
///
/// Court efficiency is a state-level score per year and is copied to every
/// city of the state. Strength outcomes are expressed in currency units and
/// GDP enters as its natural logarithm in currency units.
pub fn assemble_panel(
    measures: &MeasureTable,
    covariates: &CovariatePanel,
    hhi: &[HhiRow],
    dea: &BTreeMap<i32, DeaScores>,
    cities: &CityDirectory,
) -> AssembledPanel {
    let hhi: HashMap<(&CityId, i32), &HhiRow> = hhi.iter().map(|h| ((&h.city, h.year), h)).collect();
    let mut deletions: BTreeMap<String, usize> = BTreeMap::new();
    let mut drop = |reason: &str| *deletions.entry(reason.to_owned()).or_insert(0) += 1;
    let mut panel = PanelDataset::new(
        OUTCOMES.iter().map(|s| s.to_string()).collect(),
        REGRESSORS.iter().map(|s| s.to_string()).collect(),
    );

    for p in &measures.periods {
        for m in &p.rows {
            if covariates.get(&m.city, p.period).is_none() {
                drop("missing covariates");
            }
        }
    }

    for cov in covariates.rows() {
        let Some(info) = cities.get(&cov.city) else {
            drop("unknown city");
            continue;
        };
        let Some(m) = measures.get(&cov.city, cov.year) else {
            drop("missing measures");
            continue;
        };
        let Some(gdp) = cov.gdp_cents else {
            drop("missing gdp");
            continue;
        };
        if gdp == 0 {
            drop("non-positive gdp");
            continue;
        }
        let h = hhi.get(&(&cov.city, cov.year));
        let efficiency = dea
            .get(&cov.year)
            .and_then(|s| s.get(&info.state))
            .and_then(|s| s.efficiency);
        let candidates: [(&str, Option<f64>); 10] = [
            ("log_gdp", Some((gdp as f64 / 100.0).ln())),
            ("exports_over_gdp", cov.exports_over_gdp),
            ("credit_over_gdp", cov.credit_over_gdp),
            ("gini", cov.gini),
            ("doec", m.doec),
            ("does", m.does),
            ("hdi", cov.hdi),
            ("courts_efficiency", efficiency),
            ("hhi_bank", h.and_then(|h| h.hhi_bank_credit)),
            ("hhi_jobs", h.and_then(|h| h.hhi_jobs)),
        ];
        if let Some((name, _)) = candidates.iter().find(|(_, v)| v.is_none()) {
            drop(&format!("missing {name}"));
            continue;
        }
        let regressors = candidates.iter().map(|(_, v)| v.expect("checked")).collect();
        let outcomes = vec![
            m.pagerank_down,
            m.pagerank_up,
            m.in_degree as f64,
            m.out_degree as f64,
            m.total_received as f64 / 100.0,
            m.total_paid as f64 / 100.0,
        ];
        panel
            .push(PanelRow { city: cov.city.clone(), year: cov.year, region: info.region, outcomes, regressors })
            .expect("assembled row is complete and finite");
    }
    AssembledPanel { panel, deletions }
}
