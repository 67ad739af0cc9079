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

//! Output-oriented data envelopment analysis.
//!
//! For each decision-making unit `o` the solver finds the largest factor
//! `φ` by which `o`'s outputs could be expanded while some non-negative
//! combination `λ` of observed units uses no more of any input:
//!
//! ```text
//! max φ
//!   Σ_j λ_j x_kj <= x_ko        every input k
//!   Σ_j λ_j y_rj >= φ y_ro      every output r
//!   Σ_j λ_j <= 1                non-increasing returns to scale
//!   λ >= 0
//! ```
//!
//! Efficiency is reported as `1/φ`. Each input and output column is divided
//! by its maximum before the LPs are built; the optimum is unaffected and
//! the tableau stays well scaled when inputs are money amounts in cents.

pub mod lp;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

pub use lp::{solve_lp, LinearProgram, LpError, LpSolution, LpStatus, Relation, Sense, SolverOptions};

use crate::error::{Error, Result};
use crate::ingest::{CityDirectory, CovariatePanel};
use crate::netmeasure::read_records;
use crate::output::{fmt_float, CsvOut};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeaError {
    #[error("invalid DEA instance: {0}")]
    InvalidInstance(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReturnsToScale {
    /// `Σ λ <= 1`.
    #[default]
    NonIncreasing,
    /// No restriction on `Σ λ`.
    Constant,
    /// `Σ λ = 1`.
    Variable,
}

impl ReturnsToScale {
    pub fn as_str(self) -> &'static str {
        match self {
            ReturnsToScale::NonIncreasing => "nirs",
            ReturnsToScale::Constant => "crs",
            ReturnsToScale::Variable => "vrs",
        }
    }
}

impl std::str::FromStr for ReturnsToScale {
    type Err = crate::error::ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "nirs" => Ok(ReturnsToScale::NonIncreasing),
            "crs" => Ok(ReturnsToScale::Constant),
            "vrs" => Ok(ReturnsToScale::Variable),
            other => Err(crate::error::ParseValueError(format!("unknown returns to scale {other:?}"))),
        }
    }
}

/// Inputs and outputs of a set of decision-making units.
#[derive(Debug, Clone, PartialEq)]
pub struct DeaInstance {
    units: Vec<String>,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
}

impl DeaInstance {
    /// Inputs must be strictly positive; outputs non-negative with at least
    /// one positive output per unit.
    pub fn new(units: Vec<String>, inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Result<Self, DeaError> {
        let bad = |m: String| Err(DeaError::InvalidInstance(m));
        if units.is_empty() {
            return bad("no units".into());
        }
        if inputs.len() != units.len() || outputs.len() != units.len() {
            return bad("inputs/outputs do not match the unit count".into());
        }
        let (k, r) = (inputs[0].len(), outputs[0].len());
        if k == 0 || r == 0 {
            return bad("need at least one input and one output".into());
        }
        for (j, unit) in units.iter().enumerate() {
            if inputs[j].len() != k || outputs[j].len() != r {
                return bad(format!("unit {unit}: inconsistent dimensions"));
            }
            if inputs[j].iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return bad(format!("unit {unit}: inputs must be strictly positive"));
            }
            if outputs[j].iter().any(|&y| !(y.is_finite() && y >= 0.0)) {
                return bad(format!("unit {unit}: outputs must be non-negative"));
            }
            if outputs[j].iter().all(|&y| y == 0.0) {
                return bad(format!("unit {unit}: needs a positive output"));
            }
        }
        Ok(DeaInstance { units, inputs, outputs })
    }

    /// Courts: inputs (backlog, expenditures), output completed cases.
    pub fn courts(rows: Vec<(String, f64, f64, f64)>) -> Result<Self, DeaError> {
        let units = rows.iter().map(|r| r.0.clone()).collect();
        let inputs = rows.iter().map(|r| vec![r.1, r.2]).collect();
        let outputs = rows.iter().map(|r| vec![r.3]).collect();
        DeaInstance::new(units, inputs, outputs)
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeaScore {
    pub unit: String,
    /// Output expansion factor, `>= 1`. `None` when the LP failed.
    pub phi: Option<f64>,
    pub efficiency: Option<f64>,
    pub status: LpStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeaScores {
    pub scores: Vec<DeaScore>,
    pub returns_to_scale: ReturnsToScale,
}

impl DeaScores {
    pub fn get(&self, unit: &str) -> Option<&DeaScore> {
        self.scores.iter().find(|s| s.unit == unit)
    }
}

fn column_max(rows: &[Vec<f64>], k: usize) -> f64 {
    rows.iter().map(|r| r[k]).fold(0.0, f64::max)
}

/// The envelopment LP of unit `o`; variables are `(φ, λ_1, …, λ_n)`.
pub fn envelopment_lp(inst: &DeaInstance, o: usize, rts: ReturnsToScale) -> LinearProgram {
    let n = inst.len();
    let k_in = inst.inputs[0].len();
    let k_out = inst.outputs[0].len();
    let in_scale: Vec<f64> = (0..k_in).map(|k| column_max(&inst.inputs, k)).collect();
    let out_scale: Vec<f64> = (0..k_out).map(|r| column_max(&inst.outputs, r)).collect();

    let mut objective = vec![0.0; n + 1];
    objective[0] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    for k in 0..k_in {
        let mut row = vec![0.0; n + 1];
        for j in 0..n {
            row[j + 1] = inst.inputs[j][k] / in_scale[k];
        }
        lp = lp.constrain(row, Relation::Le, inst.inputs[o][k] / in_scale[k]);
    }
    for r in 0..k_out {
        let mut row = vec![0.0; n + 1];
        row[0] = inst.outputs[o][r] / out_scale[r];
        for j in 0..n {
            row[j + 1] = -inst.outputs[j][r] / out_scale[r];
        }
        lp = lp.constrain(row, Relation::Le, 0.0);
    }
    let mut sum_row = vec![1.0; n + 1];
    sum_row[0] = 0.0;
    match rts {
        ReturnsToScale::NonIncreasing => lp.constrain(sum_row, Relation::Le, 1.0),
        ReturnsToScale::Variable => lp.constrain(sum_row, Relation::Eq, 1.0),
        ReturnsToScale::Constant => lp,
    }
}

/// Scores every unit with one independent LP each. A failed LP marks only
/// that unit's score.
pub fn dea_output(inst: &DeaInstance, rts: ReturnsToScale, opts: &SolverOptions) -> DeaScores {
    let scores = (0..inst.len())
        .into_par_iter()
        .map(|o| {
            let lp = envelopment_lp(inst, o, rts);
            let unit = inst.units[o].clone();
            match solve_lp(&lp, opts) {
                Ok(sol) if sol.status == LpStatus::Optimal => {
                    // λ_o = 1 is always feasible, so φ >= 1 up to rounding.
                    let phi = sol.objective.max(1.0);
                    DeaScore { unit, phi: Some(phi), efficiency: Some(1.0 / phi), status: sol.status }
                }
                Ok(sol) => DeaScore { unit, phi: None, efficiency: None, status: sol.status },
                Err(_) => DeaScore { unit, phi: None, efficiency: None, status: LpStatus::NumericalFailure },
            }
        })
        .collect();
    DeaScores { scores, returns_to_scale: rts }
}

/// Output orientation under non-increasing returns to scale.
pub fn dea_output_nirs(inst: &DeaInstance) -> DeaScores {
    dea_output(inst, ReturnsToScale::NonIncreasing, &SolverOptions::default())
}

pub const DEA_UNITS_HEADER: [&str; 4] = ["unit_id", "backlog", "expenditures_cents", "completed_cases"];
pub const DEA_SCORES_HEADER: [&str; 4] = ["unit_id", "phi", "efficiency", "status"];

pub fn read_dea_units(path: &Path) -> Result<DeaInstance> {
    let mut rows = Vec::new();
    for rec in read_records(path, &DEA_UNITS_HEADER)? {
        let num = |k: usize| {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::format(path, format!("unit {}: bad {}", &rec[0], DEA_UNITS_HEADER[k])))
        };
        rows.push((rec[0].trim().to_owned(), num(1)?, num(2)?, num(3)?));
    }
    Ok(DeaInstance::courts(rows)?)
}

pub fn write_dea_units(inst: &DeaInstance, path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, &DEA_UNITS_HEADER)?;
    for (j, unit) in inst.units.iter().enumerate() {
        out.row([
            unit.clone(),
            fmt_float(inst.inputs[j][0]),
            fmt_float(inst.inputs[j][1]),
            fmt_float(inst.outputs[j][0]),
        ])?;
    }
    out.finish()
}

pub fn write_dea_scores(scores: &DeaScores, path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, &DEA_SCORES_HEADER)?;
    for s in &scores.scores {
        out.row([
            s.unit.clone(),
            s.phi.map(fmt_float).unwrap_or_default(),
            s.efficiency.map(fmt_float).unwrap_or_default(),
            s.status.as_str().to_owned(),
        ])?;
    }
    out.finish()
}

/// Reads scores written by [`write_dea_scores`]. The returns-to-scale flag
/// is not stored in the file and must be supplied.
pub fn read_dea_scores(path: &Path, returns_to_scale: ReturnsToScale) -> Result<DeaScores> {
    let mut scores = Vec::new();
    for rec in read_records(path, &DEA_SCORES_HEADER)? {
        let num = |k: usize| -> Result<Option<f64>> {
            match rec[k].trim() {
                "" => Ok(None),
                s => s
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::format(path, format!("unit {}: bad {}", &rec[0], DEA_SCORES_HEADER[k]))),
            }
        };
        let status = LpStatus::ALL
            .into_iter()
            .find(|s| s.as_str() == rec[3].trim())
            .ok_or_else(|| Error::format(path, format!("unit {}: unknown status {:?}", &rec[0], &rec[3])))?;
        scores.push(DeaScore { unit: rec[0].trim().to_owned(), phi: num(1)?, efficiency: num(2)?, status });
    }
    Ok(DeaScores { scores, returns_to_scale })
}

/// State-level court instances, one per year, built by summing the city
/// rows of each state. A state enters a year only when every one of its
/// city rows carries all three court fields and the sums are valid.
pub fn courts_instances(panel: &CovariatePanel, cities: &CityDirectory) -> BTreeMap<i32, DeaInstance> {
    #[derive(Default)]
    struct Acc {
        backlog: f64,
        expenditures: f64,
        completed: f64,
        complete: bool,
    }
    let mut acc: BTreeMap<(i32, String), Acc> = BTreeMap::new();
    for row in panel.rows() {
        let Some(info) = cities.get(&row.city) else { continue };
        let a = acc.entry((row.year, info.state.clone())).or_insert(Acc { complete: true, ..Default::default() });
        match (row.backlog, row.expenditures_cents, row.completed_cases) {
            (Some(b), Some(e), Some(c)) => {
                a.backlog += b as f64;
                a.expenditures += e as f64;
                a.completed += c as f64;
            }
            _ => a.complete = false,
        }
    }
    let mut by_year: BTreeMap<i32, Vec<(String, f64, f64, f64)>> = BTreeMap::new();
    for ((year, state), a) in acc {
        if a.complete && a.backlog > 0.0 && a.expenditures > 0.0 && a.completed > 0.0 {
            by_year.entry(year).or_default().push((state, a.backlog, a.expenditures, a.completed));
        }
    }
    by_year
        .into_iter()
        .filter_map(|(year, rows)| DeaInstance::courts(rows).ok().map(|inst| (year, inst)))
        .collect()
}
