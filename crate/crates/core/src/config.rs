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

//! `key=value` run configuration shared by every stage.

use std::path::Path;

use crate::dea::ReturnsToScale;
use crate::error::{Error, Result};
use crate::netmeasure::{MeasureConfig, OrientationChoice, Weighting};
use crate::output::fmt_float;
use crate::synth::SynthConfig;
use crate::types::YearRange;

pub const DEFAULT_TOP_K: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Generator settings. `years` doubles as the study window.
    pub synth: SynthConfig,
    pub measures: MeasureConfig,
    pub top_k: usize,
    pub rank_measure: String,
    pub returns_to_scale: ReturnsToScale,
    pub standardize_outcome: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            synth: SynthConfig::default(),
            measures: MeasureConfig::default(),
            top_k: DEFAULT_TOP_K,
            rank_measure: "pagerank_down".into(),
            returns_to_scale: ReturnsToScale::default(),
            standardize_outcome: true,
        }
    }
}

impl RunConfig {
    pub fn years(&self) -> YearRange {
        self.synth.years
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if self.synth.set(key, value)? {
            return Ok(());
        }
        let value = value.trim();
        let bad = || Error::Config(format!("{key}: cannot use {value:?}"));
        let pr = &mut self.measures.pagerank;
        match key {
            "damping" => {
                pr.damping = value.parse().ok().filter(|d: &f64| *d > 0.0 && *d < 1.0).ok_or_else(bad)?;
            }
            "tol" => pr.tol = value.parse().ok().filter(|t: &f64| *t > 0.0).ok_or_else(bad)?,
            "max_iter" => pr.max_iter = value.parse().map_err(|_| bad())?,
            "weighting" => {
                pr.weighting = match value {
                    "volume" => Weighting::Volume,
                    "uniform" => Weighting::Uniform,
                    _ => return Err(bad()),
                }
            }
            "assortativity" => self.measures.assortativity = value.parse().map_err(|_| bad())?,
            "orientation" => self.measures.orientation = OrientationChoice(value.parse().map_err(|_| bad())?),
            "top_k" => self.top_k = value.parse().map_err(|_| bad())?,
            "rank_measure" => self.rank_measure = value.to_owned(),
            "returns_to_scale" => self.returns_to_scale = value.parse().map_err(|_| bad())?,
            "standardize_outcome" => {
                self.standardize_outcome = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    _ => return Err(bad()),
                }
            }
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Reads `key=value` lines; blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let pr = &self.measures.pagerank;
        let mut pairs = self.synth.to_pairs();
        let weighting = match pr.weighting {
            Weighting::Volume => "volume",
            Weighting::Uniform => "uniform",
        };
        pairs.extend(
            [
                ("damping", fmt_float(pr.damping)),
                ("tol", format!("{:e}", pr.tol)),
                ("max_iter", pr.max_iter.to_string()),
                ("weighting", weighting.to_owned()),
                ("assortativity", self.measures.assortativity.as_str().to_owned()),
                ("orientation", self.measures.orientation.0.as_str().to_owned()),
                ("top_k", self.top_k.to_string()),
                ("rank_measure", self.rank_measure.clone()),
                ("returns_to_scale", self.returns_to_scale.as_str().to_owned()),
                ("standardize_outcome", self.standardize_outcome.to_string()),
            ]
            .map(|(k, v)| (k.to_owned(), v)),
        );
        pairs
    }
}
