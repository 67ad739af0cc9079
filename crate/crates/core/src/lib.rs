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

//! City-level supply-chain network analytics.
//!
//! Builds directed money-flow graphs between cities from firm-to-firm
//! payments, measures their structure and centrality, scores state court
//! efficiency with DEA, and fits fixed-effects panel regressions with
//! city-clustered errors. A seeded generator stands in for real data.

// NaN has to fail the validity checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod concentration;
pub mod config;
pub mod dea;
pub mod econometrics;
pub mod error;
pub mod ingest;
pub mod netbuild;
pub mod netmeasure;
pub mod output;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod types;

pub use config::RunConfig;
pub use error::{Error, ErrorKind, Result};
pub use types::{CityId, FirmId, Orientation, Region, YearRange};
