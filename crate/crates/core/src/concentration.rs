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

//! Herfindahl–Hirschman concentration of sectoral bank credit and jobs.

use thiserror::Error;

use crate::ingest::CovariatePanel;
use crate::types::CityId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ConcentrationError {
    #[error("sector total is zero")]
    ZeroTotal,
}

/// Sum of squared sector shares. Ranges over `[1/k, 1]` for `k` sectors.
///
/// Computed as the reduced integer ratio `sum s^2 / (sum s)^2` whenever that
/// fits in 128 bits, so scaling every sector by a common factor leaves the
/// result bit-identical and a uniform split gives exactly `1/k`.
pub fn hhi(sectors: &[u64]) -> Result<f64, ConcentrationError> {
    let total: u128 = sectors.iter().map(|&s| s as u128).sum();
    if total == 0 {
        return Err(ConcentrationError::ZeroTotal);
    }
    let exact = sectors
        .iter()
        .try_fold(0u128, |acc, &s| (s as u128).checked_mul(s as u128).and_then(|sq| acc.checked_add(sq)))
        .zip(total.checked_mul(total));
    if let Some((num, den)) = exact {
        let g = gcd(num, den);
        return Ok((num / g) as f64 / (den / g) as f64);
    }
    let total = total as f64;
    Ok(sectors
        .iter()
        .map(|&s| {
            let share = s as f64 / total;
            share * share
        })
        .sum())
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn hhi_bank_credit(agriculture: u64, manufacturing: u64, services: u64) -> Result<f64, ConcentrationError> {
    hhi(&[agriculture, manufacturing, services])
}

pub fn hhi_jobs(
    manufacturing: u64,
    construction: u64,
    trade: u64,
    services: u64,
    agriculture: u64,
) -> Result<f64, ConcentrationError> {
    hhi(&[manufacturing, construction, trade, services, agriculture])
}

#[derive(Debug, Clone, PartialEq)]
pub struct HhiRow {
    pub city: CityId,
    pub year: i32,
    /// `None` when any sector is missing or the total is zero.
    pub hhi_bank_credit: Option<f64>,
    pub hhi_jobs: Option<f64>,
}

/// One row per covariate row, in panel order.
pub fn compute_hhi(panel: &CovariatePanel) -> Vec<HhiRow> {
    panel
        .rows()
        .map(|row| {
            let credit: Option<Vec<u64>> = row.sector_credit_cents.iter().copied().collect();
            let jobs: Option<Vec<u64>> = row.sector_jobs.iter().copied().collect();
            HhiRow {
                city: row.city.clone(),
                year: row.year,
                hhi_bank_credit: credit.and_then(|c| hhi(&c).ok()),
                hhi_jobs: jobs.and_then(|j| hhi(&j).ok()),
            }
        })
        .collect()
}
