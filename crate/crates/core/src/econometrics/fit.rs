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

//! Within-transformed OLS with a CR1 cluster-robust sandwich.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{demean_column, zscore, EconError, PanelDataset};
use crate::error::Result;
use crate::output::{fmt_float, CsvOut};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    /// Z-score the outcome on the estimation sample before fitting.
    pub standardize_outcome: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { standardize_outcome: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeRegressionFit {
    pub outcome: String,
    pub regressors: Vec<String>,
    pub beta: Vec<f64>,
    pub se_cluster: Vec<f64>,
    pub t_stat: Vec<f64>,
    pub n_obs: usize,
    pub n_groups: usize,
    pub n_clusters: usize,
    /// R² of the demeaned regression.
    pub r2_within: f64,
    /// `G/(G−1) · (N−1)/(N−K)`, with `K` counting absorbed cells.
    pub cr_factor: f64,
    pub singleton_groups: usize,
    pub standardized_outcome: bool,
    /// Demeaned-model residuals in row order.
    pub residuals: Vec<f64>,
}

/// Relative residual norm under which a column counts as a combination of
/// the columns before it.
const COLLINEARITY_TOL: f64 = 1e-9;

/// Fits `y = α_{region,year} + Xβ + ε` on a complete-case panel.
///
/// The cell effects are absorbed by demeaning. β comes from a Householder
/// QR of the demeaned design; the covariance is
/// `c · (X'X)⁻¹ (Σ_g X_g' e_g e_g' X_g) (X'X)⁻¹` summed over cities in
/// identifier order, where `c` is [`FeRegressionFit::cr_factor`].
pub fn fit_fe_ols(panel: &PanelDataset, outcome: &str, opts: &FitOptions) -> Result<FeRegressionFit, EconError> {
    let raw_y = panel
        .outcome(outcome)
        .ok_or_else(|| EconError::UnknownOutcome(outcome.to_owned()))?;
    let y = if opts.standardize_outcome { zscore(outcome, &raw_y)? } else { raw_y };
    let n = panel.len();
    let p = panel.regressor_names().len();
    let groups = panel.groups();
    let clusters = panel.clusters();
    if clusters.len() < 2 {
        return Err(EconError::TooFewClusters(clusters.len()));
    }
    let k_total = p + groups.len();
    if n <= k_total {
        return Err(EconError::TooFewDegreesOfFreedom { n, k: k_total });
    }

    let yd = demean_column(&y, &groups);
    let columns: Vec<Vec<f64>> = (0..p).map(|k| demean_column(&panel.regressor(k), &groups)).collect();
    check_rank(&columns, panel.regressor_names())?;

    let x = DMatrix::from_fn(n, p, |i, k| columns[k][i]);
    let yv = DVector::from_vec(yd.clone());
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| EconError::RankDeficient(panel.regressor_names().to_vec()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| EconError::RankDeficient(panel.regressor_names().to_vec()))?;
    let bread = &r_inv * r_inv.transpose();

    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| yd[i] - fitted[i]).collect();

    let mut meat = DMatrix::<f64>::zeros(p, p);
    for members in clusters.values() {
        let mut score = DVector::<f64>::zeros(p);
        for &i in members {
            for k in 0..p {
                score[k] += columns[k][i] * residuals[i];
            }
        }
        meat += &score * score.transpose();
    }
    let g = clusters.len() as f64;
    let nf = n as f64;
    let cr_factor = g / (g - 1.0) * (nf - 1.0) / (nf - k_total as f64);
    let vcov = (&bread * meat * &bread) * cr_factor;

    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let sst: f64 = yd.iter().map(|v| v * v).sum();
    if !(sst > 0.0) {
        return Err(EconError::ZeroVariance(outcome.to_owned()));
    }
    let r2_within = (1.0 - ssr / sst).clamp(0.0, 1.0);

    let beta: Vec<f64> = beta.iter().copied().collect();
    let se_cluster: Vec<f64> = (0..p).map(|k| vcov[(k, k)].max(0.0).sqrt()).collect();
    let t_stat = beta.iter().zip(&se_cluster).map(|(b, s)| b / s).collect();
    Ok(FeRegressionFit {
        outcome: outcome.to_owned(),
        regressors: panel.regressor_names().to_vec(),
        beta,
        se_cluster,
        t_stat,
        n_obs: n,
        n_groups: groups.len(),
        n_clusters: clusters.len(),
        r2_within,
        cr_factor,
        singleton_groups: groups.values().filter(|m| m.len() == 1).count(),
        standardized_outcome: opts.standardize_outcome,
        residuals,
    })
}

/// Modified Gram–Schmidt over the demeaned columns. The first column that
/// is (numerically) a combination of earlier ones is reported together
/// with the earlier columns it depends on.
fn check_rank(columns: &[Vec<f64>], names: &[String]) -> Result<(), EconError> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    // r_cols[j] holds the Gram–Schmidt coefficients of accepted column j.
    let mut accepted: Vec<usize> = Vec::new();
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    for (k, col) in columns.iter().enumerate() {
        let norm0 = dot(col, col).sqrt();
        let mut v = col.clone();
        let mut coeffs = Vec::with_capacity(basis.len());
        for q in &basis {
            let c = dot(q, &v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
            coeffs.push(c);
        }
        let norm = dot(&v, &v).sqrt();
        if norm0 == 0.0 || norm <= COLLINEARITY_TOL * norm0 {
            // Express the column in terms of the accepted ones: solve the
            // triangular system R a = coeffs.
            let m = accepted.len();
            let mut a = vec![0.0; m];
            for i in (0..m).rev() {
                let mut s = coeffs.get(i).copied().unwrap_or(0.0);
                for j in (i + 1)..m {
                    s -= r_cols[j][i] * a[j];
                }
                a[i] = s / r_cols[i][i];
            }
            let mut set: Vec<String> = accepted
                .iter()
                .zip(&a)
                .filter(|(&j, &w)| w.abs() * dot(&columns[j], &columns[j]).sqrt() > 1e-6 * norm0.max(f64::MIN_POSITIVE))
                .map(|(&j, _)| names[j].clone())
                .collect();
            set.push(names[k].clone());
            return Err(EconError::RankDeficient(set));
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        coeffs.push(norm);
        basis.push(v);
        accepted.push(k);
        r_cols.push(coeffs);
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn write_regression(fit: &FeRegressionFit, dir: &Path) -> Result<()> {
    let mut out = CsvOut::create(
        dir.join(format!("regression_{}.csv", fit.outcome)),
        &["regressor", "beta", "se_cluster", "t_stat"],
    )?;
    for k in 0..fit.beta.len() {
        out.row([
            fit.regressors[k].clone(),
            fmt_float(fit.beta[k]),
            fmt_float(fit.se_cluster[k]),
            fmt_float(fit.t_stat[k]),
        ])?;
    }
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econometrics::PanelRow;
    use crate::types::Region;

    fn panel_from(f: impl Fn(usize) -> (f64, Vec<f64>), names: &[&str]) -> PanelDataset {
        let mut p = PanelDataset::new(vec!["y".into()], names.iter().map(|s| s.to_string()).collect());
        for i in 0..60 {
            let (y, x) = f(i);
            p.push(PanelRow {
                city: format!("c{:02}", i % 20).as_str().into(),
                year: 2000 + (i / 20) as i32,
                region: Region::ALL[i % 5],
                outcomes: vec![y],
                regressors: x,
            })
            .unwrap();
        }
        p
    }

    fn wobble(i: usize, k: u64) -> f64 {
        // Deterministic, irregular values.
        (((i as u64 + 3) * 2654435761 * (k + 1)) % 1000) as f64 / 100.0
    }

    #[test]
    fn duplicate_column_is_named() {
        let p = panel_from(|i| (wobble(i, 0), vec![wobble(i, 1), wobble(i, 2), wobble(i, 1)]), &["x1", "x2", "x1_copy"]);
        let err = fit_fe_ols(&p, "y", &FitOptions::default()).unwrap_err();
        assert_eq!(err, EconError::RankDeficient(vec!["x1".into(), "x1_copy".into()]));
    }

    #[test]
    fn column_constant_within_cells_is_rank_deficient() {
        let p = panel_from(|i| (wobble(i, 0), vec![wobble(i, 1), (i % 5) as f64]), &["x", "region_code"]);
        let err = fit_fe_ols(&p, "y", &FitOptions::default()).unwrap_err();
        assert_eq!(err, EconError::RankDeficient(vec!["region_code".into()]));
    }

    #[test]
    fn exact_recovery_and_orthogonal_residuals() {
        let p = panel_from(
            |i| {
                let (x1, x2) = (wobble(i, 1), wobble(i, 2));
                let effect = ((i % 5) * 7 + i / 20) as f64;
                (effect + 2.0 * x1 - x2, vec![x1, x2])
            },
            &["x1", "x2"],
        );
        let fit = fit_fe_ols(&p, "y", &FitOptions { standardize_outcome: false }).unwrap();
        assert!((fit.beta[0] - 2.0).abs() < 1e-10);
        assert!((fit.beta[1] + 1.0).abs() < 1e-10);
        assert!((fit.r2_within - 1.0).abs() < 1e-12);
        assert_eq!(fit.n_groups, 15);
        assert_eq!(fit.n_clusters, 20);
    }

    #[test]
    fn error_paths() {
        let p = panel_from(|i| (wobble(i, 0), vec![wobble(i, 1)]), &["x"]);
        assert!(matches!(fit_fe_ols(&p, "nope", &FitOptions::default()), Err(EconError::UnknownOutcome(_))));
        let mut one_city = PanelDataset::new(vec!["y".into()], vec!["x".into()]);
        for i in 0..10 {
            one_city
                .push(PanelRow { city: "a".into(), year: 2000, region: Region::North, outcomes: vec![wobble(i, 0)], regressors: vec![wobble(i, 1)] })
                .unwrap();
        }
        assert_eq!(fit_fe_ols(&one_city, "y", &FitOptions::default()), Err(EconError::TooFewClusters(1)));
    }
}
