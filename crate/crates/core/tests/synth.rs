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


use std::path::Path;

use citynet_core::ingest::{filter_public_administration, load_cities, load_covariates, load_firms, load_transactions};
use citynet_core::synth::{firm_sizes, generate, SynthConfig, SynthError, TRANSACTIONS_FILE};
use citynet_core::{Error, YearRange};

fn small(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        n_cities: 20,
        n_firms: 300,
        years: YearRange::new(2001, 2006).unwrap(),
        recession_year: Some(2004),
        ..SynthConfig::default()
    }
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let mut rdr = csv::Reader::from_path(dir.join("synth_manifest.csv")).unwrap();
    rdr.records().map(|r| r.unwrap()).find(|r| &r[0] == key).map(|r| r[1].to_owned()).unwrap()
}

#[test]
fn ledger_total_matches_independent_sum() {
    let dir = tempfile::tempdir().unwrap();
    let summary = generate(&small(1), dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(TRANSACTIONS_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().skip(1).collect();
    let total: u128 = lines.iter().map(|l| l.rsplit(',').next().unwrap().parse::<u128>().unwrap()).sum();
    assert_eq!(lines.len() as u64, summary.transactions);
    assert_eq!(total, summary.ledger_total_cents);
    assert_eq!(manifest_value(dir.path(), "ledger_total_cents"), total.to_string());
}

#[test]
fn generated_files_load_cleanly() {
    let cfg = small(2);
    let dir = tempfile::tempdir().unwrap();
    generate(&cfg, dir.path()).unwrap();
    let cities = load_cities(dir.path().join("cities.csv")).unwrap();
    assert!(cities.rejections.is_empty());
    assert_eq!(cities.data.len(), cfg.n_cities);
    let firms = load_firms(dir.path().join("firms.csv"), &cities.data).unwrap();
    assert!(firms.rejections.is_empty());
    let cov = load_covariates(dir.path().join("covariates.csv"), &cities.data).unwrap();
    assert!(cov.rejections.is_empty());
    assert_eq!(cov.data.len(), cfg.n_cities * cfg.years.len());
    let txs = load_transactions(dir.path().join(TRANSACTIONS_FILE), &firms.data, cfg.years).unwrap();
    assert!(txs.rejections.is_empty());
    let kept = filter_public_administration(&txs.data, &firms.data).unwrap();
    assert!(kept.iter().all(|t| !firms.data.get(&t.payee).unwrap().public_admin));
}

#[test]
fn pareto_tail_slope_is_recovered() {
    let cfg = SynthConfig { n_firms: 5000, pareto_alpha: 1.5, ..SynthConfig::default() };
    let mut sizes = firm_sizes(&cfg).unwrap();
    sizes.sort_by(|a, b| b.total_cmp(a));
    // rank-size regression over the upper tail: ln(rank) = c - alpha ln(size)
    let tail = 500;
    let pts: Vec<(f64, f64)> = sizes[..tail].iter().enumerate().map(|(k, s)| (s.ln(), ((k + 1) as f64).ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((-slope - 1.5).abs() < 0.3, "tail exponent {}", -slope);
}

#[test]
fn without_deaths_activity_is_stationary() {
    let cfg = SynthConfig { recession_kill_fraction: 0.0, ..small(3) };
    let dir = tempfile::tempdir().unwrap();
    let s = generate(&cfg, dir.path()).unwrap();
    let (pre, post): (Vec<f64>, Vec<f64>) = {
        let split = |after: bool| s.transactions_per_year.iter().filter(|(y, _)| (**y >= 2004) == after).map(|(_, n)| *n as f64).collect();
        (split(false), split(true))
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, b) = (mean(&pre), mean(&post));
    // yearly counts are sums of Poisson draws; allow five standard errors
    let se = (a / pre.len() as f64 + b / post.len() as f64).sqrt();
    assert!((a - b).abs() < 5.0 * se, "pre {a} post {b}");
    assert_eq!(s.killed_firms, 0);
}

#[test]
fn recession_removes_the_smallest_firms() {
    let cfg = small(4);
    let dir = tempfile::tempdir().unwrap();
    let s = generate(&cfg, dir.path()).unwrap();
    assert_eq!(s.killed_firms, (0.4 * cfg.n_firms as f64) as usize);
    let sizes = firm_sizes(&cfg).unwrap();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[a].total_cmp(&sizes[b]));
    let dead: std::collections::HashSet<String> = order[..s.killed_firms].iter().map(|i| format!("F{i:05}")).collect();
    let text = std::fs::read_to_string(dir.path().join(TRANSACTIONS_FILE)).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[0] >= "2004" {
            assert!(!dead.contains(f[1]) && !dead.contains(f[2]), "{line}");
        }
    }
}

#[test]
fn invalid_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { pareto_alpha: 0.9, ..small(5) };
    let err = generate(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, Error::Synth(SynthError::InvalidConfig(_))));
    assert_eq!(err.kind(), citynet_core::ErrorKind::Usage);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
