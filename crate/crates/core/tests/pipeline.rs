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

use citynet_core::pipeline::{run_measures, run_pipeline, run_rank, run_regress_panel, RUN_LAYOUT};
use citynet_core::synth::write_known_beta_panel;
use citynet_core::{ErrorKind, RunConfig, YearRange};

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.synth.n_cities = 30;
    cfg.synth.n_firms = 800;
    cfg.synth.years = YearRange::new(2005, 2008).unwrap();
    cfg.synth.recession_year = Some(2007);
    cfg
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

#[test]
fn full_run_writes_every_declared_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    run_pipeline(&small_config(), &out).unwrap();
    for stage in RUN_LAYOUT {
        let names = files(&out.join(stage));
        let manifests = names.iter().filter(|n| n.ends_with("manifest.csv")).count();
        assert_eq!(manifests, 1, "{stage}: {names:?}");
    }
    assert!(out.join("manifest.csv").exists());
    for y in 2005..=2008 {
        for f in [format!("graphs/flowgraph_{y}.csv"), format!("measures/measures_{y}.csv"), format!("dea/dea_scores_{y}.csv")] {
            assert!(out.join(&f).exists(), "{f}");
        }
    }
    for outcome in citynet_core::econometrics::OUTCOMES {
        assert!(out.join(format!("regress/regression_{outcome}.csv")).exists());
    }
    for f in ["centrality_by_region.csv", "global_series.csv", "dependence_by_size.csv", "centrality_gdp_scatter.csv", "centrality_gdp_fit.csv"] {
        assert!(out.join("report").join(f).exists(), "{f}");
    }
    assert!(out.join("rank/ranking_pagerank_down.csv").exists());
    let leftovers: Vec<String> = files(tmp.path()).into_iter().filter(|n| n.starts_with('.')).collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn failed_run_leaves_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let mut cfg = small_config();
    cfg.measures.pagerank.damping = 1.5;
    let err = run_pipeline(&cfg, &out).unwrap_err();
    assert_eq!(err.stage, "measures");
    assert_eq!(err.error.kind(), ErrorKind::Numerical);
    assert!(!out.exists());
    assert!(files(tmp.path()).is_empty());
}

#[test]
fn missing_input_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let err = run_measures(&tmp.path().join("nowhere"), &small_config(), &tmp.path().join("m")).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Data);
    assert!(err.to_string().contains("nowhere"), "{err}");
}

#[test]
fn reversed_orientation_swaps_centralities() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config();
    run_pipeline(&cfg, &tmp.path().join("run")).unwrap();
    let mut rev = cfg.clone();
    rev.measures.orientation = citynet_core::netmeasure::OrientationChoice(citynet_core::Orientation::Reversed);
    let graphs = tmp.path().join("run/graphs");
    run_measures(&graphs, &rev, &tmp.path().join("rev")).unwrap();
    let a = citynet_core::netmeasure::read_measures(&tmp.path().join("run/measures")).unwrap();
    let b = citynet_core::netmeasure::read_measures(&tmp.path().join("rev")).unwrap();
    for (p, q) in a.periods.iter().zip(&b.periods) {
        for (x, y) in p.rows.iter().zip(&q.rows) {
            assert_eq!(x.pagerank_down, y.pagerank_up);
            assert_eq!(x.in_degree, y.out_degree);
            assert_eq!((x.doec, x.does), (y.doec, y.does));
        }
    }
}

#[test]
fn rank_honours_top_k_and_year() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    run_pipeline(&cfg, &tmp.path().join("run")).unwrap();
    cfg.top_k = 5;
    let out = tmp.path().join("rank");
    run_rank(&tmp.path().join("run/measures"), "in_degree", Some(2006), &cfg, &out).unwrap();
    let text = std::fs::read_to_string(out.join("ranking_in_degree.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.starts_with("2006,")));
    let err = run_rank(&tmp.path().join("run/measures"), "bogus", None, &cfg, &tmp.path().join("r2")).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Usage);
    assert!(!tmp.path().join("r2").exists());
}

#[test]
fn known_beta_panel_regression_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    write_known_beta_panel(9, &[2.0, -1.0], 0.0, 40, 5, tmp.path()).unwrap();
    let mut cfg = small_config();
    cfg.standardize_outcome = false;
    let out = tmp.path().join("fit");
    run_regress_panel(&tmp.path().join("panel.csv"), &cfg, &out).unwrap();
    let mut rdr = csv::Reader::from_path(out.join("regression_y.csv")).unwrap();
    let betas: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert!((betas[0] - 2.0).abs() < 1e-8 && (betas[1] + 1.0).abs() < 1e-8, "{betas:?}");
}
