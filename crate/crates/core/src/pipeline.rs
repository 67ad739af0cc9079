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

//! Stage runners. Each writes one output directory atomically, with a
//! manifest, and the full pipeline chains them through the filesystem.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::concentration::compute_hhi;
use crate::config::RunConfig;
use crate::dea::{courts_instances, dea_output, read_dea_scores, read_dea_units, write_dea_scores, write_dea_units, DeaScores, SolverOptions};
use crate::econometrics::{
    assemble_panel, fit_fe_ols, read_panel, write_panel, write_regression, write_regression_meta, FitOptions,
    PanelDataset,
};
use crate::error::{Error, Result};
use crate::ingest::{
    filter_public_administration, load_cities, load_covariates, load_firms, load_transactions, CityDirectory,
    CovariatePanel, LoadReport,
};
use crate::netbuild::{build_flow_graphs, oriented, read_flow_graph, write_flow_graph, FlowGraph};
use crate::netmeasure::{compute_measures, measure_values, rank_measure, read_measures, write_measures, MeasureTable};
use crate::output::{config_hash, fmt_float, CsvOut, RunManifest, StagedDir, MANIFEST_FILE};
use crate::report::write_report;
use crate::synth::{generate, CITIES_FILE, COVARIATES_FILE, FIRMS_FILE, TRANSACTIONS_FILE};
use crate::types::YearRange;

pub const PANEL_FILE: &str = "panel.csv";
pub const REGRESSION_META_FILE: &str = "regression_meta.csv";

/// Subdirectories of a full pipeline run, in execution order.
pub const RUN_LAYOUT: [&str; 7] = ["data", "graphs", "measures", "rank", "dea", "regress", "report"];

#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn in_stage<T>(stage: &'static str, r: Result<T>) -> Result<T, StageError> {
    r.map_err(|error| StageError { stage, error })
}

fn manifest_for(command: &str, cfg: &RunConfig) -> RunManifest {
    let mut m = RunManifest::new(command);
    let pairs = cfg.to_pairs();
    m.set("config_hash", config_hash(&pairs));
    for (k, v) in pairs {
        m.set(format!("config:{k}"), v);
    }
    m
}

fn record_rejections<T>(m: &mut RunManifest, name: &str, report: &LoadReport<T>) {
    m.set(format!("rows:{name}"), report.total_rows);
    for (reason, n) in report.rejection_counts() {
        m.set(format!("rejected:{name}:{reason}"), n);
    }
}

/// Writes a synthetic dataset directory.
pub fn run_synth(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    cfg.synth.validate()?;
    let stage = StagedDir::new(out)?;
    generate(&cfg.synth, stage.path())?;
    stage.commit()
}

/// Cities, firms and covariates of a dataset directory.
pub struct Dataset {
    pub cities: CityDirectory,
    pub covariates: CovariatePanel,
}

pub fn load_dataset(dir: &Path, m: &mut RunManifest) -> Result<Dataset> {
    let path = dir.join(CITIES_FILE);
    let cities = load_cities(&path)?;
    m.add_input("cities", &path)?;
    record_rejections(m, "cities", &cities);
    let path = dir.join(COVARIATES_FILE);
    let covariates = load_covariates(&path, &cities.data)?;
    m.add_input("covariates", &path)?;
    record_rejections(m, "covariates", &covariates);
    Ok(Dataset { cities: cities.data, covariates: covariates.data })
}

/// Reads transactions, drops payments to public administration and
/// aggregates one money-flow graph per year.
pub fn load_graphs_from_dataset(dir: &Path, years: YearRange, m: &mut RunManifest) -> Result<Vec<FlowGraph>> {
    let path = dir.join(CITIES_FILE);
    let cities = load_cities(&path)?;
    m.add_input("cities", &path)?;
    let path = dir.join(FIRMS_FILE);
    let firms = load_firms(&path, &cities.data)?;
    m.add_input("firms", &path)?;
    record_rejections(m, "firms", &firms);
    let path = dir.join(TRANSACTIONS_FILE);
    let txs = load_transactions(&path, &firms.data, years)?;
    m.add_input("transactions", &path)?;
    record_rejections(m, "transactions", &txs);
    let kept = filter_public_administration(&txs.data, &firms.data)?;
    m.set("dropped:public_administration", txs.data.len() - kept.len());
    Ok(build_flow_graphs(&kept, &firms.data, years)?)
}

fn graph_years(dir: &Path) -> Result<Vec<i32>> {
    let mut years = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let name = entry.map_err(|e| Error::io(dir, e))?.file_name().to_string_lossy().into_owned();
        if let Some(y) = name.strip_prefix("flowgraph_").and_then(|s| s.strip_suffix(".csv")) {
            if let Ok(y) = y.parse() {
                years.push(y);
            }
        }
    }
    years.sort_unstable();
    Ok(years)
}

/// Graphs from either a dataset directory or a graph dump directory,
/// returned in money-flow orientation.
pub fn load_graphs(dir: &Path, years: YearRange, m: &mut RunManifest) -> Result<Vec<FlowGraph>> {
    if dir.join(TRANSACTIONS_FILE).exists() {
        return load_graphs_from_dataset(dir, years, m);
    }
    let found = graph_years(dir)?;
    if found.is_empty() {
        return Err(Error::format(dir, format!("neither {TRANSACTIONS_FILE} nor flowgraph_<year>.csv files found")));
    }
    let mut graphs = Vec::new();
    for year in found.into_iter().filter(|&y| years.contains(y)) {
        let g = read_flow_graph(dir, year)?;
        m.add_input(&format!("flowgraph_{year}"), &dir.join(format!("flowgraph_{year}.csv")))?;
        graphs.push(oriented(&g, crate::types::Orientation::MoneyFlow));
    }
    Ok(graphs)
}

pub fn run_build(dataset: &Path, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let mut m = manifest_for("build", cfg);
    let graphs = load_graphs_from_dataset(dataset, cfg.years(), &mut m)?;
    let stage = StagedDir::new(out)?;
    for g in &graphs {
        write_flow_graph(g, stage.path())?;
        m.set(format!("edges:{}", g.period()), g.edge_count());
        m.set(format!("nodes:{}", g.period()), g.node_count());
    }
    m.write(stage.path(), MANIFEST_FILE)?;
    stage.commit()
}

pub fn run_measures(input: &Path, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let mut m = manifest_for("measures", cfg);
    let graphs = load_graphs(input, cfg.years(), &mut m)?;
    let table = compute_measures(&graphs, &cfg.measures)?;
    let stage = StagedDir::new(out)?;
    write_measures(&table, stage.path())?;
    for p in &table.periods {
        m.set(format!("pagerank_converged:{}", p.period), p.converged);
    }
    m.write(stage.path(), MANIFEST_FILE)?;
    stage.commit()
}

/// Top-k table for one measure, over one year or every year present.
pub fn run_rank(measures: &Path, measure: &str, year: Option<i32>, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let table = read_measures(measures)?;
    let mut m = manifest_for("rank", cfg);
    m.set("measure", measure).set("top_k", cfg.top_k);
    if let Some(y) = year {
        if table.period(y).is_none() {
            return Err(Error::Config(format!("no measures for year {y} in {}", measures.display())));
        }
        m.set("year", y);
    }
    let stage = StagedDir::new(out)?;
    let mut csv = CsvOut::create(stage.path().join(format!("ranking_{measure}.csv")), &["year", "rank", "city_id", "value"])?;
    for p in table.periods.iter().filter(|p| year.is_none_or(|y| y == p.period)) {
        let values = measure_values(p, measure).ok_or_else(|| Error::Config(format!("unknown measure {measure:?}")))?;
        for e in rank_measure(&values, cfg.top_k) {
            csv.row([p.period.to_string(), e.rank.to_string(), e.city.to_string(), fmt_float(e.value)])?;
        }
    }
    csv.finish()?;
    m.write(stage.path(), MANIFEST_FILE)?;
    stage.commit()
}

/// Scores a single `dea_units.csv` file.
pub fn run_dea_file(units: &Path, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let inst = read_dea_units(units)?;
    let mut m = manifest_for("dea", cfg);
    m.add_input("dea_units", units)?;
    let scores = dea_output(&inst, cfg.returns_to_scale, &SolverOptions::default());
    let stage = StagedDir::new(out)?;
    write_dea_scores(&scores, &stage.path().join("dea_scores.csv"))?;
    m.write(stage.path(), MANIFEST_FILE)?;
    stage.commit()
}

/// Builds state court instances from a dataset's covariates and scores each
/// year.
pub fn run_dea_dataset(dataset: &Path, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let mut m = manifest_for("dea", cfg);
    let data = load_dataset(dataset, &mut m)?;
    let opts = SolverOptions::default();
    m.set("lp_tol", format!("{:e}", opts.tol)).set("lp_max_iter", opts.max_iter);
    let stage = StagedDir::new(out)?;
    for (year, inst) in courts_instances(&data.covariates, &data.cities) {
        write_dea_units(&inst, &stage.path().join(format!("dea_units_{year}.csv")))?;
        let scores = dea_output(&inst, cfg.returns_to_scale, &opts);
        write_dea_scores(&scores, &stage.path().join(format!("dea_scores_{year}.csv")))?;
        let failed = scores.scores.iter().filter(|s| s.efficiency.is_none()).count();
        m.set(format!("units:{year}"), inst.len()).set(format!("failed:{year}"), failed);
    }
    m.write(stage.path(), MANIFEST_FILE)?;
    stage.commit()
}

fn read_dea_dir(dir: &Path, cfg: &RunConfig) -> Result<BTreeMap<i32, DeaScores>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let name = entry.map_err(|e| Error::io(dir, e))?.file_name().to_string_lossy().into_owned();
        if let Some(Ok(y)) = name.strip_prefix("dea_scores_").and_then(|s| s.strip_suffix(".csv")).map(str::parse::<i32>) {
            out.insert(y, read_dea_scores(&dir.join(&name), cfg.returns_to_scale)?);
        }
    }
    Ok(out)
}

/// Fits every outcome of `panel` and writes the coefficient tables.
fn fit_all(panel: &PanelDataset, cfg: &RunConfig, dir: &Path, m: &mut RunManifest) -> Result<()> {
    let opts = FitOptions { standardize_outcome: cfg.standardize_outcome };
    let mut fits = Vec::new();
    for outcome in panel.outcome_names() {
        let fit = fit_fe_ols(panel, outcome, &opts)?;
        write_regression(&fit, dir)?;
        m.set(format!("cr_factor:{outcome}"), fmt_float(fit.cr_factor));
        m.set(format!("singleton_groups:{outcome}"), fit.singleton_groups);
        fits.push(fit);
    }
    write_regression_meta(&fits, &dir.join(REGRESSION_META_FILE))?;
    m.set("r2", "within");
    m.set("cr_rule", "G/(G-1)*(N-1)/(N-K), K includes absorbed region-year groups");
    Ok(())
}

/// Assembles the city panel from a dataset, its measures and its DEA scores,
/// then fits all six outcomes.
pub fn run_regress(dataset: &Path, measures: &Path, dea: &Path, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let mut m = manifest_for("regress", cfg);
    let data = load_dataset(dataset, &mut m)?;
    let table = read_measures(measures)?;
    let scores = read_dea_dir(dea, cfg)?;
    let hhi = compute_hhi(&data.covariates);
    let assembled = assemble_panel(&table, &data.covariates, &hhi, &scores, &data.cities);
    m.set("panel_rows", assembled.panel.len());
    for (reason, n) in &assembled.deletions {
        m.set(format!("deleted:{reason}"), n);
    }
    let stage = StagedDir::new(out)?;
    write_panel(&assembled.panel, &stage.path().join(PANEL_FILE))?;
    fit_all(&assembled.panel, cfg, stage.path(), &mut m)?;
    m.write(stage.path(), MANIFEST_FILE)?;
    stage.commit()
}

/// Fits a panel file written by [`write_panel`].
pub fn run_regress_panel(panel: &Path, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let mut m = manifest_for("regress", cfg);
    m.add_input("panel", panel)?;
    let data = read_panel(panel)?;
    m.set("panel_rows", data.len());
    let stage = StagedDir::new(out)?;
    fit_all(&data, cfg, stage.path(), &mut m)?;
    m.write(stage.path(), MANIFEST_FILE)?;
    stage.commit()
}

pub fn run_report(dataset: &Path, measures: &Path, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let mut m = manifest_for("report", cfg);
    let data = load_dataset(dataset, &mut m)?;
    let table: MeasureTable = read_measures(measures)?;
    let stage = StagedDir::new(out)?;
    let fit = write_report(&table, &data.covariates, &data.cities, stage.path())?;
    m.set("smoothing", "two-year trailing mean");
    m.set("normalization", "max over regions and years");
    m.set("terciles", "per region floor(3k/n) by gdp then city id; national fallback below 3 cities");
    if let Some(f) = fit {
        m.set("scatter_slope", fmt_float(f.slope));
    }
    m.write(stage.path(), MANIFEST_FILE)?;
    stage.commit()
}

/// Synthesizes a dataset and runs every stage under `out`, which appears
/// only once everything succeeded.
pub fn run_pipeline(cfg: &RunConfig, out: &Path) -> Result<PathBuf, StageError> {
    let root = in_stage("setup", StagedDir::new(out))?;
    let dir = |name: &str| root.path().join(name);
    in_stage("synth", run_synth(cfg, &dir("data")))?;
    in_stage("build", run_build(&dir("data"), cfg, &dir("graphs")))?;
    in_stage("measures", run_measures(&dir("graphs"), cfg, &dir("measures")))?;
    in_stage("rank", run_rank(&dir("measures"), &cfg.rank_measure, None, cfg, &dir("rank")))?;
    in_stage("dea", run_dea_dataset(&dir("data"), cfg, &dir("dea")))?;
    in_stage("regress", run_regress(&dir("data"), &dir("measures"), &dir("dea"), cfg, &dir("regress")))?;
    in_stage("report", run_report(&dir("data"), &dir("measures"), cfg, &dir("report")))?;
    let mut m = manifest_for("pipeline", cfg);
    m.set("stages", RUN_LAYOUT.join(" "));
    in_stage("pipeline", m.write(root.path(), MANIFEST_FILE))?;
    in_stage("pipeline", root.commit())
}
