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


//! `citynet` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use citynet_core::pipeline::{
    run_build, run_dea_dataset, run_dea_file, run_measures, run_pipeline, run_rank, run_regress, run_regress_panel,
    run_report, run_synth,
};
use citynet_core::synth::write_known_beta_panel;
use citynet_core::{Error, ErrorKind, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "citynet", version, about = "City-level supply-chain network analytics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// key=value configuration file; flags below take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Study window, e.g. 2003..2012
    #[arg(long, global = true)]
    years: Option<String>,
    #[arg(long, global = true)]
    damping: Option<f64>,
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// money-flow or reversed
    #[arg(long, global = true)]
    orientation: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset directory
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate transactions into per-year city graphs
    Build {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Network measures from a dataset or graph directory
    Measures {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Top-k ranking of one measure
    Rank {
        #[arg(long)]
        measures: PathBuf,
        #[arg(long, default_value = "pagerank_down")]
        measure: String,
        #[arg(long)]
        year: Option<i32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Court efficiency scores, from a units file or a dataset directory
    Dea {
        #[arg(long, conflicts_with = "data", required_unless_present = "data")]
        units: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fixed-effects regressions, from a panel file or assembled from stage outputs
    Regress {
        #[arg(long, conflicts_with_all = ["data", "measures", "dea"], required_unless_present_all = ["data", "measures", "dea"])]
        panel: Option<PathBuf>,
        #[arg(long, requires_all = ["measures", "dea"])]
        data: Option<PathBuf>,
        #[arg(long)]
        measures: Option<PathBuf>,
        #[arg(long)]
        dea: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot-ready series from a pipeline run directory
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Every stage end to end into one run directory
    Pipeline {
        #[arg(long)]
        out: PathBuf,
    },
    /// Panel with known coefficients, for checking the estimator
    KnownBeta {
        /// Comma-separated coefficients
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        beta: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
        #[arg(long, default_value_t = 500)]
        cities: usize,
        #[arg(long, default_value_t = 10)]
        periods: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Build { .. } => "build",
            Command::Measures { .. } => "measures",
            Command::Rank { .. } => "rank",
            Command::Dea { .. } => "dea",
            Command::Regress { .. } => "regress",
            Command::Report { .. } => "report",
            Command::Pipeline { .. } => "pipeline",
            Command::KnownBeta { .. } => "known-beta",
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(y) = &common.years {
        cfg.set("years", y)?;
    }
    if let Some(d) = common.damping {
        cfg.set("damping", &d.to_string())?;
    }
    if let Some(k) = common.top_k {
        cfg.set("top_k", &k.to_string())?;
    }
    if let Some(o) = &common.orientation {
        cfg.set("orientation", o)?;
    }
    Ok(cfg)
}

fn exit_code(kind: ErrorKind) -> ExitCode {
    ExitCode::from(match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    })
}

fn run(command: &Command, cfg: &RunConfig) -> Result<PathBuf, Error> {
    match command {
        Command::Synth { out } => run_synth(cfg, out),
        Command::Build { data, out } => run_build(data, cfg, out),
        Command::Measures { input, out } => run_measures(input, cfg, out),
        Command::Rank { measures, measure, year, out } => run_rank(measures, measure, *year, cfg, out),
        Command::Dea { units: Some(units), out, .. } => run_dea_file(units, cfg, out),
        Command::Dea { data: Some(data), out, .. } => run_dea_dataset(data, cfg, out),
        Command::Dea { .. } => Err(Error::Config("dea needs --units or --data".into())),
        Command::Regress { panel: Some(panel), out, .. } => run_regress_panel(panel, cfg, out),
        Command::Regress { data: Some(data), measures: Some(m), dea: Some(d), out, .. } => run_regress(data, m, d, cfg, out),
        Command::Regress { .. } => Err(Error::Config("regress needs --panel or --data, --measures and --dea".into())),
        Command::Report { run, out } => run_report(&run.join("data"), &run.join("measures"), cfg, out),
        Command::KnownBeta { beta, seed, noise_sd, cities, periods, out } => {
            if !beta.iter().all(|b| b.is_finite()) || noise_sd.is_nan() || *noise_sd < 0.0 {
                return Err(Error::Config("beta must be finite and noise-sd non-negative".into()));
            }
            let stage = citynet_core::output::StagedDir::new(out)?;
            write_known_beta_panel(*seed, beta, *noise_sd, *cities, *periods, stage.path())?;
            stage.commit()
        }
        Command::Pipeline { .. } => unreachable!("handled by caller"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return if usage_error { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let stage = cli.command.name();
    let cfg = match load_config(&cli.common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("citynet: config: {e}");
            return exit_code(e.kind());
        }
    };
    let result = match &cli.command {
        Command::Pipeline { out } => run_pipeline(&cfg, out).map_err(|e| (e.stage, e.error)),
        other => run(other, &cfg).map_err(|e| (stage, e)),
    };
    match result {
        Ok(dir) => {
            println!("{}", display(&dir));
            ExitCode::SUCCESS
        }
        Err((stage, e)) => {
            eprintln!("citynet: {stage}: {e}");
            exit_code(e.kind())
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
