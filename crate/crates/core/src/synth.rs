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

//! Seeded synthetic stand-in for the confidential transaction data.
//!
//! Cities sit in five unit squares laid side by side, one per region. Firm
//! sizes are Pareto distributed and firms land in cities in proportion to a
//! heavy-tailed city weight. Each year every live firm pays a Poisson number
//! of counterparties, chosen in proportion to their size and damped by
//! distance. Covariates are drawn around each city's aggregate firm size.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal, Pareto, Poisson};
use thiserror::Error;

use crate::econometrics::{write_panel, PanelDataset, PanelRow};
use crate::error::Result;
use crate::ingest::{CITIES_HEADER, COVARIATES_HEADER, FIRMS_HEADER, TRANSACTIONS_HEADER};
use crate::output::{fmt_float, CsvOut, RunManifest};
use crate::types::{CityId, Region, YearRange};

pub const TRANSACTIONS_FILE: &str = "transactions.csv";
pub const FIRMS_FILE: &str = "firms.csv";
pub const CITIES_FILE: &str = "cities.csv";
pub const COVARIATES_FILE: &str = "covariates.csv";
pub const SYNTH_MANIFEST_FILE: &str = "synth_manifest.csv";
pub const KNOWN_BETA_PANEL_FILE: &str = "panel.csv";
pub const KNOWN_BETA_MANIFEST_FILE: &str = "known_beta_manifest.csv";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
}

const STATES: [(Region, &[&str]); 5] = [
    (Region::North, &["AC", "AM", "AP", "PA", "RO", "RR", "TO"]),
    (Region::Northeast, &["AL", "BA", "CE", "MA", "PB", "PE", "PI", "RN", "SE"]),
    (Region::Midwest, &["DF", "GO", "MS", "MT"]),
    (Region::Southeast, &["ES", "MG", "RJ", "SP"]),
    (Region::South, &["PR", "RS", "SC"]),
];

// Rough share of municipalities per region.
const REGION_SHARE: [f64; 5] = [0.08, 0.32, 0.09, 0.30, 0.21];

const CITY_WEIGHT_SHAPE: f64 = 1.1;
const PUBLIC_ADMIN_SHARE: f64 = 0.02;
const GDP_CENTS_PER_SIZE: f64 = 2.0e9;
const GDP_GROWTH: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_cities: usize,
    pub n_firms: usize,
    pub years: YearRange,
    pub pareto_alpha: f64,
    pub gravity_decay: f64,
    pub intra_city_share: f64,
    pub recession_year: Option<i32>,
    pub recession_kill_fraction: f64,
    pub mean_tx_per_firm_year: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_cities: 150,
            n_firms: 5000,
            years: YearRange { first: 2003, last: 2012 },
            pareto_alpha: 1.5,
            gravity_decay: 1.5,
            intra_city_share: 0.3,
            recession_year: Some(2008),
            recession_kill_fraction: 0.4,
            mean_tx_per_firm_year: 1.5,
        }
    }
}

impl SynthConfig {
    pub const KEYS: [&'static str; 10] = [
        "seed",
        "n_cities",
        "n_firms",
        "years",
        "pareto_alpha",
        "gravity_decay",
        "intra_city_share",
        "recession_year",
        "recession_kill_fraction",
        "mean_tx_per_firm_year",
    ];

    /// Applies one `key=value` setting. Returns `Ok(false)` for keys that do
    /// not belong to the generator.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, SynthError> {
        let bad = |what: &str| SynthError::InvalidConfig(format!("{key}: {what} {value:?}"));
        let value = value.trim();
        match key {
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer, got"))?,
            "n_cities" => self.n_cities = value.parse().map_err(|_| bad("expected a count, got"))?,
            "n_firms" => self.n_firms = value.parse().map_err(|_| bad("expected a count, got"))?,
            "years" => self.years = value.parse().map_err(|_| bad("expected a year range, got"))?,
            "pareto_alpha" => self.pareto_alpha = value.parse().map_err(|_| bad("expected a number, got"))?,
            "gravity_decay" => self.gravity_decay = value.parse().map_err(|_| bad("expected a number, got"))?,
            "intra_city_share" => self.intra_city_share = value.parse().map_err(|_| bad("expected a number, got"))?,
            "recession_year" => {
                self.recession_year = match value {
                    "" | "none" => None,
                    v => Some(v.parse().map_err(|_| bad("expected a year or none, got"))?),
                }
            }
            "recession_kill_fraction" => {
                self.recession_kill_fraction = value.parse().map_err(|_| bad("expected a number, got"))?
            }
            "mean_tx_per_firm_year" => {
                self.mean_tx_per_firm_year = value.parse().map_err(|_| bad("expected a number, got"))?
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let recession = self.recession_year.map(|y| y.to_string()).unwrap_or_else(|| "none".into());
        [
            ("seed", self.seed.to_string()),
            ("n_cities", self.n_cities.to_string()),
            ("n_firms", self.n_firms.to_string()),
            ("years", self.years.to_string()),
            ("pareto_alpha", fmt_float(self.pareto_alpha)),
            ("gravity_decay", fmt_float(self.gravity_decay)),
            ("intra_city_share", fmt_float(self.intra_city_share)),
            ("recession_year", recession),
            ("recession_kill_fraction", fmt_float(self.recession_kill_fraction)),
            ("mean_tx_per_firm_year", fmt_float(self.mean_tx_per_firm_year)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.n_cities < Region::ALL.len() {
            return fail(format!("n_cities must be at least {}, got {}", Region::ALL.len(), self.n_cities));
        }
        if self.n_firms < self.n_cities {
            return fail(format!("n_firms ({}) must be at least n_cities ({})", self.n_firms, self.n_cities));
        }
        if !(self.pareto_alpha.is_finite() && self.pareto_alpha > 1.0) {
            return fail(format!("pareto_alpha must exceed 1, got {}", self.pareto_alpha));
        }
        if !(self.gravity_decay.is_finite() && self.gravity_decay >= 0.0) {
            return fail(format!("gravity_decay must be non-negative, got {}", self.gravity_decay));
        }
        if !(0.0..=1.0).contains(&self.intra_city_share) {
            return fail(format!("intra_city_share must lie in [0, 1], got {}", self.intra_city_share));
        }
        if !(0.0..=1.0).contains(&self.recession_kill_fraction) {
            return fail(format!("recession_kill_fraction must lie in [0, 1], got {}", self.recession_kill_fraction));
        }
        if !(self.mean_tx_per_firm_year.is_finite() && self.mean_tx_per_firm_year > 0.0) {
            return fail(format!("mean_tx_per_firm_year must be positive, got {}", self.mean_tx_per_firm_year));
        }
        if let Some(y) = self.recession_year {
            if !self.years.contains(y) {
                return fail(format!("recession_year {y} lies outside {}", self.years));
            }
        }
        Ok(())
    }
}

impl fmt::Display for SynthConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_pairs() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct City {
    id: CityId,
    state: &'static str,
    region: Region,
    x: f64,
    y: f64,
    capital: bool,
}

#[derive(Debug, Clone)]
struct Firm {
    city: usize,
    size: f64,
    public_admin: bool,
}

/// Everything the generator knows about its own output.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub transactions: u64,
    pub ledger_total_cents: u128,
    pub transactions_per_year: BTreeMap<i32, u64>,
    pub killed_firms: usize,
    pub public_admin_firms: usize,
}

fn firm_id(i: usize) -> String {
    format!("F{i:05}")
}

fn place_cities(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<City> {
    let share = WeightedIndex::new(REGION_SHARE).expect("static weights");
    let mut cities: Vec<City> = (0..cfg.n_cities)
        .map(|i| {
            let r = if i < Region::ALL.len() { i } else { share.sample(rng) };
            let (region, states) = STATES[r];
            City {
                id: CityId::new(format!("C{i:04}")),
                state: states[rng.random_range(0..states.len())],
                region,
                x: r as f64 + rng.random::<f64>(),
                y: rng.random::<f64>(),
                capital: false,
            }
        })
        .collect();
    cities.sort_by(|a, b| a.id.cmp(&b.id));
    cities
}

fn city_distance(a: &City, b: &City) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Counterparty sampler for one set of live firms.
struct Market {
    by_city: Vec<Option<(Vec<usize>, WeightedIndex<f64>)>>,
    destinations: Vec<Option<WeightedIndex<f64>>>,
}

impl Market {
    fn new(cities: &[City], firms: &[Firm], alive: &[bool], decay: f64) -> Market {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); cities.len()];
        for (i, f) in firms.iter().enumerate() {
            if alive[i] {
                members[f.city].push(i);
            }
        }
        let mass: Vec<f64> = members.iter().map(|m| m.iter().map(|&i| firms[i].size).sum()).collect();
        let by_city = members
            .into_iter()
            .map(|m| {
                if m.is_empty() {
                    return None;
                }
                let w = WeightedIndex::new(m.iter().map(|&i| firms[i].size)).expect("positive sizes");
                Some((m, w))
            })
            .collect();
        let destinations = cities
            .iter()
            .enumerate()
            .map(|(c, from)| {
                let weights = cities.iter().enumerate().map(|(d, to)| {
                    if d == c {
                        0.0
                    } else {
                        mass[d] * (-decay * city_distance(from, to)).exp()
                    }
                });
                WeightedIndex::new(weights).ok()
            })
            .collect();
        Market { by_city, destinations }
    }

    fn firm_in(&self, city: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
        self.by_city[city].as_ref().map(|(m, w)| m[w.sample(rng)])
    }

    fn counterparty(&self, payer: usize, city: usize, intra: f64, rng: &mut ChaCha8Rng) -> Option<usize> {
        if rng.random::<f64>() < intra {
            if let Some(f) = self.firm_in(city, rng) {
                if f != payer {
                    return Some(f);
                }
            }
        }
        let d = self.destinations[city].as_ref()?.sample(rng);
        self.firm_in(d, rng)
    }
}

struct Population {
    cities: Vec<City>,
    firms: Vec<Firm>,
    city_mass: Vec<f64>,
}

fn populate(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Population {
    let mut cities = place_cities(cfg, rng);
    let city_weight = Pareto::new(1.0, CITY_WEIGHT_SHAPE).expect("valid shape");
    let weights: Vec<f64> = cities.iter().map(|_| city_weight.sample(rng)).collect();
    let home = WeightedIndex::new(&weights).expect("positive weights");
    let firm_size = Pareto::new(1.0, cfg.pareto_alpha).expect("validated shape");
    let firms: Vec<Firm> = (0..cfg.n_firms)
        .map(|i| Firm {
            city: if i < cities.len() { i } else { home.sample(rng) },
            size: firm_size.sample(rng),
            public_admin: rng.random::<f64>() < PUBLIC_ADMIN_SHARE,
        })
        .collect();

    let mut city_mass = vec![0.0; cities.len()];
    for f in &firms {
        city_mass[f.city] += f.size;
    }
    let mut best: BTreeMap<&str, usize> = BTreeMap::new();
    for (c, city) in cities.iter().enumerate() {
        let slot = best.entry(city.state).or_insert(c);
        if city_mass[c] > city_mass[*slot] {
            *slot = c;
        }
    }
    for c in best.into_values().collect::<Vec<_>>() {
        cities[c].capital = true;
    }
    Population { cities, firms, city_mass }
}

/// The planted firm sizes, indexed like the firm identifiers `F00000..`.
pub fn firm_sizes(cfg: &SynthConfig) -> Result<Vec<f64>, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(populate(cfg, &mut rng).firms.into_iter().map(|f| f.size).collect())
}

/// Writes `transactions.csv`, `firms.csv`, `cities.csv`, `covariates.csv` and
/// `synth_manifest.csv` into `dir`, which must exist.
pub fn generate(cfg: &SynthConfig, dir: &Path) -> Result<SynthSummary> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let Population { cities, firms, city_mass } = populate(cfg, &mut rng);

    // Firms ordered by size; the smallest die first.
    let mut by_size: Vec<usize> = (0..firms.len()).collect();
    by_size.sort_by(|&a, &b| firms[a].size.total_cmp(&firms[b].size).then(a.cmp(&b)));
    let killed = (cfg.recession_kill_fraction * firms.len() as f64).floor() as usize;
    let mut survivor = vec![true; firms.len()];
    for &i in &by_size[..killed] {
        survivor[i] = false;
    }

    let mean_size = firms.iter().map(|f| f.size).sum::<f64>() / firms.len() as f64;
    let amount = LogNormal::new(11.0, 1.2).expect("valid parameters");
    let all_alive = vec![true; firms.len()];
    let before = Market::new(&cities, &firms, &all_alive, cfg.gravity_decay);
    let after = cfg.recession_year.map(|_| Market::new(&cities, &firms, &survivor, cfg.gravity_decay));

    let mut tx_out = CsvOut::create(dir.join(TRANSACTIONS_FILE), &TRANSACTIONS_HEADER)?;
    let mut summary = SynthSummary {
        transactions: 0,
        ledger_total_cents: 0,
        transactions_per_year: BTreeMap::new(),
        killed_firms: if cfg.recession_year.is_some() { killed } else { 0 },
        public_admin_firms: firms.iter().filter(|f| f.public_admin).count(),
    };
    let mut alive_mass: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for year in cfg.years.years() {
        let post = cfg.recession_year.is_some_and(|r| year >= r);
        let (market, alive) = match (&after, post) {
            (Some(m), true) => (m, survivor.as_slice()),
            _ => (&before, all_alive.as_slice()),
        };
        let mut mass = vec![0.0; cities.len()];
        for (i, f) in firms.iter().enumerate() {
            if alive[i] {
                mass[f.city] += f.size;
            }
        }
        alive_mass.insert(year, mass);

        let days = if NaiveDate::from_ymd_opt(year, 12, 31).expect("valid date").leap_year() { 366 } else { 365 };
        let mut rows: Vec<(u32, usize, usize, u64)> = Vec::new();
        for (i, f) in firms.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            let lambda = cfg.mean_tx_per_firm_year * f.size / mean_size;
            let n = Poisson::new(lambda).expect("positive rate").sample(&mut rng) as u64;
            for _ in 0..n {
                let Some(payee) = market.counterparty(i, f.city, cfg.intra_city_share, &mut rng) else {
                    continue;
                };
                let day = rng.random_range(1..=days);
                let cents: f64 = amount.sample(&mut rng);
                let cents = cents.round().max(1.0) as u64;
                rows.push((day, i, payee, cents));
            }
        }
        rows.sort_by_key(|&(day, payer, _, _)| (day, payer));
        for (day, payer, payee, cents) in &rows {
            let date = NaiveDate::from_yo_opt(year, *day).expect("valid ordinal");
            tx_out.row([
                date.format("%Y-%m-%d").to_string(),
                firm_id(*payer),
                firm_id(*payee),
                cents.to_string(),
            ])?;
            summary.ledger_total_cents += *cents as u128;
        }
        summary.transactions += rows.len() as u64;
        summary.transactions_per_year.insert(year, rows.len() as u64);
    }
    tx_out.finish()?;

    let mut out = CsvOut::create(dir.join(FIRMS_FILE), &FIRMS_HEADER)?;
    for (i, f) in firms.iter().enumerate() {
        out.row([firm_id(i).as_str(), cities[f.city].id.as_str(), if f.public_admin { "1" } else { "0" }])?;
    }
    out.finish()?;

    let mut out = CsvOut::create(dir.join(CITIES_FILE), &CITIES_HEADER)?;
    for c in &cities {
        let name = format!("City {}", &c.id.as_str()[1..]);
        out.row([c.id.as_str(), &name, c.state, c.region.as_str(), if c.capital { "1" } else { "0" }])?;
    }
    out.finish()?;

    write_covariates(cfg, &cities, &city_mass, &alive_mass, &mut rng, dir)?;

    let mut manifest = RunManifest::new("synth");
    for (k, v) in cfg.to_pairs() {
        manifest.set(format!("config:{k}"), v);
    }
    manifest
        .set("transactions", summary.transactions)
        .set("ledger_total_cents", summary.ledger_total_cents)
        .set("firms", firms.len())
        .set("cities", cities.len())
        .set("killed_firms", summary.killed_firms)
        .set("public_admin_firms", summary.public_admin_firms);
    for (year, n) in &summary.transactions_per_year {
        manifest.set(format!("transactions:{year}"), n);
    }
    manifest.write(dir, SYNTH_MANIFEST_FILE)?;
    Ok(summary)
}

/// Covariates track each city's live firm mass. GDP is proportional to the
/// live mass with trend growth and noise, HDI rises with log GDP, court
/// workload scales with GDP, and sector splits come from random shares.
fn write_covariates(
    cfg: &SynthConfig,
    cities: &[City],
    initial_mass: &[f64],
    alive_mass: &BTreeMap<i32, Vec<f64>>,
    rng: &mut ChaCha8Rng,
    dir: &Path,
) -> Result<()> {
    let noise: Normal<f64> = Normal::new(0.0, 0.05).expect("valid sd");
    let max_log = initial_mass.iter().map(|m| (m * GDP_CENTS_PER_SIZE).ln()).fold(f64::MIN, f64::max);
    // City traits held fixed across years.
    let traits: Vec<[f64; 4]> = cities
        .iter()
        .map(|_| [rng.random_range(0.0..0.25), rng.random_range(0.1..0.6), rng.random_range(0.4..0.65), rng.random_range(0.6..1.4)])
        .collect();
    let mut out = CsvOut::create(dir.join(COVARIATES_FILE), &COVARIATES_HEADER)?;
    for year in cfg.years.years() {
        let t = (year - cfg.years.first) as f64;
        let live = &alive_mass[&year];
        for (c, city) in cities.iter().enumerate() {
            let [exports, credit, gini, court] = traits[c];
            let mass = 0.5 * initial_mass[c] + 0.5 * live[c];
            let gdp = mass * GDP_CENTS_PER_SIZE * (GDP_GROWTH * t).exp() * Distribution::<f64>::sample(&noise, rng).exp();
            let hdi = (0.55 + 0.35 * (gdp.ln() / max_log).min(1.0).powi(4) + noise.sample(rng)).clamp(0.3, 0.95);
            let backlog = (gdp / 2.0e8 * court).max(1.0);
            let expend = gdp * 0.002 * (1.0 + noise.sample(rng));
            let completed = backlog * rng.random_range(0.3..0.9) / court;
            let credit_total = gdp * credit;
            let jobs_total = gdp / 4.0e7;
            let credit_split = shares(rng, 3);
            let job_split = shares(rng, 5);
            let mut fields = vec![
                city.id.to_string(),
                year.to_string(),
                (gdp.round() as u64).to_string(),
                fmt_float(exports * (1.0 + noise.sample(rng)).max(0.0)),
                fmt_float(credit),
                fmt_float(gini + noise.sample(rng) * 0.1),
                fmt_float(hdi),
                (backlog.round() as u64).to_string(),
                (expend.round().max(1.0) as u64).to_string(),
                (completed.round() as u64).to_string(),
            ];
            fields.extend(credit_split.iter().map(|s| ((s * credit_total).round() as u64).to_string()));
            fields.extend(job_split.iter().map(|s| ((s * jobs_total).round() as u64).to_string()));
            out.row(&fields)?;
        }
    }
    out.finish()
}

fn shares(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

/// Panel with region-by-year effects, independent standard normal
/// regressors `x1..xp` and outcome `y = effect + x·beta + noise`.
pub fn generate_known_beta_panel(seed: u64, beta: &[f64], noise_sd: f64, n_cities: usize, n_years: usize) -> PanelDataset {
    assert!(beta.iter().all(|b| b.is_finite()), "beta must be finite");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let names: Vec<String> = (1..=beta.len()).map(|k| format!("x{k}")).collect();
    let mut panel = PanelDataset::new(vec!["y".into()], names);
    let first_year = 2000;
    let mut effects: BTreeMap<(Region, usize), f64> = BTreeMap::new();
    for r in Region::ALL {
        for t in 0..n_years {
            effects.insert((r, t), 3.0 * std.sample(&mut rng));
        }
    }
    for c in 0..n_cities {
        let region = Region::ALL[c % Region::ALL.len()];
        for t in 0..n_years {
            let x: Vec<f64> = beta.iter().map(|_| std.sample(&mut rng)).collect();
            let signal: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let y = effects[&(region, t)] + signal + noise_sd * std.sample(&mut rng);
            panel
                .push(PanelRow {
                    city: CityId::new(format!("K{c:05}")),
                    year: first_year + t as i32,
                    region,
                    outcomes: vec![y],
                    regressors: x,
                })
                .expect("finite draws");
        }
    }
    panel
}

/// Writes the known-beta panel and a manifest holding the true coefficients.
pub fn write_known_beta_panel(
    seed: u64,
    beta: &[f64],
    noise_sd: f64,
    n_cities: usize,
    n_years: usize,
    dir: &Path,
) -> Result<PanelDataset> {
    let panel = generate_known_beta_panel(seed, beta, noise_sd, n_cities, n_years);
    write_panel(&panel, &dir.join(KNOWN_BETA_PANEL_FILE))?;
    let mut manifest = RunManifest::new("known-beta");
    manifest
        .set("seed", seed)
        .set("noise_sd", fmt_float(noise_sd))
        .set("n_cities", n_cities)
        .set("n_years", n_years);
    for (k, b) in beta.iter().enumerate() {
        manifest.set(format!("beta:x{}", k + 1), format!("{b:?}"));
    }
    manifest.write(dir, KNOWN_BETA_MANIFEST_FILE)?;
    Ok(panel)
}
