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

//! Loading and validation of transaction records, firm and city
//! directories, and the exogenous covariate panel.
//!
//! Every loader separates structural failures (unreadable file, wrong
//! header, duplicate keys) from per-row rejections. The former abort the
//! load; the latter are collected with their line number and the load
//! carries on.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::types::{CityId, FirmId, Region, YearRange};

pub const TRANSACTIONS_HEADER: [&str; 4] = ["date", "payer_firm", "payee_firm", "amount_cents"];
pub const FIRMS_HEADER: [&str; 3] = ["firm_id", "city_id", "is_public_admin"];
pub const CITIES_HEADER: [&str; 5] = ["city_id", "name", "state", "region", "is_capital"];
pub const COVARIATES_HEADER: [&str; 18] = [
    "city_id",
    "year",
    "gdp_cents",
    "exports_over_gdp",
    "credit_over_gdp",
    "gini",
    "hdi",
    "backlog",
    "expenditures_cents",
    "completed_cases",
    "credit_agri_cents",
    "credit_manu_cents",
    "credit_serv_cents",
    "jobs_manu",
    "jobs_constr",
    "jobs_trade",
    "jobs_serv",
    "jobs_agri",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed csv: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: header mismatch, expected `{expected}`, found `{found}`")]
    HeaderMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: duplicate key {key}")]
    DuplicateKey { path: PathBuf, key: String },
    #[error("unknown firm {0}")]
    UnknownFirm(FirmId),
}

/// Why a data row was not accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    WrongColumnCount { expected: usize, found: usize },
    Unparseable(String),
    InvalidDate(String),
    NonNumeric(&'static str),
    NonPositiveAmount,
    SelfTransfer,
    UnknownFirm(FirmId),
    UnknownCity(CityId),
    OutsideWindow(i32),
    OutOfRange { field: &'static str, range: &'static str },
    Negative(&'static str),
    InvalidFlag(&'static str),
    InvalidRegion(String),
    Missing(&'static str),
}

impl RejectReason {
    /// Reason without row-specific detail, used to tally rejections.
    pub fn label(&self) -> String {
        match self {
            RejectReason::WrongColumnCount { .. } => "wrong column count".into(),
            RejectReason::Unparseable(_) => "unparseable row".into(),
            RejectReason::InvalidDate(_) => "invalid date".into(),
            RejectReason::NonNumeric(f) => format!("non-numeric {f}"),
            RejectReason::NonPositiveAmount => "non-positive amount".into(),
            RejectReason::SelfTransfer => "self transfer".into(),
            RejectReason::UnknownFirm(_) => "unknown firm".into(),
            RejectReason::UnknownCity(_) => "unknown city".into(),
            RejectReason::OutsideWindow(_) => "outside study window".into(),
            RejectReason::OutOfRange { field, range } => format!("{field} out of {range}"),
            RejectReason::Negative(f) => format!("negative {f}"),
            RejectReason::InvalidFlag(f) => format!("invalid {f}"),
            RejectReason::InvalidRegion(_) => "invalid region".into(),
            RejectReason::Missing(f) => format!("missing {f}"),
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::WrongColumnCount { expected, found } => {
                write!(f, "wrong column count (expected {expected}, found {found})")
            }
            RejectReason::Unparseable(msg) => write!(f, "unparseable row: {msg}"),
            RejectReason::InvalidDate(s) => write!(f, "invalid date {s:?}"),
            RejectReason::UnknownFirm(id) => write!(f, "unknown firm {id}"),
            RejectReason::UnknownCity(id) => write!(f, "unknown city {id}"),
            RejectReason::OutsideWindow(y) => write!(f, "outside study window (year {y})"),
            RejectReason::InvalidRegion(s) => write!(f, "invalid region {s:?}"),
            other => f.write_str(&other.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: RejectReason,
}

/// Accepted data plus the rows that were turned away.
#[derive(Debug, Clone)]
pub struct LoadReport<T> {
    pub data: T,
    pub rejections: Vec<Rejection>,
    pub total_rows: usize,
}

impl<T> LoadReport<T> {
    pub fn accepted_rows(&self) -> usize {
        self.total_rows - self.rejections.len()
    }

    pub fn rejection_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.rejections {
            *counts.entry(r.reason.label()).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionRecord {
    pub date: NaiveDate,
    pub payer: FirmId,
    pub payee: FirmId,
    pub amount_cents: u64,
}

impl TransactionRecord {
    pub fn year(&self) -> i32 {
        self.date.year()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmInfo {
    pub city: CityId,
    pub public_admin: bool,
}

#[derive(Debug, Clone, Default)]
pub struct FirmDirectory {
    firms: HashMap<FirmId, FirmInfo>,
}

impl FirmDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails if the firm is already present.
    pub fn insert(&mut self, firm: FirmId, info: FirmInfo) -> Result<(), FirmId> {
        use std::collections::hash_map::Entry;
        match self.firms.entry(firm) {
            Entry::Occupied(e) => Err(e.key().clone()),
            Entry::Vacant(e) => {
                e.insert(info);
                Ok(())
            }
        }
    }

    pub fn get(&self, firm: &FirmId) -> Result<&FirmInfo, IngestError> {
        self.firms
            .get(firm)
            .ok_or_else(|| IngestError::UnknownFirm(firm.clone()))
    }

    pub fn contains(&self, firm: &FirmId) -> bool {
        self.firms.contains_key(firm)
    }

    pub fn len(&self) -> usize {
        self.firms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firms.is_empty()
    }
}

impl FromIterator<(FirmId, FirmInfo)> for FirmDirectory {
    /// Later duplicates overwrite earlier ones; use [`FirmDirectory::insert`]
    /// when duplicates must be detected.
    fn from_iter<I: IntoIterator<Item = (FirmId, FirmInfo)>>(iter: I) -> Self {
        FirmDirectory { firms: iter.into_iter().collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CityInfo {
    pub name: String,
    pub state: String,
    pub region: Region,
    pub capital: bool,
}

#[derive(Debug, Clone, Default)]
pub struct CityDirectory {
    cities: BTreeMap<CityId, CityInfo>,
}

impl CityDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, city: CityId, info: CityInfo) -> Result<(), CityId> {
        use std::collections::btree_map::Entry;
        match self.cities.entry(city) {
            Entry::Occupied(e) => Err(e.key().clone()),
            Entry::Vacant(e) => {
                e.insert(info);
                Ok(())
            }
        }
    }

    pub fn get(&self, city: &CityId) -> Option<&CityInfo> {
        self.cities.get(city)
    }

    /// Cities in identifier order.
    pub fn iter(&self) -> impl Iterator<Item = (&CityId, &CityInfo)> {
        self.cities.iter()
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }
}

/// One (city, year) observation of the exogenous covariates. Absent cells
/// are `None`, never zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CovariateRow {
    pub city: CityId,
    pub year: i32,
    pub gdp_cents: Option<u64>,
    pub exports_over_gdp: Option<f64>,
    pub credit_over_gdp: Option<f64>,
    pub gini: Option<f64>,
    pub hdi: Option<f64>,
    pub backlog: Option<u64>,
    pub expenditures_cents: Option<u64>,
    pub completed_cases: Option<u64>,
    /// Agriculture, manufacturing, services.
    pub sector_credit_cents: [Option<u64>; 3],
    /// Manufacturing, construction, trade, services, agriculture.
    pub sector_jobs: [Option<u64>; 5],
}

impl CovariateRow {
    pub fn new(city: CityId, year: i32) -> Self {
        CovariateRow { city, year, ..Default::default() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CovariatePanel {
    rows: BTreeMap<(CityId, i32), CovariateRow>,
}

impl CovariatePanel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, row: CovariateRow) -> Result<(), (CityId, i32)> {
        let key = (row.city.clone(), row.year);
        if self.rows.contains_key(&key) {
            return Err(key);
        }
        self.rows.insert(key, row);
        Ok(())
    }

    pub fn get(&self, city: &CityId, year: i32) -> Option<&CovariateRow> {
        self.rows.get(&(city.clone(), year))
    }

    /// Rows ordered by (city, year).
    pub fn rows(&self) -> impl Iterator<Item = &CovariateRow> {
        self.rows.values()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn open_table(path: &Path, header: &[&str]) -> Result<csv::Reader<File>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Unreadable {
        path: path.to_owned(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let found = rdr
        .headers()
        .map_err(|source| csv_error(path, source))?
        .iter()
        .map(str::trim)
        .collect::<Vec<_>>();
    if found != header {
        return Err(IngestError::HeaderMismatch {
            path: path.to_owned(),
            expected: header.join(","),
            found: found.join(","),
        });
    }
    Ok(rdr)
}

fn csv_error(path: &Path, source: csv::Error) -> IngestError {
    match source.kind() {
        csv::ErrorKind::Io(_) => {
            let csv::ErrorKind::Io(io) = source.into_kind() else { unreachable!() };
            IngestError::Unreadable { path: path.to_owned(), source: io }
        }
        _ => IngestError::Csv { path: path.to_owned(), source },
    }
}

/// Drives `row` over every data record. Records the csv layer cannot decode
/// become per-row rejections; I/O failures abort.
fn for_each_row<F>(path: &Path, header: &[&str], mut row: F) -> Result<(usize, Vec<Rejection>), IngestError>
where
    F: FnMut(&csv::StringRecord) -> Result<(), RejectReason>,
{
    let mut rdr = open_table(path, header)?;
    let mut rejections = Vec::new();
    let mut total = 0usize;
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                total += 1;
                let line = record.position().map_or(0, |p| p.line());
                let outcome = if record.len() != header.len() {
                    Err(RejectReason::WrongColumnCount { expected: header.len(), found: record.len() })
                } else {
                    row(&record)
                };
                if let Err(reason) = outcome {
                    rejections.push(Rejection { line, reason });
                }
            }
            Err(err) => {
                if matches!(err.kind(), csv::ErrorKind::Io(_)) {
                    return Err(csv_error(path, err));
                }
                total += 1;
                let line = err.position().map_or(0, |p| p.line());
                rejections.push(Rejection { line, reason: RejectReason::Unparseable(err.to_string()) });
            }
        }
    }
    Ok((total, rejections))
}

fn parse_flag(s: &str, field: &'static str) -> Result<bool, RejectReason> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(RejectReason::InvalidFlag(field)),
    }
}

fn parse_count(s: &str, field: &'static str) -> Result<Option<u64>, RejectReason> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: i64 = s.parse().map_err(|_| RejectReason::NonNumeric(field))?;
    if v < 0 {
        return Err(RejectReason::Negative(field));
    }
    Ok(Some(v as u64))
}

fn parse_ratio(
    s: &str,
    field: &'static str,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<Option<f64>, RejectReason> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| RejectReason::NonNumeric(field))?;
    if !v.is_finite() || v < lo || v > hi {
        return Err(RejectReason::OutOfRange { field, range });
    }
    Ok(Some(v))
}

/// Loads `transactions.csv`. Rows that fail validation are rejected with
/// their line number; accepted rows keep file order.
pub fn load_transactions(
    path: impl AsRef<Path>,
    firms: &FirmDirectory,
    window: YearRange,
) -> Result<LoadReport<Vec<TransactionRecord>>, IngestError> {
    let path = path.as_ref();
    let mut txs = Vec::new();
    let (total_rows, rejections) = for_each_row(path, &TRANSACTIONS_HEADER, |rec| {
        let date_s = rec[0].trim();
        let date = NaiveDate::parse_from_str(date_s, "%Y-%m-%d")
            .map_err(|_| RejectReason::InvalidDate(date_s.to_owned()))?;
        let amount: i64 = rec[3]
            .trim()
            .parse()
            .map_err(|_| RejectReason::NonNumeric("amount"))?;
        if amount <= 0 {
            return Err(RejectReason::NonPositiveAmount);
        }
        let payer = FirmId::new(rec[1].trim());
        let payee = FirmId::new(rec[2].trim());
        if payer == payee {
            return Err(RejectReason::SelfTransfer);
        }
        for firm in [&payer, &payee] {
            if !firms.contains(firm) {
                return Err(RejectReason::UnknownFirm(firm.clone()));
            }
        }
        if !window.contains(date.year()) {
            return Err(RejectReason::OutsideWindow(date.year()));
        }
        txs.push(TransactionRecord { date, payer, payee, amount_cents: amount as u64 });
        Ok(())
    })?;
    Ok(LoadReport { data: txs, rejections, total_rows })
}

/// Keeps the records whose payee is not a public-administration body.
pub fn filter_public_administration(
    txs: &[TransactionRecord],
    firms: &FirmDirectory,
) -> Result<Vec<TransactionRecord>, IngestError> {
    let mut kept = Vec::with_capacity(txs.len());
    for tx in txs {
        firms.get(&tx.payer)?;
        if !firms.get(&tx.payee)?.public_admin {
            kept.push(tx.clone());
        }
    }
    Ok(kept)
}

pub fn load_cities(path: impl AsRef<Path>) -> Result<LoadReport<CityDirectory>, IngestError> {
    let path = path.as_ref();
    let mut dir = CityDirectory::new();
    let mut duplicate = None;
    let (total_rows, rejections) = for_each_row(path, &CITIES_HEADER, |rec| {
        let id = CityId::new(rec[0].trim());
        if id.0.is_empty() {
            return Err(RejectReason::Missing("city_id"));
        }
        let region_s = rec[3].trim();
        let region = region_s
            .parse::<Region>()
            .map_err(|_| RejectReason::InvalidRegion(region_s.to_owned()))?;
        let capital = parse_flag(&rec[4], "is_capital")?;
        let info = CityInfo {
            name: rec[1].trim().to_owned(),
            state: rec[2].trim().to_owned(),
            region,
            capital,
        };
        if let Err(id) = dir.insert(id, info) {
            duplicate.get_or_insert(id);
        }
        Ok(())
    })?;
    if let Some(id) = duplicate {
        return Err(IngestError::DuplicateKey { path: path.to_owned(), key: id.0 });
    }
    Ok(LoadReport { data: dir, rejections, total_rows })
}

/// Loads `firms.csv`; firms pointing at a city missing from `cities` are
/// rejected.
pub fn load_firms(
    path: impl AsRef<Path>,
    cities: &CityDirectory,
) -> Result<LoadReport<FirmDirectory>, IngestError> {
    let path = path.as_ref();
    let mut dir = FirmDirectory::new();
    let mut duplicate = None;
    let (total_rows, rejections) = for_each_row(path, &FIRMS_HEADER, |rec| {
        let firm = FirmId::new(rec[0].trim());
        if firm.0.is_empty() {
            return Err(RejectReason::Missing("firm_id"));
        }
        let city = CityId::new(rec[1].trim());
        if cities.get(&city).is_none() {
            return Err(RejectReason::UnknownCity(city));
        }
        let public_admin = parse_flag(&rec[2], "is_public_admin")?;
        if let Err(id) = dir.insert(firm, FirmInfo { city, public_admin }) {
            duplicate.get_or_insert(id);
        }
        Ok(())
    })?;
    if let Some(id) = duplicate {
        return Err(IngestError::DuplicateKey { path: path.to_owned(), key: id.0 });
    }
    Ok(LoadReport { data: dir, rejections, total_rows })
}

/// Loads `covariates.csv`. Empty cells are recorded as absent. A repeated
/// (city, year) key is fatal even when one of the rows would be rejected.
pub fn load_covariates(
    path: impl AsRef<Path>,
    cities: &CityDirectory,
) -> Result<LoadReport<CovariatePanel>, IngestError> {
    let path = path.as_ref();
    let mut panel = CovariatePanel::new();
    let mut seen = std::collections::HashSet::new();
    let mut duplicate: Option<(CityId, i32)> = None;
    let (total_rows, rejections) = for_each_row(path, &COVARIATES_HEADER, |rec| {
        let city = CityId::new(rec[0].trim());
        let year: i32 = rec[1].trim().parse().map_err(|_| RejectReason::NonNumeric("year"))?;
        if !seen.insert((city.clone(), year)) {
            duplicate.get_or_insert((city.clone(), year));
            return Ok(());
        }
        if cities.get(&city).is_none() {
            return Err(RejectReason::UnknownCity(city));
        }
        let mut row = CovariateRow::new(city, year);
        row.gdp_cents = parse_count(&rec[2], "gdp")?;
        row.exports_over_gdp = parse_ratio(&rec[3], "exports_over_gdp", 0.0, f64::INFINITY, "[0,inf)")?;
        row.credit_over_gdp = parse_ratio(&rec[4], "credit_over_gdp", 0.0, f64::INFINITY, "[0,inf)")?;
        row.gini = parse_ratio(&rec[5], "gini", 0.0, 1.0, "[0,1]")?;
        row.hdi = parse_ratio(&rec[6], "hdi", 0.0, 1.0, "[0,1]")?;
        row.backlog = parse_count(&rec[7], "backlog")?;
        row.expenditures_cents = parse_count(&rec[8], "expenditures")?;
        row.completed_cases = parse_count(&rec[9], "completed_cases")?;
        const CREDIT: [&str; 3] = ["credit_agri", "credit_manu", "credit_serv"];
        for (k, field) in CREDIT.iter().enumerate() {
            row.sector_credit_cents[k] = parse_count(&rec[10 + k], field)?;
        }
        const JOBS: [&str; 5] = ["jobs_manu", "jobs_constr", "jobs_trade", "jobs_serv", "jobs_agri"];
        for (k, field) in JOBS.iter().enumerate() {
            row.sector_jobs[k] = parse_count(&rec[13 + k], field)?;
        }
        panel.insert(row).expect("key uniqueness checked above");
        Ok(())
    })?;
    if let Some((city, year)) = duplicate {
        return Err(IngestError::DuplicateKey {
            path: path.to_owned(),
            key: format!("({city}, {year})"),
        });
    }
    Ok(LoadReport { data: panel, rejections, total_rows })
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn file_digest(path: impl AsRef<Path>) -> Result<String, IngestError> {
    use sha2::{Digest, Sha256};
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|source| IngestError::Unreadable {
        path: path.to_owned(),
        source,
    })?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|source| IngestError::Unreadable {
            path: path.to_owned(),
            source,
        })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    fn firms() -> FirmDirectory {
        let mut d = FirmDirectory::new();
        for (f, c, p) in [("a", "1", false), ("b", "2", false), ("g", "2", true), ("h", "1", true)] {
            d.insert(FirmId::new(f), FirmInfo { city: CityId::new(c), public_admin: p }).unwrap();
        }
        d
    }

    fn window() -> YearRange {
        YearRange::new(2003, 2014).unwrap()
    }

    #[test]
    fn negative_amount_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "t.csv",
            "date,payer_firm,payee_firm,amount_cents\n2004-01-02,a,b,100\n2004-01-03,b,a,-5\n2004-02-01,a,b,7\n",
        );
        let rep = load_transactions(&p, &firms(), window()).unwrap();
        assert_eq!(rep.data.len(), 2);
        assert_eq!(rep.rejections.len(), 1);
        assert_eq!(rep.rejections[0].line, 3);
        assert_eq!(rep.rejections[0].reason.label(), "non-positive amount");
        assert_eq!(rep.data[0].amount_cents, 100);
        assert_eq!(rep.data[1].amount_cents, 7);
    }

    #[test]
    fn empty_file_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "date,payer_firm,payee_firm,amount_cents\n");
        let rep = load_transactions(&p, &firms(), window()).unwrap();
        assert!(rep.data.is_empty());
        assert!(rep.rejections.is_empty());
        assert_eq!(rep.total_rows, 0);
    }

    #[test]
    fn every_rejection_reason_is_tallied() {
        let dir = tempfile::tempdir().unwrap();
        let body = "date,payer_firm,payee_firm,amount_cents\n\
                    2004-01-02,a,b\n\
                    2004-13-02,a,b,5\n\
                    2004-01-02,a,b,12.5\n\
                    2004-01-02,a,b,0\n\
                    2004-01-02,a,a,5\n\
                    2004-01-02,a,zz,5\n\
                    1999-01-02,a,b,5\n\
                    2005-06-30,b,a,9\n";
        let p = write(&dir, "t.csv", body);
        let rep = load_transactions(&p, &firms(), window()).unwrap();
        assert_eq!(rep.total_rows, 8);
        assert_eq!(rep.accepted_rows(), 1);
        assert_eq!(rep.accepted_rows() + rep.rejections.len(), rep.total_rows);
        let counts = rep.rejection_counts();
        for label in [
            "wrong column count",
            "invalid date",
            "non-numeric amount",
            "non-positive amount",
            "self transfer",
            "unknown firm",
            "outside study window",
        ] {
            assert_eq!(counts.get(label), Some(&1), "{label}");
        }
        let lines: Vec<u64> = rep.rejections.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn wrong_header_and_missing_file_are_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "date,from,to,amount\n");
        assert!(matches!(
            load_transactions(&p, &firms(), window()),
            Err(IngestError::HeaderMismatch { .. })
        ));
        let missing = dir.path().join("nope.csv");
        let err = load_transactions(&missing, &firms(), window()).unwrap_err();
        assert!(matches!(err, IngestError::Unreadable { .. }));
        assert!(err.to_string().contains("nope.csv"));
    }

    fn tx(payer: &str, payee: &str, amount: u64) -> TransactionRecord {
        TransactionRecord {
            date: NaiveDate::from_ymd_opt(2005, 3, 1).unwrap(),
            payer: FirmId::new(payer),
            payee: FirmId::new(payee),
            amount_cents: amount,
        }
    }

    #[test]
    fn public_admin_filter() {
        let f = firms();
        let all_public = vec![tx("a", "g", 1), tx("b", "h", 2)];
        assert!(filter_public_administration(&all_public, &f).unwrap().is_empty());

        let none_public = vec![tx("a", "b", 1), tx("b", "a", 2)];
        assert_eq!(filter_public_administration(&none_public, &f).unwrap(), none_public);

        let mixed = vec![
            tx("a", "b", 1),
            tx("a", "g", 2),
            tx("b", "a", 3),
            tx("h", "b", 4),
            tx("b", "h", 5),
            tx("g", "a", 6),
        ];
        let kept = filter_public_administration(&mixed, &f).unwrap();
        let amounts: Vec<u64> = kept.iter().map(|t| t.amount_cents).collect();
        assert_eq!(amounts, vec![1, 3, 4, 6]);
        assert_eq!(filter_public_administration(&kept, &f).unwrap(), kept);

        assert!(matches!(
            filter_public_administration(&[tx("a", "q", 1)], &f),
            Err(IngestError::UnknownFirm(_))
        ));
    }

    fn cities() -> CityDirectory {
        let mut d = CityDirectory::new();
        for id in ["1", "2"] {
            d.insert(
                CityId::new(id),
                CityInfo { name: format!("C{id}"), state: "SP".into(), region: Region::Southeast, capital: false },
            )
            .unwrap();
        }
        d
    }

    const COV_HEADER: &str = "city_id,year,gdp_cents,exports_over_gdp,credit_over_gdp,gini,hdi,backlog,expenditures_cents,completed_cases,credit_agri_cents,credit_manu_cents,credit_serv_cents,jobs_manu,jobs_constr,jobs_trade,jobs_serv,jobs_agri\n";

    #[test]
    fn covariate_gini_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{COV_HEADER}1,2005,100,0.1,0.2,1.2,0.7,1,2,3,1,1,1,1,1,1,1,1\n2,2005,100,0.1,0.2,0.5,,1,2,3,1,1,1,1,1,1,1,1\n"
        );
        let p = write(&dir, "c.csv", &body);
        let rep = load_covariates(&p, &cities()).unwrap();
        assert_eq!(rep.data.len(), 1);
        assert_eq!(rep.rejections[0].reason.label(), "gini out of [0,1]");
        let row = rep.data.get(&CityId::new("2"), 2005).unwrap();
        assert_eq!(row.hdi, None);
        assert_eq!(row.gini, Some(0.5));
    }

    #[test]
    fn covariate_duplicate_key_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{COV_HEADER}1,2005,100,0.1,0.2,0.3,0.7,1,2,3,1,1,1,1,1,1,1,1\n1,2005,200,0.1,0.2,0.3,0.7,1,2,3,1,1,1,1,1,1,1,1\n"
        );
        let p = write(&dir, "c.csv", &body);
        let err = load_covariates(&p, &cities()).unwrap_err();
        assert!(err.to_string().contains("(1, 2005)"), "{err}");
    }

    #[test]
    fn city_and_firm_directories() {
        let dir = tempfile::tempdir().unwrap();
        let c = write(
            &dir,
            "cities.csv",
            "city_id,name,state,region,is_capital\n1,Alpha,SP,Southeast,1\n2,Beta,AM,Atlantis,0\n3,Gamma,AM,North,0\n",
        );
        let rep = load_cities(&c).unwrap();
        assert_eq!(rep.data.len(), 2);
        assert_eq!(rep.rejections[0].reason.label(), "invalid region");
        assert!(rep.data.get(&CityId::new("1")).unwrap().capital);

        let f = write(&dir, "firms.csv", "firm_id,city_id,is_public_admin\nx,1,0\ny,9,0\nz,3,2\nw,3,1\n");
        let frep = load_firms(&f, &rep.data).unwrap();
        assert_eq!(frep.data.len(), 2);
        assert_eq!(frep.rejection_counts().get("unknown city"), Some(&1));
        assert_eq!(frep.rejection_counts().get("invalid is_public_admin"), Some(&1));

        let dup = write(&dir, "dup.csv", "city_id,name,state,region,is_capital\n1,A,SP,South,0\n1,B,SP,South,0\n");
        assert!(matches!(load_cities(&dup), Err(IngestError::DuplicateKey { .. })));
    }
}
