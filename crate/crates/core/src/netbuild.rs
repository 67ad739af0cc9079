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

//! Aggregation of firm-level transfers into yearly city-level flow graphs.
//!
//! The stored orientation is money flow: an edge `u -> v` carries the cents
//! paid by firms of city `u` (customers) to firms of city `v` (suppliers).
//! Transfers between firms of the same city never become edges; they are
//! accumulated as the city's internal volume.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{FirmDirectory, IngestError, TransactionRecord};
use crate::output::CsvOut;
use crate::types::{CityId, Orientation, YearRange};

/// Directed weighted city graph for one period. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGraph {
    period: i32,
    orientation: Orientation,
    nodes: Vec<CityId>,
    edges: BTreeMap<(usize, usize), u64>,
    internal: Vec<u64>,
}

impl FlowGraph {
    pub fn period(&self) -> i32 {
        self.period
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Cities in identifier order; node indices refer to this slice.
    pub fn nodes(&self) -> &[CityId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, city: &CityId) -> Option<usize> {
        self.nodes.binary_search(city).ok()
    }

    /// Edges `(source, target, cents)` ordered by (source, target).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.edges.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn weight(&self, source: usize, target: usize) -> Option<u64> {
        self.edges.get(&(source, target)).copied()
    }

    /// Intra-city cents of node `i`; zero when none was recorded.
    pub fn internal_volume(&self, i: usize) -> u64 {
        self.internal[i]
    }

    pub fn total_edge_weight(&self) -> u128 {
        self.edges.values().map(|&w| w as u128).sum()
    }

    pub fn total_internal_volume(&self) -> u128 {
        self.internal.iter().map(|&w| w as u128).sum()
    }

    /// Edge weight plus internal volume: every accepted cent of the period.
    pub fn total_volume(&self) -> u128 {
        self.total_edge_weight() + self.total_internal_volume()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Incremental constructor, mainly for hand-made graphs.
#[derive(Debug, Clone)]
pub struct FlowGraphBuilder {
    period: i32,
    orientation: Orientation,
    nodes: BTreeSet<CityId>,
    edges: BTreeMap<(CityId, CityId), u64>,
    internal: BTreeMap<CityId, u64>,
}

impl FlowGraphBuilder {
    pub fn new(period: i32) -> Self {
        FlowGraphBuilder {
            period,
            orientation: Orientation::MoneyFlow,
            nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
            internal: BTreeMap::new(),
        }
    }

    pub fn orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn node(mut self, city: impl Into<CityId>) -> Self {
        self.add_node(city.into());
        self
    }

    /// Adds cents flowing `source -> target`. A flow from a city to itself
    /// is recorded as internal volume; zero cents only register the nodes.
    pub fn flow(mut self, source: impl Into<CityId>, target: impl Into<CityId>, cents: u64) -> Self {
        self.add_flow(source.into(), target.into(), cents);
        self
    }

    pub fn internal(mut self, city: impl Into<CityId>, cents: u64) -> Self {
        let city = city.into();
        self.add_flow(city.clone(), city, cents);
        self
    }

    pub fn add_node(&mut self, city: CityId) {
        self.nodes.insert(city);
    }

    pub fn add_flow(&mut self, source: CityId, target: CityId, cents: u64) {
        self.nodes.insert(source.clone());
        self.nodes.insert(target.clone());
        if cents == 0 {
            return;
        }
        if source == target {
            *self.internal.entry(source).or_insert(0) += cents;
        } else {
            *self.edges.entry((source, target)).or_insert(0) += cents;
        }
    }

    pub fn build(self) -> FlowGraph {
        let nodes: Vec<CityId> = self.nodes.into_iter().collect();
        let index = |c: &CityId| nodes.binary_search(c).expect("node registered");
        let edges = self
            .edges
            .iter()
            .map(|((u, v), &w)| ((index(u), index(v)), w))
            .collect();
        let mut internal = vec![0u64; nodes.len()];
        for (c, w) in &self.internal {
            internal[index(c)] = *w;
        }
        FlowGraph { period: self.period, orientation: self.orientation, nodes, edges, internal }
    }
}

/// Builds one money-flow graph per year of `periods`, in year order.
/// Transactions outside the range are ignored; years without transactions
/// produce empty graphs.
pub fn build_flow_graphs(
    txs: &[TransactionRecord],
    firms: &FirmDirectory,
    periods: YearRange,
) -> Result<Vec<FlowGraph>, IngestError> {
    let mut by_year: Vec<Vec<(&CityId, &CityId, u64)>> = vec![Vec::new(); periods.len()];
    for tx in txs {
        let year = tx.year();
        if !periods.contains(year) {
            continue;
        }
        let payer = &firms.get(&tx.payer)?.city;
        let payee = &firms.get(&tx.payee)?.city;
        by_year[(year - periods.first) as usize].push((payer, payee, tx.amount_cents));
    }
    Ok(by_year
        .into_par_iter()
        .enumerate()
        .map(|(k, flows)| aggregate(periods.first + k as i32, &flows))
        .collect())
}

fn aggregate(period: i32, flows: &[(&CityId, &CityId, u64)]) -> FlowGraph {
    let mut pair_sums: HashMap<(&CityId, &CityId), u64> = HashMap::new();
    let mut internal_sums: HashMap<&CityId, u64> = HashMap::new();
    let mut nodes = BTreeSet::new();
    for &(u, v, w) in flows {
        nodes.insert(u);
        nodes.insert(v);
        if u == v {
            *internal_sums.entry(u).or_insert(0) += w;
        } else {
            *pair_sums.entry((u, v)).or_insert(0) += w;
        }
    }
    let nodes: Vec<CityId> = nodes.into_iter().cloned().collect();
    let index = |c: &CityId| nodes.binary_search(c).expect("node registered");
    let edges = pair_sums
        .into_iter()
        .map(|((u, v), w)| ((index(u), index(v)), w))
        .collect();
    let mut internal = vec![0u64; nodes.len()];
    for (c, w) in internal_sums {
        internal[index(c)] = w;
    }
    FlowGraph { period, orientation: Orientation::MoneyFlow, nodes, edges, internal }
}

/// Flips every edge; internal volume is untouched.
pub fn reverse(g: &FlowGraph) -> FlowGraph {
    FlowGraph {
        period: g.period,
        orientation: g.orientation.flipped(),
        nodes: g.nodes.clone(),
        edges: g.edges.iter().map(|(&(u, v), &w)| ((v, u), w)).collect(),
        internal: g.internal.clone(),
    }
}

/// Returns `g` in the requested orientation.
pub fn oriented(g: &FlowGraph, orientation: Orientation) -> FlowGraph {
    if g.orientation == orientation {
        g.clone()
    } else {
        reverse(g)
    }
}

/// Writes `flowgraph_<year>.csv` and `internal_<year>.csv` into `dir`.
pub fn write_flow_graph(g: &FlowGraph, dir: &Path) -> Result<()> {
    let (src, dst) = match g.orientation {
        Orientation::MoneyFlow => ("payer_city", "payee_city"),
        Orientation::Reversed => ("payee_city", "payer_city"),
    };
    let mut out = CsvOut::create(
        dir.join(format!("flowgraph_{}.csv", g.period)),
        &[src, dst, "weight_cents"],
    )?;
    for (u, v, w) in g.edges() {
        out.row([g.nodes[u].as_str(), g.nodes[v].as_str(), &w.to_string()])?;
    }
    out.finish()?;
    let mut out = CsvOut::create(dir.join(format!("internal_{}.csv", g.period)), &["city", "weight_cents"])?;
    for (i, &w) in g.internal.iter().enumerate() {
        if w > 0 {
            out.row([g.nodes[i].as_str(), &w.to_string()])?;
        }
    }
    out.finish()
}

/// Reads a graph dump written by [`write_flow_graph`].
pub fn read_flow_graph(dir: &Path, year: i32) -> Result<FlowGraph> {
    let edges_path = dir.join(format!("flowgraph_{year}.csv"));
    let mut rdr = csv::Reader::from_path(&edges_path).map_err(|e| Error::csv(&edges_path, e))?;
    let header = rdr.headers().map_err(|e| Error::csv(&edges_path, e))?.clone();
    let orientation = match header.get(0) {
        Some("payer_city") => Orientation::MoneyFlow,
        Some("payee_city") => Orientation::Reversed,
        _ => return Err(Error::format(&edges_path, "unexpected header")),
    };
    let mut builder = FlowGraphBuilder::new(year).orientation(orientation);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(&edges_path, e))?;
        let w: u64 = rec[2]
            .parse()
            .map_err(|_| Error::format(&edges_path, format!("bad weight {:?}", &rec[2])))?;
        builder.add_flow(CityId::new(&rec[0]), CityId::new(&rec[1]), w);
    }
    let internal_path = dir.join(format!("internal_{year}.csv"));
    let mut rdr = csv::Reader::from_path(&internal_path).map_err(|e| Error::csv(&internal_path, e))?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(&internal_path, e))?;
        let w: u64 = rec[1]
            .parse()
            .map_err(|_| Error::format(&internal_path, format!("bad weight {:?}", &rec[1])))?;
        let c = CityId::new(&rec[0]);
        builder.add_flow(c.clone(), c, w);
    }
    Ok(builder.build())
}
