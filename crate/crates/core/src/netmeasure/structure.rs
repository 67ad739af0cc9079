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

//! Local and global structure: density, degrees and strengths, degree
//! assortativity and the diameter of the largest connected component.

use std::collections::VecDeque;

use super::MeasureError;
use crate::netbuild::FlowGraph;

/// `E / (N (N - 1))` over directed inter-city edges.
pub fn density(g: &FlowGraph) -> Result<f64, MeasureError> {
    let n = g.node_count();
    if n < 2 {
        return Err(MeasureError::TooFewNodes { needed: 2, found: n });
    }
    Ok(g.edge_count() as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// Per-node link counts and volumes, internal volume excluded.
///
/// On a money-flow graph `in_degree` counts customer cities and
/// `total_received` is the in-strength; on a reversed graph the roles swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeFlows {
    pub in_degree: usize,
    pub out_degree: usize,
    pub total_received: u64,
    pub total_paid: u64,
}

pub fn degrees_strengths(g: &FlowGraph) -> Vec<NodeFlows> {
    let mut flows = vec![NodeFlows::default(); g.node_count()];
    for (u, v, w) in g.edges() {
        flows[u].out_degree += 1;
        flows[u].total_paid += w;
        flows[v].in_degree += 1;
        flows[v].total_received += w;
    }
    flows
}

/// Which degree is read at each end of an edge `u -> v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DegreeMode {
    /// out-degree of `u` against in-degree of `v`.
    #[default]
    OutIn,
    OutOut,
    InIn,
    InOut,
}

impl DegreeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DegreeMode::OutIn => "out-in",
            DegreeMode::OutOut => "out-out",
            DegreeMode::InIn => "in-in",
            DegreeMode::InOut => "in-out",
        }
    }
}

impl std::str::FromStr for DegreeMode {
    type Err = crate::error::ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "out-in" => Ok(DegreeMode::OutIn),
            "out-out" => Ok(DegreeMode::OutOut),
            "in-in" => Ok(DegreeMode::InIn),
            "in-out" => Ok(DegreeMode::InOut),
            other => Err(crate::error::ParseValueError(format!("unknown degree mode {other:?}"))),
        }
    }
}

/// Unweighted directed degree assortativity: the Pearson correlation, over
/// all edges `u -> v`, between the chosen degree of `u` and of `v`.
pub fn assortativity(g: &FlowGraph, mode: DegreeMode) -> Result<f64, MeasureError> {
    if g.edge_count() < 2 {
        return Err(MeasureError::TooFewEdges { needed: 2, found: g.edge_count() });
    }
    let flows = degrees_strengths(g);
    let pick = |f: &NodeFlows, out: bool| if out { f.out_degree } else { f.in_degree } as f64;
    let (src_out, dst_out) = match mode {
        DegreeMode::OutIn => (true, false),
        DegreeMode::OutOut => (true, true),
        DegreeMode::InIn => (false, false),
        DegreeMode::InOut => (false, true),
    };
    let pairs: Vec<(f64, f64)> = g
        .edges()
        .map(|(u, v, _)| (pick(&flows[u], src_out), pick(&flows[v], dst_out)))
        .collect();
    let m = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MeasureError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Largest hop distance inside the largest connected component of the
/// undirected, unweighted projection. Component ties go to the one holding
/// the lowest node index.
pub fn diameter(g: &FlowGraph) -> Result<usize, MeasureError> {
    let n = g.node_count();
    if n == 0 {
        return Err(MeasureError::EmptyGraph);
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v, _) in g.edges() {
        adj[u].push(v);
        adj[v].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let mut component = vec![usize::MAX; n];
    let mut largest: Vec<usize> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let members = bfs_order(&adj, start);
        for &m in &members {
            component[m] = start;
        }
        if members.len() > largest.len() {
            largest = members;
        }
    }

    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut best = 0;
    for &source in &largest {
        for &m in &largest {
            dist[m] = usize::MAX;
        }
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            best = best.max(dist[u]);
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(best)
}

fn bfs_order(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut seen = vec![false; adj.len()];
    let mut order = vec![start];
    seen[start] = true;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                order.push(v);
            }
        }
    }
    order
}
